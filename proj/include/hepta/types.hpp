#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace hepta {

using Real = double;
using Complex = std::complex<Real>;

using Vec2 = Eigen::Vector2d;
using Vec2c = Eigen::Vector2cd;
using Mat2 = Eigen::Matrix2d;
using Mat2c = Eigen::Matrix2cd;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr Real pi = 3.14159265358979323846;

// Common base of the library's error types.
struct HeptaError : std::runtime_error {
  explicit HeptaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on malformed user input (bad sigma, H signs, characteristic labels...).
struct InputError : HeptaError {
  explicit InputError(const std::string& msg) : HeptaError(msg) {}
};

// Thrown when an iteration fails to converge within its budget.
struct ConvergenceError : HeptaError {
  explicit ConvergenceError(const std::string& msg) : HeptaError(msg) {}
};

// Thrown when a quantity leaves its admissible domain (period matrix outside
// the cone, zeros off their ovals, evaluation at a pole...).
struct DomainError : HeptaError {
  explicit DomainError(const std::string& msg) : HeptaError(msg) {}
};

}  // namespace hepta
