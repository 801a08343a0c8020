#pragma once

#include "hepta/types.hpp"

#include <initializer_list>
#include <vector>

namespace hepta {

// Integer theta characteristic [2*eps, 2*eps'] with entries in {0,1}.
// Addition is componentwise mod 2; parity of eps^t * eps' splits the 16
// characteristics into 10 even and 6 odd ones.
struct ThetaChar {
  Eigen::Vector2i a{0, 0};  // 2*eps
  Eigen::Vector2i b{0, 0};  // 2*eps'

  bool odd() const { return ((a[0] * b[0] + a[1] * b[1]) % 2) != 0; }

  friend ThetaChar operator+(const ThetaChar& l, const ThetaChar& r) {
    ThetaChar s;
    s.a << (l.a[0] + r.a[0]) % 2, (l.a[1] + r.a[1]) % 2;
    s.b << (l.b[0] + r.b[0]) % 2, (l.b[1] + r.b[1]) % 2;
    return s;
  }
  friend bool operator==(const ThetaChar& l, const ThetaChar& r) {
    return l.a == r.a && l.b == r.b;
  }
};

// Characteristic of the Abel-Jacobi image of branch point p_s, s in 1..6.
ThetaChar branch_char(int s);

// Mod-2 sum of branch characteristics, e.g. char_sum({3,5}).
ThetaChar char_sum(std::initializer_list<int> branches);
ThetaChar char_sum(const std::vector<int>& branches);

// u(p_s) as a point of C^2: half-period from the branch table.
Vec2c half_period(int s, const Mat2& omega);

// Trihedral cone 0 < omega12 < min(omega11, omega22), omega SPD.
bool in_cone(const Mat2& omega);
void require_spd(const Mat2& omega);

// Smallest R with exp(-pi*lambda_min*(R-1)^2)*(2R+1)^2 < tol.
int truncation_radius(const Mat2& omega, Real tol);

// Representative v - i*omega*n - np with omega^{-1} Im and Re components in
// [-1/2, 1/2).
struct LatticeReduction {
  Vec2c v_red;
  Eigen::Vector2i n;
  Eigen::Vector2i np;
};
LatticeReduction lattice_reduce(const Vec2c& v, const Mat2& omega);

// Distance from a - b to the nearest vector of the lattice iΩZ² + Z²
// (exact for small distances; used for mod-lattice equality checks).
Real lattice_distance(const Vec2c& a, const Vec2c& b, const Mat2& omega);

struct ThetaResult {
  Complex value{0, 0};
  Vec2c grad = Vec2c::Zero();
  Mat2c hess = Mat2c::Zero();
};

// theta(u, i*omega) = sum_m exp(2 pi i m^t u - pi m^t omega m).
Complex theta(const Vec2c& u, const Mat2& omega, Real tol = 1e-14);

// theta with characteristic via the exponential prefactor identity.
Complex theta_char(const ThetaChar& chr, const Vec2c& u, const Mat2& omega,
                   Real tol = 1e-14);

// Value with derivatives up to `order` (0..2) in the vector argument.
ThetaResult theta_char_full(const ThetaChar& chr, const Vec2c& u,
                            const Mat2& omega, int order = 2,
                            Real tol = 1e-14);

// The six odd integer characteristics (fixed order: char_sum({s,3,5}), s=1..6).
std::vector<ThetaChar> odd_chars();

}  // namespace hepta
