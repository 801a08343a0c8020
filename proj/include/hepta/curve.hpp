#pragma once

#include <array>

#include "hepta/types.hpp"

namespace hepta {

// Point of the curve y^2 = prod(x - x_s). Real x is understood as the limit
// from the upper half-plane (boundary of sheet 0); sheet 1 flips y's sign.
struct CurvePoint {
  Complex x;
  int sheet = 0;
};

struct CurveData {
  std::array<Real, 6> x{};        // branch points, strictly increasing
  Mat2 C = Mat2::Identity();      // du_j = (C(0,j)*x + C(1,j)) dx / y
  Mat2 omega = Mat2::Identity();  // Omega = Im(Pi), period matrix is i*Omega
  Vec2 u0 = Vec2::Zero();         // AJ image of p0 = infinity, 2*u0 in (0,1)^2
  Vec2 u0_raw = Vec2::Zero();     // raw west-ray integral before reduction
  Real tol = 1e-11;               // quadrature self-consistency tolerance
};

// a-periods of x^k dx/y over real-oval cycles, normalization matrix C,
// b-periods over coreal cycles, and the marked-point image u0.
CurveData period_basis(const std::array<Real, 6>& x, Real tol = 1e-11,
                       Real gap = 1e-9);

// Fixed symmetric-curve continuation start.
CurveData initial_curve_guess();

// Sheet-0 value of y; for real x, the upper-side limit.
Complex curve_y(const CurveData& c, Complex x);

// Path integral of the normalized differential basis from p1 = (x1, 0).
Vec2c abel_jacobi(const CurveData& c, const CurvePoint& p);

// Integral of dw = A * prod_j (x - x_sigma_j) dx / y along the real axis
// between xa and xb, which must lie in the closure of one gap between
// consecutive branch points (or on one of the two rays through infinity).
Complex cs_quadrature(const CurveData& c, const std::array<int, 3>& sigma,
                      Real A, Real xa, Real xb);

// Integral of the normalized basis du along one of the rays through
// infinity on sheet 0: from x1 to -infinity (west) or x6 to +infinity.
Vec2c ray_du(const CurveData& c, bool west);

}  // namespace hepta
