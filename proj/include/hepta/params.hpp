#pragma once

#include <array>

#include "hepta/types.hpp"

namespace hepta {

// Solved parameters of the auxiliary curve and mapping function: the real
// period matrix (the Riemann matrix is i*omega), the marked point u0 (image
// of the point at infinity), the scalar coefficients of the mapping
// differential, and the three divisor points where dw vanishes. For a plain
// heptagon the zeros sit at the half-periods of the intruding corners; when
// slits open they move into the Jacobian along i*omega directions.
struct AuxParams {
  Mat2 omega = Mat2::Identity();
  Vec2 u0 = Vec2::Zero();
  Real c = 1.0;
  Real c1 = 0.0;
  Real c2 = 0.0;
  Real h = 0.0;
  std::array<Vec2c, 3> zeros{Vec2c::Zero(), Vec2c::Zero(), Vec2c::Zero()};
  Real residual_norm = 0.0;
};

}  // namespace hepta
