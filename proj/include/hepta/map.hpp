#pragma once

#include <vector>

#include "hepta/curve.hpp"
#include "hepta/params.hpp"
#include "hepta/polygon.hpp"
#include "hepta/theta.hpp"

namespace hepta {

// Immutable evaluation context for the mapping pair (w, x) restricted to the
// divisor {theta[35](u, i*omega) = 0}. Construction chains the six vertex
// images once; all evaluations afterwards are pure.
struct MapContext {
  PolygonSpec spec;
  AuxParams params;
  ThetaChar chi;                    // the odd characteristic [35]
  Vec2c u0c = Vec2c::Zero();        // marked point as a complex vector
  Vec2c t = Vec2c::Zero();          // grad theta[35] at u0
  std::array<Vec2c, 6> u_half{};    // half-periods u(p_s), s = 1..6
  std::array<Complex, 6> w_half{};  // vertex images under w, w_half[0] = 0
  Real theta_tol = 1e-14;
};

MapContext make_context(const PolygonSpec& spec, const AuxParams& params,
                        Real theta_tol = 1e-14);

// Side lengths H_1..H_5 realized by the current parameters, in closed form
// (linear in c, c1, c2, h). At a solved parameter set they equal spec.H.
std::array<Real, 5> side_lengths(const MapContext& ctx);

// w(u): odd, anchored so that w(u(p1)) = 0. The log branch is tracked
// continuously from the nearest vertex image, which is itself chained from
// the anchor, so values across calls are consistent.
Complex w_of_u(const MapContext& ctx, const Vec2c& u);
Vec2c grad_w_of_u(const MapContext& ctx, const Vec2c& u);

// Continuation of w along the straight segment from u_from (where the value
// is w_from) to u_to, with adaptive branch tracking. Cheap and robust when
// the endpoints are close; used for marching along paths.
Complex w_continue(const MapContext& ctx, const Vec2c& u_from, Complex w_from,
                   const Vec2c& u_to);

// The {2,3,5} and {6,3,5} representations of w agree wherever theta[35]
// vanishes at u0, but away from that manifold each has its own surface of
// spurious singularities where a denominator theta vanishes. Solvers iterate
// off the manifold, so they pass the representation explicitly, chosen to
// keep the denominators large along their own evaluation points.
ThetaChar safe_rep(const MapContext& ctx, const Vec2c& a, const Vec2c& b);
Vec2c grad_w_of_u(const MapContext& ctx, const Vec2c& u, const ThetaChar& eps);
Complex w_continue(const MapContext& ctx, const Vec2c& u_from, Complex w_from,
                   const Vec2c& u_to, const ThetaChar& eps);

// Normalized projection to the half-plane chart: even in u, invariant under
// the period lattice, 0 at u(p_j), 1 at u(p_l), poles at +-u0. Indices must
// be distinct, in 1..6, with j < l; k is the auxiliary index of the
// denominator characteristic.
Complex x_of_u(const MapContext& ctx, const Vec2c& u, int j, int l, int k);

// Default chart (j, l) = (1, 6) with k switched automatically between 2 and
// 4 to stay away from the indeterminate points of each representation.
Complex projection(const MapContext& ctx, const Vec2c& u);
Vec2c grad_projection(const MapContext& ctx, const Vec2c& u);

// 1/x and its gradient, stable near the poles +-u0; used to solve for points
// near infinity.
Complex reciprocal_projection(const MapContext& ctx, const Vec2c& u);
Vec2c grad_reciprocal_projection(const MapContext& ctx, const Vec2c& u);

// A divisor point found by the mapping solves, with both images attached.
struct MapPoint {
  Vec2c u = Vec2c::Zero();
  Complex w{0.0, 0.0};
  Complex x{0.0, 0.0};
  Real residual = 0.0;
  int iterations = 0;
};

// Precomputed divisor samples used to seed the Newton solves, plus the curve
// whose branch points are the images chi_s of the half-periods (chi_1 = 0,
// chi_6 = 1 in the normalized chart). The curve's Abel-Jacobi map provides
// starting points for inversion.
struct SeedGrid {
  std::array<Real, 6> chi{};
  CurveData curve;
  std::vector<MapPoint> pts;
};
SeedGrid build_seed_grid(const MapContext& ctx);

// Solve w(u*) = w_star on the divisor and return the half-plane image.
// Throws DomainError when w_star is not strictly inside the polygon and
// ConvergenceError when Newton fails from every seed.
MapPoint forward_map(const MapContext& ctx, const SeedGrid& seeds,
                     Complex w_star);

// Solve x(u*) = x_star (reciprocal form when |x_star| is large) and return
// the polygon image, chosen on the physical copy by the winding test.
MapPoint inverse_map(const MapContext& ctx, const SeedGrid& seeds,
                     Complex x_star);

// Far-field stretch dw/dx in the normalized chart, extrapolated from probe
// points x = iT, T = base, 10*base, 100*base.
Real asymptotic_scale(const MapContext& ctx, const SeedGrid& seeds,
                      Real base = 1e2);

// Lattice representative with 2 Re u and 2 omega^{-1} Im u in [-1, 1)^2.
Vec2c block_reduce(const Vec2c& u, const Mat2& omega);

}  // namespace hepta
