#include "hepta/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hepta/map.hpp"
#include "hepta/theta.hpp"

namespace hepta {

namespace {

// Coreal line hosting the half-periods u(p_{2k+1}), u(p_{2k+2}): points are
// gamma_k + i*Omega*rho with rho real. theta[35] restricted to line k is a
// real function times i^(k+1), wedge determinants are real times i^k; the
// residual keeps the surviving component.
const Vec2 kGamma[3] = {Vec2(0.0, 0.0), Vec2(0.5, 0.0), Vec2(0.5, 0.5)};

int line_of_corner(int s) { return (s - 1) / 2; }

Real theta_row(int line, Complex v) {
  return line == 1 ? v.real() : v.imag();
}

Real det_row(int line, Complex v) {
  return line == 1 ? v.imag() : v.real();
}

Vec2c line_point(const Mat2& omega, int line, const Vec2& rho) {
  const Vec2 orho = omega * rho;
  return Vec2c(Complex(kGamma[line][0], orho[0]),
               Complex(kGamma[line][1], orho[1]));
}

// rho coordinates of the corner half-periods on their lines.
Vec2 corner_rho(int s) {
  switch (s) {
    case 1: case 6: return Vec2(0.0, 0.0);
    case 2: case 3: return Vec2(0.5, 0.0);
    default: return Vec2(0.0, 0.5);
  }
}

// Context without the vertex-image chain: enough for gradients, thetas and
// w-differences, which is all the residuals need.
MapContext light_context(const PolygonSpec& spec, const AuxParams& p) {
  require_spd(p.omega);
  MapContext ctx;
  ctx.spec = spec;
  ctx.params = p;
  ctx.chi = char_sum({3, 5});
  ctx.u0c = Vec2c(Complex(p.u0[0], 0.0), Complex(p.u0[1], 0.0));
  ctx.t = theta_char_full(ctx.chi, ctx.u0c, p.omega, 1, ctx.theta_tol).grad;
  for (int s = 1; s <= 6; ++s) ctx.u_half[s - 1] = half_period(s, p.omega);
  ctx.w_half.fill(Complex(0.0, 0.0));
  return ctx;
}

Complex wedge_det(const MapContext& ctx, const Vec2c& u) {
  const Vec2c gw = grad_w_of_u(ctx, u);
  const Vec2c gt =
      theta_char_full(ctx.chi, u, ctx.params.omega, 1, ctx.theta_tol).grad;
  return gw[0] * gt[1] - gw[1] * gt[0];
}

Complex wedge_det(const MapContext& ctx, const Vec2c& u,
                  const ThetaChar& eps) {
  const Vec2c gw = grad_w_of_u(ctx, u, eps);
  const Vec2c gt =
      theta_char_full(ctx.chi, u, ctx.params.omega, 1, ctx.theta_tol).grad;
  return gw[0] * gt[1] - gw[1] * gt[0];
}

// Sides 1 and 5 in closed form plus the three linear rows; base is the first
// row index to fill.
void side_rows(const PolygonSpec& spec, const AuxParams& p,
               const MapContext& ctx, VecX& r, int base) {
  const auto hs = side_lengths(ctx);
  r[base] = 2.0 * (hs[0] - spec.H[0]);
  r[base + 1] = p.c1 + 2.0 * spec.H[1];
  r[base + 2] = p.c2 - 2.0 * spec.H[3];
  r[base + 3] = 2.0 * (hs[4] - spec.H[4]);
  r[base + 4] = pi * p.h - (spec.H[0] - spec.H[2] + spec.H[4]);
}

void require_slit_corners(const PolygonSpec& spec) {
  for (int k = 0; k < 3; ++k)
    if (line_of_corner(spec.sigma[k]) != k)
      throw InputError(
          "slit corners must pick one of (p1,p2), (p3,p4), (p5,p6)");
}

// Unit tangent of the divisor curve theta[35] = 0 at the corner of line k,
// expressed in the real coordinates rho with u = gamma_k/2 + i omega rho. The
// divisor row on line k is theta_row(k, .), so the curve's gradient in rho is
// the corresponding component of i omega^T grad theta.
Vec2 corner_tangent(const MapContext& ctx, int s, int k) {
  const Mat2& om = ctx.params.omega;
  const Vec2c gu =
      theta_char_full(ctx.chi, ctx.u_half[s - 1], om, 1, ctx.theta_tol).grad;
  Vec2 g;
  for (int j = 0; j < 2; ++j) {
    const Complex d =
        Complex(0.0, 1.0) * (om(0, j) * gu[0] + om(1, j) * gu[1]);
    g[j] = theta_row(k, d);
  }
  Vec2 tau(-g[1], g[0]);
  if (!(tau.norm() > 0.0))
    throw ConvergenceError("divisor tangent degenerated at a slit corner");
  return tau / tau.norm();
}

// Arc offset along the divisor tangent whose spike reaches the target length
// at the unsplit (heptagon) parameters, with the tangent sign fixed to the
// branch that grows the spike. dw near the corner behaves like
// A (t^2 - t*^2) dt along the divisor: on the branch where the unsplit image
// ray A t^3 / 3 points along minus the spike, the split tip lands at
// +(2/3)|A| t*^3 along the spike. Matching |A| t^3 / 3 to the target on the
// unsplit curve therefore overshoots the tip offset by a factor 2^(1/3),
// corrected on return.
Real bisect_offset(const PolygonSpec& stage, const MapContext& ctx, int k,
                   Vec2& tau) {
  const int s = stage.sigma[k];
  const Mat2& om = ctx.params.omega;
  const Vec2c uc = ctx.u_half[s - 1];
  const Vec2 rc = corner_rho(s);
  const Complex dir = spike_direction(stage, k);
  const auto len = [&](Real t) {
    const Vec2c u = line_point(om, k, Vec2(rc + t * tau));
    const Complex dw =
        w_continue(ctx, uc, Complex(0.0, 0.0), u, safe_rep(ctx, uc, u));
    return -(dw.real() * dir.real() + dw.imag() * dir.imag());
  };
  if (len(0.02) < 0.0) tau = -tau;

  const Real target = stage.slits[k];
  Real lo = 0.0, hi = 0.02;
  while (len(hi) < target && hi < 0.6) hi *= 2.0;
  if (len(hi) < target)
    throw ConvergenceError("slit seed left the corner arc");
  for (int it = 0; it < 50; ++it) {
    const Real mid = 0.5 * (lo + hi);
    (len(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) * std::cbrt(0.5);
}

// ---- packed unknown vector -------------------------------------------------

int n_unknowns(bool slit) { return slit ? 15 : 9; }

VecX pack(const AuxParams& p, bool slit) {
  VecX x(n_unknowns(slit));
  x[0] = p.omega(0, 0);
  x[1] = p.omega(0, 1);
  x[2] = p.omega(1, 1);
  x[3] = p.u0[0];
  x[4] = p.u0[1];
  x[5] = p.c;
  x[6] = p.c1;
  x[7] = p.c2;
  x[8] = p.h;
  if (slit) {
    const Mat2 oinv = p.omega.inverse();
    for (int k = 0; k < 3; ++k) {
      const Vec2 im(p.zeros[k][0].imag(), p.zeros[k][1].imag());
      const Vec2 rho = oinv * im;
      x[9 + 2 * k] = rho[0];
      x[10 + 2 * k] = rho[1];
    }
  }
  return x;
}

AuxParams unpack(const VecX& x, const PolygonSpec& spec, bool slit) {
  AuxParams p;
  p.omega(0, 0) = x[0];
  p.omega(0, 1) = x[1];
  p.omega(1, 0) = x[1];
  p.omega(1, 1) = x[2];
  p.u0 = Vec2(x[3], x[4]);
  p.c = x[5];
  p.c1 = x[6];
  p.c2 = x[7];
  p.h = x[8];
  if (slit) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 rho(x[9 + 2 * k], x[10 + 2 * k]);
      p.zeros[k] = line_point(p.omega, line_of_corner(spec.sigma[k]), rho);
    }
  }
  return p;
}

// Admissible domain: omega inside the cone, c negative, 2*u0 in (0,1)^2.
bool in_domain(const VecX& x) {
  const Real m = 1e-8;
  if (!(x[0] > m && x[2] > m)) return false;
  if (!(x[1] > m && x[1] < std::min(x[0], x[2]) - m)) return false;
  if (!(x[5] < -m)) return false;
  if (!(x[3] > m && x[3] < 0.5 - m)) return false;
  if (!(x[4] > m && x[4] < 0.5 - m)) return false;
  return true;
}

void project_domain(VecX& x) {
  const Real m = 1e-4;
  x[0] = std::max(x[0], m);
  x[2] = std::max(x[2], m);
  x[1] = std::min(std::max(x[1], m), std::min(x[0], x[2]) - m);
  x[5] = std::min(x[5], -1e-8);
  x[3] = std::min(std::max(x[3], m), 0.5 - m);
  x[4] = std::min(std::max(x[4], m), 0.5 - m);
}

// Newton-facing slit residual: same roots as residual_slit, but the det and
// spike rows are rescaled by the zero-to-corner distance. Splitting a corner
// double zero makes the raw det row quadratic and the spike row cubic in the
// offset, which shrinks the Newton basin to nothing near the heptagon limit;
// the rescaled rows are locally linear.
VecX slit_rows_scaled(const PolygonSpec& spec, const AuxParams& p) {
  VecX r = residual_slit(spec, p);
  const Mat2 oinv = p.omega.inverse();
  for (int k = 0; k < 3; ++k) {
    if (!(spec.slits[k] > 0.0)) continue;
    const Vec2 im(p.zeros[k][0].imag(), p.zeros[k][1].imag());
    const Vec2 d = Vec2(oinv * im) - corner_rho(spec.sigma[k]);
    const Real dist = std::max(d.norm(), 1e-6);
    r[3 + k] /= dist;
    r[11 + k] /= dist * dist;
  }
  return r;
}

VecX eval_residual(const PolygonSpec& spec, const VecX& x, bool slit) {
  const AuxParams p = unpack(x, spec, slit);
  return slit ? slit_rows_scaled(spec, p) : residual(spec, p);
}

using ResidualFn = std::function<VecX(const VecX&)>;

MatX fd_jacobian(const ResidualFn& fn, const VecX& x, int rows) {
  const int n = static_cast<int>(x.size());
  MatX J(rows, n);
  for (int i = 0; i < n; ++i) {
    const Real delta = 1e-6 * std::max(1.0, std::abs(x[i]));
    VecX xp = x, xm = x;
    xp[i] += delta;
    xm[i] -= delta;
    J.col(i) = (fn(xp) - fn(xm)) / (2.0 * delta);
  }
  return J;
}

// Damped Newton over a square residual closure. Off the solution manifold the
// rows span wildly different scales (splitting a double zero of dw produces
// derivatives orders of magnitude apart), so each step equilibrates the rows,
// takes a truncated-SVD step, and falls back to Levenberg damping when no
// line search along the raw step descends.
VecX newton_loop(const ResidualFn& fn, VecX x, Real tol, int max_iter,
                 int* iters, Real* norm_out) {
  if (!in_domain(x)) project_domain(x);
  VecX r = fn(x);
  Real nr = r.lpNorm<Eigen::Infinity>();
  int projections = 0;
  int it = 0;
  for (; it < max_iter && nr >= tol; ++it) {
    MatX J = fd_jacobian(fn, x, static_cast<int>(r.size()));
    VecX rs = r;
    for (int i = 0; i < J.rows(); ++i) {
      const Real rn = J.row(i).norm();
      if (rn > 0.0) {
        J.row(i) /= rn;
        rs[i] /= rn;
      }
    }
    Eigen::JacobiSVD<MatX> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VecX& sv = svd.singularValues();
    const VecX rhs = svd.matrixU().transpose() * (-rs);
    const auto step = [&](Real mu) {
      VecX g = rhs;
      for (int i = 0; i < g.size(); ++i) {
        if (mu > 0.0)
          g[i] *= sv[i] / (sv[i] * sv[i] + mu * mu);
        else
          g[i] = (sv[i] > 1e-12 * sv[0]) ? g[i] / sv[i] : 0.0;
      }
      return VecX(svd.matrixV() * g);
    };
    bool accepted = false;
    Real mu = 0.0;
    for (int round = 0; round < 5 && !accepted; ++round) {
      const VecX dx = step(mu);
      const Real gain = round == 0 ? 0.25 : 0.02;
      Real lam = 1.0;
      for (int bt = 0; bt < 9 && !accepted; ++bt, lam *= 0.5) {
        VecX xt = x + lam * dx;
        if (!in_domain(xt)) {
          if (++projections > 100)
            throw DomainError("newton kept leaving the admissible domain");
          project_domain(xt);
        }
        try {
          const VecX rt = fn(xt);
          const Real nt = rt.lpNorm<Eigen::Infinity>();
          if (nt < (1.0 - gain * lam) * nr || nt < tol) {
            x = xt;
            r = rt;
            nr = nt;
            accepted = true;
          }
        } catch (const HeptaError&) {
          // trial point broke a quadrature or theta precondition; shorten
        }
      }
      mu = (mu == 0.0) ? 1e-4 * sv[0] : 30.0 * mu;
    }
    if (!accepted)
      throw ConvergenceError("newton stagnated at residual " +
                             std::to_string(nr));
  }
  if (nr >= tol)
    throw ConvergenceError("newton did not reach tolerance, residual " +
                           std::to_string(nr));
  if (iters) *iters = it;
  if (norm_out) *norm_out = nr;
  return x;
}

AuxParams newton_core(const PolygonSpec& spec, const AuxParams& start,
                      Real tol, int max_iter, int* iters, bool slit) {
  const auto fn = [&spec, slit](const VecX& x) {
    return eval_residual(spec, x, slit);
  };
  Real nr = 0.0;
  const VecX x = newton_loop(fn, pack(start, slit), tol, max_iter, iters, &nr);
  AuxParams p = unpack(x, spec, slit);
  p.residual_norm = nr;
  return p;
}

// ---- prescribed-offset slit continuation -----------------------------------
//
// Driving the full slit system straight out of the heptagon limit fails:
// splitting a corner double zero of dw makes the spike row cubic and the det
// row quadratic in the zero offset, and no row scaling produces a usable
// Newton basin at small offsets. Each continuation stage instead pins every
// active zero at a fixed arc offset T along the divisor tangent out of its
// corner, leaving only the transverse position free. The stage system (three
// det rows, theta(u0), five side rows, one divisor row per active zero) is
// square, and its rows stay uniformly scaled as T shrinks. Realized spike
// lengths are measured after each stage and T is updated through the local
// cubic law, length ~ T^3, until they bracket the targets; the exact slit
// system then converges from that healthy warm start.

struct StageState {
  std::array<bool, 3> active{};
  std::array<Real, 3> T{};       // arc offset along the divisor tangent
  std::array<Real, 3> orient{};  // sign making positive T grow the spike
  std::array<ThetaChar, 3> eps{};
  std::vector<int> idx;          // active zeros, in corner order
};

// Place the zeros for moduli p: inactive ones on their corners, active ones
// at arc offset T[k] plus the transverse offset n[i] from the stage unknowns.
void stage_zeros(const PolygonSpec& spec, const StageState& st,
                 const MapContext& ctx, const VecX& n, AuxParams& p) {
  for (int k = 0; k < 3; ++k) {
    const int s = spec.sigma[k];
    if (!st.active[k]) {
      p.zeros[k] = ctx.u_half[s - 1];
      continue;
    }
    const auto i = std::find(st.idx.begin(), st.idx.end(), k) - st.idx.begin();
    const Vec2 tau = st.orient[k] * corner_tangent(ctx, s, k);
    const Vec2 nrm(-tau[1], tau[0]);
    const Vec2 rho = corner_rho(s) + st.T[k] * tau + n[i] * nrm;
    p.zeros[k] = line_point(ctx.params.omega, k, rho);
  }
}

VecX stage_residual(const PolygonSpec& spec, const StageState& st,
                    const VecX& x) {
  const int na = static_cast<int>(st.idx.size());
  AuxParams p = unpack(x.head(9), spec, false);
  const MapContext ctx = light_context(spec, p);
  stage_zeros(spec, st, ctx, x.tail(na), p);
  VecX r(9 + na);
  for (int k = 0; k < 3; ++k)
    r[k] = det_row(k, wedge_det(ctx, p.zeros[k], st.eps[k]));
  r[3] = theta_char(ctx.chi, ctx.u0c, p.omega, ctx.theta_tol).real();
  side_rows(spec, p, ctx, r, 4);
  for (int i = 0; i < na; ++i) {
    const int k = st.idx[i];
    r[9 + i] =
        theta_row(k, theta_char(ctx.chi, p.zeros[k], p.omega, ctx.theta_tol));
  }
  return r;
}

Real spike_length(const PolygonSpec& spec, const MapContext& ctx,
                  const AuxParams& p, int k) {
  const Vec2c uc = ctx.u_half[spec.sigma[k] - 1];
  const Complex dir = spike_direction(spec, k);
  const Complex dw = w_continue(ctx, uc, Complex(0.0, 0.0), p.zeros[k],
                                safe_rep(ctx, uc, p.zeros[k]));
#ifdef HEPTA_TRACE
  std::printf("  [spike %d dw=(%+.6f,%+.6f) dir=(%+.1f,%+.1f)]\n", k,
              dw.real(), dw.imag(), dir.real(), dir.imag());
#endif
  return dw.real() * dir.real() + dw.imag() * dir.imag();
}

}  // namespace

VecX residual(const PolygonSpec& spec, const AuxParams& params) {
  if (spec.has_slits())
    throw InputError("residual handles plain heptagons; use residual_slit");
  const MapContext ctx = light_context(spec, params);
  VecX r(9);
  for (int j = 0; j < 3; ++j) {
    const int s = spec.sigma[j];
    r[j] = det_row(line_of_corner(s), wedge_det(ctx, ctx.u_half[s - 1]));
  }
  r[3] = theta_char(ctx.chi, ctx.u0c, params.omega, ctx.theta_tol).real();
  side_rows(spec, params, ctx, r, 4);
  return r;
}

VecX residual_slit(const PolygonSpec& spec, const AuxParams& params) {
  require_slit_corners(spec);
  const MapContext ctx = light_context(spec, params);
  VecX r(15);
  for (int k = 0; k < 3; ++k) {
    const Vec2c& uk = params.zeros[k];
    const Vec2c uc = ctx.u_half[spec.sigma[k] - 1];
    const ThetaChar eps = safe_rep(ctx, uc, uk);
    r[k] = theta_row(k, theta_char(ctx.chi, uk, params.omega, ctx.theta_tol));
    r[3 + k] = det_row(k, wedge_det(ctx, uk, eps));
    const Complex dir = spike_direction(spec, k);
    const Complex dw = w_continue(ctx, uc, Complex(0.0, 0.0), uk, eps);
    r[11 + k] = dw.real() * dir.real() + dw.imag() * dir.imag() -
                spec.slits[k];
  }
  side_rows(spec, params, ctx, r, 6);
  r[14] = theta_char(ctx.chi, ctx.u0c, params.omega, ctx.theta_tol).real();
  return r;
}

AuxParams symmetric_start(const PolygonSpec& spec,
                          std::array<Real, 5>& h_sides) {
  const CurveData cd = initial_curve_guess();
  AuxParams base;
  base.omega = cd.omega;
  base.u0 = cd.u0;
  base.c = 0.0;
  base.c1 = 0.0;
  base.c2 = 0.0;
  base.h = 0.0;

  // grad w is linear in (c, c1, c2, h); extract the c and h coefficient
  // fields from unit-parameter contexts, then solve the three wedge rows for
  // (c1, c2, h) at c = -1.
  AuxParams pc = base;
  pc.c = 1.0;
  AuxParams ph = base;
  ph.h = 1.0;
  const MapContext cc = light_context(spec, pc);
  const MapContext ch = light_context(spec, ph);

  Eigen::Matrix3d A;
  Eigen::Vector3d rhs;
  for (int j = 0; j < 3; ++j) {
    const int s = spec.sigma[j];
    const int line = line_of_corner(s);
    const Vec2c u = cc.u_half[s - 1];
    const Vec2c gt =
        theta_char_full(cc.chi, u, base.omega, 1, cc.theta_tol).grad;
    const Vec2c gwc = grad_w_of_u(cc, u);
    const Vec2c gwh = grad_w_of_u(ch, u);
    const Complex det_c = gwc[0] * gt[1] - gwc[1] * gt[0];
    const Complex det_h = gwh[0] * gt[1] - gwh[1] * gt[0];
    A(j, 0) = det_row(line, gt[1]);
    A(j, 1) = det_row(line, -gt[0]);
    A(j, 2) = det_row(line, det_h);
    rhs(j) = det_row(line, det_c);
  }
  const Eigen::Vector3d sol = A.fullPivLu().solve(rhs);

  AuxParams p = base;
  p.c = -1.0;
  p.c1 = sol[0];
  p.c2 = sol[1];
  p.h = sol[2];

  const MapContext ctx = light_context(spec, p);
  const std::array<Real, 5> hs = side_lengths(ctx);

  Real target_mag = 0.0, start_mag = 0.0;
  for (int s = 0; s < 5; ++s) target_mag += std::abs(spec.H[s]);
  for (Real v : hs) start_mag += std::abs(v);
  if (!(start_mag > 0.0))
    throw ConvergenceError("symmetric start degenerated to zero side lengths");
  const Real lam = target_mag > 0.0 ? target_mag / start_mag : 1.0;
  p.c *= lam;
  p.c1 *= lam;
  p.c2 *= lam;
  p.h *= lam;
  for (int s = 0; s < 5; ++s) h_sides[s] = lam * hs[s];

  for (int s = 1; s <= 5; ++s) {
    const int want = required_sign(spec.sigma, s);
    if (want != 0 && h_sides[s - 1] * want <= 0.0)
      throw ConvergenceError(
          "symmetric start realizes the wrong side orientation");
  }
  return p;
}

AuxParams solve(const PolygonSpec& spec, const std::optional<AuxParams>& init,
                Real tol, int* newton_iters) {
  require_valid(spec);
  if (spec.has_slits())
    throw InputError("solve handles plain heptagons; use solve_slit");
  if (init) return newton_core(spec, *init, tol, 40, newton_iters, false);

  std::array<Real, 5> h0{};
  AuxParams p = symmetric_start(spec, h0);
  PolygonSpec stage = spec;
  stage.H = h0;
  int total = 0;
  int its = 0;
  p = newton_core(stage, p, tol, 40, &its, false);
  total += its;

  Real s = 0.0, ds = 0.25;
  while (s < 1.0) {
    const Real st = std::min(1.0, s + ds);
    for (int i = 0; i < 5; ++i)
      stage.H[i] = (1.0 - st) * h0[i] + st * spec.H[i];
    try {
      AuxParams pn = newton_core(stage, p, tol, 25, &its, false);
      p = pn;
      s = st;
      total += its;
      ds = std::min(0.25, 2.0 * ds);
    } catch (const HeptaError& e) {
      ds *= 0.5;
      if (ds < 1e-3)
        throw ConvergenceError("heptagon continuation stalled at s = " +
                               std::to_string(s) + ": " + e.what());
    }
  }
  if (newton_iters) *newton_iters = total;
  return p;
}

AuxParams solve_slit(const PolygonSpec& spec,
                     const std::optional<AuxParams>& init, Real tol,
                     int* newton_iters) {
  require_valid(spec);
  require_slit_corners(spec);
  if (init) {
    AuxParams p = newton_core(spec, *init, tol, 60, newton_iters, true);
    p.residual_norm = residual_slit(spec, p).lpNorm<Eigen::Infinity>();
    return p;
  }

  PolygonSpec hept = spec;
  hept.slits = {0.0, 0.0, 0.0};
  int total = 0;
  AuxParams p = solve(hept, std::nullopt, tol, &total);
  for (int k = 0; k < 3; ++k) {
    const int s = spec.sigma[k];
    p.zeros[k] = line_point(p.omega, k, corner_rho(s));
  }
  if (!spec.has_slits()) {
    if (newton_iters) *newton_iters = total;
    p.residual_norm = residual_slit(spec, p).lpNorm<Eigen::Infinity>();
    return p;
  }

  StageState st;
  {
    const MapContext ctx = light_context(spec, p);
    for (int k = 0; k < 3; ++k) {
      if (!(spec.slits[k] > 0.0)) continue;
      const int s = spec.sigma[k];
      st.active[k] = true;
      st.idx.push_back(k);
      Vec2 tau = corner_tangent(ctx, s, k);
      const Vec2 ref = tau;
      st.T[k] = bisect_offset(spec, ctx, k, tau);
      st.orient[k] = tau.dot(ref) > 0.0 ? 1.0 : -1.0;
    }
  }
  const int na = static_cast<int>(st.idx.size());
  const Real stage_tol = std::max(tol, 1e-9);

  VecX n = VecX::Zero(na);
  bool bracketed = false;
  for (int round = 0; round < 40 && !bracketed; ++round) {
    {
      AuxParams seed = p;
      const MapContext ctx = light_context(spec, seed);
      stage_zeros(spec, st, ctx, n, seed);
      for (int k = 0; k < 3; ++k) {
        st.eps[k] =
            safe_rep(ctx, ctx.u_half[spec.sigma[k] - 1], seed.zeros[k]);
#ifdef HEPTA_TRACE
        Real worst = 1e30;
        for (Real sgn : {-1.0, 1.0}) {
          const Complex v =
              theta_char(st.eps[k], Vec2c(ctx.u0c + sgn * seed.zeros[k]),
                         seed.omega, ctx.theta_tol);
          worst = std::min(worst, std::abs(v));
        }
        std::printf("  [eps %d margin=%.3e]\n", k, worst);
#endif
      }
    }
    VecX x0(9 + na);
    x0.head(9) = pack(p, false);
    x0.tail(na) = n;
    const auto fn = [&](const VecX& x) { return stage_residual(spec, st, x); };
    VecX xs;
    try {
      int its = 0;
      xs = newton_loop(fn, x0, stage_tol, 30, &its, nullptr);
      total += its;
    } catch (const HeptaError& e) {
#ifdef HEPTA_TRACE
      std::printf("[round %d threw: %s]\n", round, e.what());
#endif
      // retreat toward the heptagon and regrow
      bool collapsed = false;
      for (int k : st.idx) {
        st.T[k] *= 0.5;
        if (st.T[k] < 1e-5) collapsed = true;
      }
      if (collapsed)
        throw ConvergenceError(std::string("slit continuation collapsed: ") +
                               e.what());
      continue;
    }
    p = unpack(xs.head(9), spec, false);
    n = xs.tail(na);
#ifdef HEPTA_TRACE
    std::printf(
        "[round %d moduli: om=(%.4f,%.4f,%.4f) u0=(%.4f,%.4f) c=%.4f "
        "n=(%.4f,%.4f,%.4f)]\n",
        round, p.omega(0, 0), p.omega(0, 1), p.omega(1, 1), p.u0[0], p.u0[1],
        p.c, na > 0 ? n[0] : 0.0, na > 1 ? n[1] : 0.0, na > 2 ? n[2] : 0.0);
#endif
    const MapContext ctx = light_context(spec, p);
    stage_zeros(spec, st, ctx, n, p);

    bracketed = true;
    std::array<Real, 3> factor{1.0, 1.0, 1.0};
    for (int k : st.idx) {
      const Real len = spike_length(spec, ctx, p, k);
      const Real tgt = spec.slits[k];
      if (std::abs(len - tgt) > 0.25 * tgt) bracketed = false;
      factor[k] =
          std::clamp(std::cbrt(tgt / std::max(len, 1e-4 * tgt)), 0.55, 1.8);
#ifdef HEPTA_TRACE
      std::printf("[round %d k=%d T=%.6f len=%.6f tgt=%.6f f=%.3f]\n", round,
                  k, st.T[k], len, tgt, factor[k]);
#endif
    }
    if (!bracketed)
      for (int k : st.idx) st.T[k] *= factor[k];
  }
  if (!bracketed)
    throw ConvergenceError(
        "slit continuation failed to bracket the target lengths");

  int its = 0;
  p = newton_core(spec, p, tol, 60, &its, true);
  total += its;
  if (newton_iters) *newton_iters = total;
  p.residual_norm = residual_slit(spec, p).lpNorm<Eigen::Infinity>();
  return p;
}

}  // namespace hepta
