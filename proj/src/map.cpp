#include "hepta/map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hepta {

namespace {

constexpr Real kPoleMargin = 1e-8;
constexpr Real kCharSwitch = 1e-3;

Complex det2(const Vec2c& p, const Vec2c& q) {
  return p[0] * q[1] - p[1] * q[0];
}

Complex dot2(const Vec2c& p, const Vec2c& q) {
  return p[0] * q[0] + p[1] * q[1];
}

struct PairVals {
  Complex m, p;  // theta[eps](u0 - u), theta[eps](u0 + u)
};

PairVals pair_vals(const MapContext& ctx, const ThetaChar& eps,
                   const Vec2c& u) {
  return {theta_char(eps, ctx.u0c - u, ctx.params.omega, ctx.theta_tol),
          theta_char(eps, ctx.u0c + u, ctx.params.omega, ctx.theta_tol)};
}

void require_off_pole(const MapContext& ctx, const Vec2c& u) {
  if (lattice_distance(u, ctx.u0c, ctx.params.omega) < kPoleMargin ||
      lattice_distance(u, -ctx.u0c, ctx.params.omega) < kPoleMargin)
    throw DomainError("evaluation at the image of infinity (pole of the map)");
}

// On the solution manifold (theta[35](u0) = 0) the representation of w is
// the same for every odd characteristic, but away from it the candidates are
// genuinely different functions. Work in the {2,3,5} representation
// everywhere, switching to {6,3,5} only inside a tiny ball around its
// indeterminate point u(p2), where the two agree at the solution.
bool in_switch_zone(const MapContext& ctx, const Vec2c& u) {
  return lattice_distance(u, ctx.u_half[1], ctx.params.omega) < kCharSwitch;
}

ThetaChar pick_eps(const MapContext& ctx, const Vec2c& a, const Vec2c& b) {
  return (in_switch_zone(ctx, a) || in_switch_zone(ctx, b))
             ? char_sum({6, 3, 5})
             : char_sum({2, 3, 5});
}

// Increment of log theta[eps](u0-u) - log theta[eps](u0+u) along the straight
// segment from a to b; the branch is pinned by bisecting until each step
// turns both factors by less than a quarter turn.
Complex log_increment(const MapContext& ctx, const ThetaChar& eps,
                      const Vec2c& a, const PairVals& va, const Vec2c& b,
                      const PairVals& vb, int depth) {
  const auto tame = [](Complex r) {
    const Real m = std::abs(r);
    return m > 0.3 && m < 3.4 && std::abs(std::arg(r)) < 1.2;
  };
  const Complex rm = vb.m / va.m;
  const Complex rp = vb.p / va.p;
  if (tame(rm) && tame(rp)) return std::log(rm) - std::log(rp);
  if (depth > 40) throw ConvergenceError("branch tracking failed to refine");
  Vec2c mid = 0.5 * (a + b);
  if (depth > 26)  // likely aimed straight at a theta zero: sidestep
    mid += Complex(0.0, 1.0) * (b - a) * 1e-6;
  const PairVals vm = pair_vals(ctx, eps, mid);
  if (vm.m == Complex(0.0) || vm.p == Complex(0.0))
    throw ConvergenceError("branch tracking hit a zero of a theta factor");
  return log_increment(ctx, eps, a, va, mid, vm, depth + 1) +
         log_increment(ctx, eps, mid, vm, b, vb, depth + 1);
}

// Single-valued part of w in a fixed representation: c*det(g, t) + linear.
Complex det_lin(const MapContext& ctx, const ThetaChar& eps, const Vec2c& u) {
  const auto& pr = ctx.params;
  const ThetaResult tm =
      theta_char_full(eps, ctx.u0c - u, pr.omega, 1, ctx.theta_tol);
  const ThetaResult tp =
      theta_char_full(eps, ctx.u0c + u, pr.omega, 1, ctx.theta_tol);
  if (tm.value == Complex(0.0) || tp.value == Complex(0.0))
    throw DomainError("w representation is singular at this point");
  const Vec2c g = tp.grad / tp.value - tm.grad / tm.value;
  return pr.c * det2(g, ctx.t) + pr.c1 * u[0] + pr.c2 * u[1];
}

// w(b) - w(a) along the straight segment from a to b.
Complex w_hop_eps(const MapContext& ctx, const ThetaChar& eps, const Vec2c& a,
                  const Vec2c& b) {
  if ((b - a).norm() == 0.0) return {0.0, 0.0};
  const PairVals va = pair_vals(ctx, eps, a);
  const PairVals vb = pair_vals(ctx, eps, b);
  const Complex dlog = log_increment(ctx, eps, a, va, b, vb, 0);
  return det_lin(ctx, eps, b) - det_lin(ctx, eps, a) + ctx.params.h * dlog;
}

Complex w_hop(const MapContext& ctx, const Vec2c& a, const Vec2c& b) {
  return w_hop_eps(ctx, pick_eps(ctx, a, b), a, b);
}

int pick_k(const MapContext& ctx, const Vec2c& u) {
  return lattice_distance(u, ctx.u_half[1], ctx.params.omega) < kCharSwitch
             ? 4
             : 2;
}

Complex proj_prefactor(const MapContext& ctx, int j, int l, int k) {
  const Mat2& om = ctx.params.omega;
  const Complex n1 =
      theta_char(char_sum({l, k, 3, 5}), ctx.u0c, om, ctx.theta_tol);
  const Complex n2 =
      theta_char(char_sum({l, k, j, 3, 5}), Vec2c::Zero(), om, ctx.theta_tol);
  return (n1 * n1) / (n2 * n2);
}

// Unsigned chart value; the overall sign of the theta quotient depends on
// the index triple and is fixed by the caller.
Complex chart_raw(const MapContext& ctx, const Vec2c& u, int j, int l,
                  int k) {
  const Mat2& om = ctx.params.omega;
  const Complex tn = theta_char(char_sum({j, k, 3, 5}), u, om, ctx.theta_tol);
  const ThetaChar cd = char_sum({k, 3, 5});
  const Complex dp = theta_char(cd, u + ctx.u0c, om, ctx.theta_tol);
  const Complex dm = theta_char(cd, u - ctx.u0c, om, ctx.theta_tol);
  return proj_prefactor(ctx, j, l, k) * (tn * tn) / (dp * dm);
}

}  // namespace

MapContext make_context(const PolygonSpec& spec, const AuxParams& params,
                        Real theta_tol) {
  require_spd(params.omega);
  MapContext ctx;
  ctx.spec = spec;
  ctx.params = params;
  ctx.theta_tol = theta_tol;
  ctx.chi = char_sum({3, 5});
  ctx.u0c = params.u0.cast<Complex>();
  ctx.t = theta_char_full(ctx.chi, ctx.u0c, params.omega, 1, theta_tol).grad;
  for (int s = 1; s <= 6; ++s) ctx.u_half[s - 1] = half_period(s, params.omega);
  // Straight hops between half-periods differ from the boundary arcs by
  // periods of dw, so the vertex images come from the closed-form sides.
  PolygonSpec cur = spec;
  cur.H = side_lengths(ctx);
  ctx.w_half = vertices(cur);
  return ctx;
}

std::array<Real, 5> side_lengths(const MapContext& ctx) {
  const auto& p = ctx.params;
  const Real t1 = ctx.t[0].real();
  const Real t2 = ctx.t[1].real();
  std::array<Real, 5> H;
  H[0] = 2.0 * pi * p.c * t2 - 2.0 * pi * p.h * p.u0[0] -
         0.5 * (p.c1 * p.omega(0, 0) + p.c2 * p.omega(0, 1)) + pi * p.h;
  H[1] = -0.5 * p.c1;
  H[3] = 0.5 * p.c2;
  H[4] = 2.0 * pi * p.c * t1 + 2.0 * pi * p.h * p.u0[1] +
         0.5 * (p.c1 * p.omega(0, 1) + p.c2 * p.omega(1, 1));
  H[2] = H[0] + H[4] - pi * p.h;
  return H;
}

Complex w_of_u(const MapContext& ctx, const Vec2c& u) {
  require_off_pole(ctx, u);
  // Points inside the switch zone are continued from u(p2) itself; all other
  // points hop from the nearest remaining vertex anchor so that the whole
  // out-of-zone branch stays in the default representation.
  if (in_switch_zone(ctx, u))
    return ctx.w_half[1] + w_hop(ctx, ctx.u_half[1], u);
  int best = 0;
  Real bd = std::numeric_limits<Real>::max();
  for (int s = 0; s < 6; ++s) {
    if (s == 1) continue;
    const Real d = (u - ctx.u_half[s]).norm();
    if (d < bd) {
      bd = d;
      best = s;
    }
  }
  return ctx.w_half[best] + w_hop(ctx, ctx.u_half[best], u);
}

Vec2c grad_w_of_u(const MapContext& ctx, const Vec2c& u,
                  const ThetaChar& eps) {
  require_off_pole(ctx, u);
  const auto& pr = ctx.params;
  const ThetaResult tm =
      theta_char_full(eps, ctx.u0c - u, pr.omega, 2, ctx.theta_tol);
  const ThetaResult tp =
      theta_char_full(eps, ctx.u0c + u, pr.omega, 2, ctx.theta_tol);
  const Vec2c A = tm.grad / tm.value;
  const Vec2c B = tp.grad / tp.value;
  const Mat2c M = (tm.hess / tm.value - A * A.transpose()) +
                  (tp.hess / tp.value - B * B.transpose());
  const Vec2c tperp(ctx.t[1], -ctx.t[0]);
  return pr.c * (M * tperp) - pr.h * (A + B) + Vec2c(pr.c1, pr.c2);
}

Vec2c grad_w_of_u(const MapContext& ctx, const Vec2c& u) {
  return grad_w_of_u(ctx, u, pick_eps(ctx, u, u));
}

ThetaChar safe_rep(const MapContext& ctx, const Vec2c& a, const Vec2c& b) {
  Real best = -1.0;
  ThetaChar pick = char_sum({2, 3, 5});
  for (int k : {2, 6}) {
    const ThetaChar eps = char_sum({k, 3, 5});
    Real worst = std::numeric_limits<Real>::max();
    for (const Vec2c& e : {a, b})
      for (Real sgn : {-1.0, 1.0}) {
        const Complex v = theta_char(eps, Vec2c(ctx.u0c + sgn * e),
                                     ctx.params.omega, ctx.theta_tol);
        worst = std::min(worst, std::abs(v));
      }
    if (worst > best) {
      best = worst;
      pick = eps;
    }
  }
  return pick;
}

Complex w_continue(const MapContext& ctx, const Vec2c& u_from, Complex w_from,
                   const Vec2c& u_to) {
  require_off_pole(ctx, u_to);
  return w_from + w_hop(ctx, u_from, u_to);
}

Complex w_continue(const MapContext& ctx, const Vec2c& u_from, Complex w_from,
                   const Vec2c& u_to, const ThetaChar& eps) {
  require_off_pole(ctx, u_to);
  return w_from + w_hop_eps(ctx, eps, u_from, u_to);
}

Complex x_of_u(const MapContext& ctx, const Vec2c& u, int j, int l, int k) {
  if (j < 1 || j > 6 || l < 1 || l > 6 || k < 1 || k > 6 || j >= l ||
      k == j || k == l)
    throw InputError("projection indices must be distinct and satisfy j < l");
  require_off_pole(ctx, u);
  // Calibrate the sign at a spare half-period, where the chart value is real
  // with a sign known from the ordering of the branch points.
  int m = 1;
  while (m == j || m == l || m == k) ++m;
  const Real raw = chart_raw(ctx, ctx.u_half[m - 1], j, l, k).real();
  const Real sign = ((m > j) == (raw > 0.0)) ? 1.0 : -1.0;
  return sign * chart_raw(ctx, u, j, l, k);
}

Complex projection(const MapContext& ctx, const Vec2c& u) {
  require_off_pole(ctx, u);
  return chart_raw(ctx, u, 1, 6, pick_k(ctx, u));
}

Vec2c grad_projection(const MapContext& ctx, const Vec2c& u) {
  require_off_pole(ctx, u);
  const int k = pick_k(ctx, u);
  const Mat2& om = ctx.params.omega;
  const ThetaResult tn =
      theta_char_full(char_sum({1, k, 3, 5}), u, om, 1, ctx.theta_tol);
  const ThetaChar cd = char_sum({k, 3, 5});
  const ThetaResult dp =
      theta_char_full(cd, u + ctx.u0c, om, 1, ctx.theta_tol);
  const ThetaResult dm =
      theta_char_full(cd, u - ctx.u0c, om, 1, ctx.theta_tol);
  const Complex den = dp.value * dm.value;
  const Vec2c dden = dp.grad * dm.value + dp.value * dm.grad;
  const Complex pref = proj_prefactor(ctx, 1, 6, k);
  return (pref / (den * den)) *
         (2.0 * tn.value * den * tn.grad - (tn.value * tn.value) * dden);
}

Complex reciprocal_projection(const MapContext& ctx, const Vec2c& u) {
  const int k = pick_k(ctx, u);
  const Mat2& om = ctx.params.omega;
  const Complex tn = theta_char(char_sum({1, k, 3, 5}), u, om, ctx.theta_tol);
  if (tn == Complex(0.0))
    throw DomainError("reciprocal projection evaluated at a zero of x");
  const ThetaChar cd = char_sum({k, 3, 5});
  const Complex dp = theta_char(cd, u + ctx.u0c, om, ctx.theta_tol);
  const Complex dm = theta_char(cd, u - ctx.u0c, om, ctx.theta_tol);
  return (dp * dm) / (proj_prefactor(ctx, 1, 6, k) * tn * tn);
}

Vec2c grad_reciprocal_projection(const MapContext& ctx, const Vec2c& u) {
  const int k = pick_k(ctx, u);
  const Mat2& om = ctx.params.omega;
  const ThetaResult tn =
      theta_char_full(char_sum({1, k, 3, 5}), u, om, 1, ctx.theta_tol);
  if (tn.value == Complex(0.0))
    throw DomainError("reciprocal projection evaluated at a zero of x");
  const ThetaChar cd = char_sum({k, 3, 5});
  const ThetaResult dp =
      theta_char_full(cd, u + ctx.u0c, om, 1, ctx.theta_tol);
  const ThetaResult dm =
      theta_char_full(cd, u - ctx.u0c, om, 1, ctx.theta_tol);
  const Complex den = dp.value * dm.value;
  const Vec2c dden = dp.grad * dm.value + dp.value * dm.grad;
  const Complex pref = proj_prefactor(ctx, 1, 6, k);
  const Complex t3 = tn.value * tn.value * tn.value;
  return (dden * tn.value - 2.0 * den * tn.grad) / (pref * t3);
}

Vec2c block_reduce(const Vec2c& u, const Mat2& omega) {
  const Vec2 eps = 2.0 * (omega.inverse() * u.imag());
  const Vec2 epsp = 2.0 * u.real();
  const Vec2 n(std::floor((eps[0] + 1.0) / 2.0),
               std::floor((eps[1] + 1.0) / 2.0));
  const Vec2 np(std::floor((epsp[0] + 1.0) / 2.0),
                std::floor((epsp[1] + 1.0) / 2.0));
  return u - Complex(0.0, 1.0) * (omega * n).cast<Complex>() -
         np.cast<Complex>();
}

SeedGrid build_seed_grid(const MapContext& ctx) {
  SeedGrid g;
  for (int s = 1; s <= 6; ++s) {
    const Complex xs = projection(ctx, ctx.u_half[s - 1]);
    if (std::abs(xs.imag()) > 1e-6)
      throw ConvergenceError("half-period projection drifted off the axis");
    g.chi[s - 1] = xs.real();
  }
  if (std::abs(g.chi[5] - 1.0) > 1e-6)
    throw ConvergenceError("projection normalization failed at branch 6");
  g.curve = period_basis(g.chi, 1e-11);

  const std::array<Real, 8> cols = {
      g.chi[0] - 0.5,
      0.5 * (g.chi[0] + g.chi[1]),
      0.5 * (g.chi[1] + g.chi[2]),
      0.5 * (g.chi[2] + g.chi[3]),
      0.5 * (g.chi[3] + g.chi[4]),
      0.5 * (g.chi[4] + g.chi[5]),
      g.chi[5] + 0.5,
      g.chi[5] + 2.0};
  const std::array<Real, 8> rows = {1e-3, 0.03, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0};

  Vec2c u_prev = Vec2c::Zero();
  Complex w_prev(0.0, 0.0);
  bool have_prev = false;
  for (int r = 0; r < 8; ++r) {
    for (int ci = 0; ci < 8; ++ci) {
      const int cc = (r % 2 == 0) ? ci : 7 - ci;  // snake for short hops
      MapPoint mp;
      mp.u = abel_jacobi(g.curve, {Complex(cols[cc], rows[r]), 0});
      mp.x = projection(ctx, mp.u);
      mp.w = have_prev ? w_continue(ctx, u_prev, w_prev, mp.u)
                       : w_of_u(ctx, mp.u);
      u_prev = mp.u;
      w_prev = mp.w;
      have_prev = true;
      g.pts.push_back(mp);
    }
  }
  return g;
}

namespace {

// One damped Newton run for the forward problem {w(u) = target, theta = 0},
// with w tracked continuously from the seed value.
bool forward_newton(const MapContext& ctx, Complex target, Vec2c& u,
                    Complex& w, Real& res, int& iters, int max_iter) {
  const Real sw = std::max(1.0, diameter(ctx.spec));
  const Real st =
      std::abs(theta(Vec2c::Zero(), ctx.params.omega, ctx.theta_tol));
  for (int it = 0; it < max_iter; ++it) {
    iters++;
    ThetaResult th;
    Vec2c gw;
    try {
      th = theta_char_full(ctx.chi, u, ctx.params.omega, 1, ctx.theta_tol);
      gw = grad_w_of_u(ctx, u);
    } catch (const HeptaError&) {
      return false;
    }
    const Complex f1 = w - target;
    const Complex f2 = th.value;
    const Real merit = std::abs(f1) / sw + std::abs(f2) / st;
    res = merit;
    if (std::abs(f1) < 1e-11 * sw && std::abs(f2) < 1e-10 * st) return true;
    const Complex det = det2(gw, th.grad);
    if (std::abs(det) <
        1e-14 * (gw.norm() * th.grad.norm() + 1e-300))
      return false;
    const Vec2c du((th.grad[1] * f1 - gw[1] * f2) / det,
                   (-th.grad[0] * f1 + gw[0] * f2) / det);
    Real lambda = 1.0;
    bool stepped = false;
    for (int bt = 0; bt < 7; ++bt) {
      const Vec2c u_try = u - lambda * du;
      try {
        const Complex w_try = w_continue(ctx, u, w, u_try);
        const Complex t_try =
            theta_char(ctx.chi, u_try, ctx.params.omega, ctx.theta_tol);
        const Real m_try =
            std::abs(w_try - target) / sw + std::abs(t_try) / st;
        if (m_try < (1.0 - 0.25 * lambda) * merit || m_try < 1e-13) {
          u = u_try;
          w = w_try;
          stepped = true;
          break;
        }
      } catch (const HeptaError&) {
      }
      lambda *= 0.5;
    }
    if (!stepped) return false;
    if ((lambda * du).norm() < 1e-14 * (1.0 + u.norm())) {
      const Complex t_now =
          theta_char(ctx.chi, u, ctx.params.omega, ctx.theta_tol);
      return std::abs(w - target) < 1e-9 * sw && std::abs(t_now) < 1e-8 * st;
    }
  }
  return false;
}

// One damped Newton run for the inverse problem {p(u) = target, theta = 0}
// where p is either the projection or its reciprocal.
bool inverse_newton(const MapContext& ctx, Complex target, bool recip,
                    Vec2c& u, Real& res, int& iters, int max_iter) {
  const Real s1 = recip ? std::max(std::abs(target), 1e-5)
                        : std::max(std::abs(target), 1.0);
  const Real st =
      std::abs(theta(Vec2c::Zero(), ctx.params.omega, ctx.theta_tol));
  const auto value = [&](const Vec2c& v) {
    return recip ? reciprocal_projection(ctx, v) : projection(ctx, v);
  };
  const auto grad = [&](const Vec2c& v) {
    return recip ? grad_reciprocal_projection(ctx, v)
                 : grad_projection(ctx, v);
  };
  for (int it = 0; it < max_iter; ++it) {
    iters++;
    Complex f1;
    Vec2c g1;
    ThetaResult th;
    try {
      f1 = value(u) - target;
      g1 = grad(u);
      th = theta_char_full(ctx.chi, u, ctx.params.omega, 1, ctx.theta_tol);
    } catch (const HeptaError&) {
      return false;
    }
    const Complex f2 = th.value;
    const Real merit = std::abs(f1) / s1 + std::abs(f2) / st;
    res = merit;
    if (std::abs(f1) < 1e-11 * s1 && std::abs(f2) < 1e-10 * st) return true;
    const Complex det = det2(g1, th.grad);
    if (std::abs(det) <
        1e-14 * (g1.norm() * th.grad.norm() + 1e-300))
      return false;
    const Vec2c du((th.grad[1] * f1 - g1[1] * f2) / det,
                   (-th.grad[0] * f1 + g1[0] * f2) / det);
    Real lambda = 1.0;
    bool stepped = false;
    for (int bt = 0; bt < 7; ++bt) {
      const Vec2c u_try = u - lambda * du;
      try {
        const Complex f1t = value(u_try) - target;
        const Complex f2t =
            theta_char(ctx.chi, u_try, ctx.params.omega, ctx.theta_tol);
        const Real m_try = std::abs(f1t) / s1 + std::abs(f2t) / st;
        if (m_try < (1.0 - 0.25 * lambda) * merit || m_try < 1e-13) {
          u = u_try;
          stepped = true;
          break;
        }
      } catch (const HeptaError&) {
      }
      lambda *= 0.5;
    }
    if (!stepped) return false;
    if ((lambda * du).norm() < 1e-14 * (1.0 + u.norm())) return res < 1e-8;
  }
  return false;
}

}  // namespace

MapPoint forward_map(const MapContext& ctx, const SeedGrid& seeds,
                     Complex w_star) {
  const Real diam = diameter(ctx.spec);
  for (const Complex& v : vertices(ctx.spec))
    if (std::abs(w_star - v) < 1e-10 * (1.0 + diam))
      throw DomainError("target w is a vertex of the polygon");
  if (ctx.spec.has_slits())
    for (int k = 0; k < 3; ++k)
      if (std::abs(w_star - spike_tip(ctx.spec, k)) < 1e-10 * (1.0 + diam))
        throw DomainError("target w is a spike tip");
  if (!point_inside(ctx.spec, w_star))
    throw DomainError("target w lies outside the polygon");

  // seeds ordered by distance in the w image
  std::vector<const MapPoint*> order;
  for (const auto& sp : seeds.pts) order.push_back(&sp);
  std::sort(order.begin(), order.end(),
            [&](const MapPoint* a, const MapPoint* b) {
              return std::abs(a->w - w_star) < std::abs(b->w - w_star);
            });

  MapPoint out;
  for (int trial = 0; trial < 4 && trial < (int)order.size(); ++trial) {
    Vec2c u = order[trial]->u;
    Complex w = order[trial]->w;
    Real res = 0.0;
    int iters = 0;
    if (forward_newton(ctx, w_star, u, w, res, iters, 60)) {
      out.u = u;
      out.w = w;
      out.residual = res;
      out.iterations = iters;
      out.x = projection(ctx, u);
      if (out.x.imag() < -1e-6 * (1.0 + std::abs(out.x)))
        throw ConvergenceError("forward map left the physical half-plane");
      return out;
    }
    // straight-path continuation fallback from this seed
    for (int ns : {8, 32}) {
      u = order[trial]->u;
      w = order[trial]->w;
      const Complex start = w;
      bool ok = true;
      iters = 0;
      for (int s = 1; s <= ns && ok; ++s) {
        const Complex tgt = start + (w_star - start) * (Real(s) / ns);
        ok = forward_newton(ctx, tgt, u, w, res, iters, 25);
      }
      if (ok) {
        out.u = u;
        out.w = w;
        out.residual = res;
        out.iterations = iters;
        out.x = projection(ctx, u);
        if (out.x.imag() < -1e-6 * (1.0 + std::abs(out.x)))
          throw ConvergenceError("forward map left the physical half-plane");
        return out;
      }
    }
  }
  throw ConvergenceError("forward map did not converge from any seed");
}

MapPoint inverse_map(const MapContext& ctx, const SeedGrid& seeds,
                     Complex x_star) {
  if (x_star.imag() < 0.0)
    throw InputError("inverse target must lie in the closed upper half-plane");
  Complex xt = x_star;
  if (xt.imag() == 0.0) xt += Complex(0.0, 1e-9 * (1.0 + std::abs(xt)));
  const bool recip = std::abs(xt) > 50.0;
  const Complex target = recip ? 1.0 / xt : xt;

  MapPoint out;
  Vec2c u = Vec2c::Zero();
  Real res = 0.0;
  int iters = 0;
  bool solved = false;

  // primary seed: Abel-Jacobi image on the matching curve
  try {
    u = block_reduce(abel_jacobi(seeds.curve, {xt, 0}), ctx.params.omega);
    solved = inverse_newton(ctx, target, recip, u, res, iters, 60);
  } catch (const HeptaError&) {
    solved = false;
  }

  if (!solved) {
    // fall back to the nearest grid seed in the chordal metric, then to
    // straight continuation in x from it
    const auto chordal = [](Complex a, Complex b) {
      return std::abs(a - b) / std::sqrt((1.0 + std::norm(a)) *
                                         (1.0 + std::norm(b)));
    };
    std::vector<const MapPoint*> order;
    for (const auto& sp : seeds.pts) order.push_back(&sp);
    std::sort(order.begin(), order.end(),
              [&](const MapPoint* a, const MapPoint* b) {
                return chordal(a->x, xt) < chordal(b->x, xt);
              });
    for (int trial = 0; trial < 4 && !solved && trial < (int)order.size();
         ++trial) {
      u = order[trial]->u;
      iters = 0;
      solved = inverse_newton(ctx, target, recip, u, res, iters, 60);
      if (solved) break;
      const Complex x_from = order[trial]->x;
      for (int ns : {8, 32}) {
        u = order[trial]->u;
        bool ok = true;
        iters = 0;
        for (int s = 1; s <= ns && ok; ++s) {
          const Complex xs = x_from + (xt - x_from) * (Real(s) / ns);
          const bool rc = std::abs(xs) > 50.0;
          ok = inverse_newton(ctx, rc ? 1.0 / xs : xs, rc, u, res, iters, 25);
        }
        if (ok) {
          solved = true;
          break;
        }
      }
    }
  }
  if (!solved) throw ConvergenceError("inverse map did not converge");

  u = block_reduce(u, ctx.params.omega);
  Complex w = w_of_u(ctx, u);
  if (!point_inside(ctx.spec, w)) {
    const bool flip =
        point_inside(ctx.spec, -w) ||
        boundary_distance(ctx.spec, -w) < boundary_distance(ctx.spec, w);
    if (flip) {
      w = -w;
      u = -u;
    }
  }
  out.u = u;
  out.w = w;
  out.x = projection(ctx, u);
  out.residual = res;
  out.iterations = iters;
  return out;
}

Real asymptotic_scale(const MapContext& ctx, const SeedGrid& seeds,
                      Real base) {
  const auto stretch = [&](Real T) -> Complex {
    const MapPoint mp = inverse_map(ctx, seeds, Complex(0.0, T));
    const ThetaResult th =
        theta_char_full(ctx.chi, mp.u, ctx.params.omega, 1, ctx.theta_tol);
    const Vec2c tau(th.grad[1], -th.grad[0]);
    const Complex dw = dot2(grad_w_of_u(ctx, mp.u), tau);
    const Complex dr = dot2(grad_reciprocal_projection(ctx, mp.u), tau);
    return dw / (-(mp.x * mp.x) * dr);
  };
  const Complex s2 = stretch(base);
  const Complex s3 = stretch(10.0 * base);
  const Complex s4 = stretch(100.0 * base);
  const Complex r1 = (10.0 * s3 - s2) / 9.0;
  const Complex r2 = (10.0 * s4 - s3) / 9.0;
  const Complex ext = (100.0 * r2 - r1) / 99.0;
  if (!(std::abs(ext.imag()) < 1e-6 * std::max(1.0, std::abs(ext.real()))))
    throw ConvergenceError("far-field scale extrapolation failed");
  return ext.real();
}

}  // namespace hepta
