#include "hepta/curve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "hepta/theta.hpp"

namespace hepta {

namespace {

// Gauss-Legendre nodes and weights on [0,1], cached per order.
struct GlRule {
  std::vector<Real> t, w;
};

const GlRule& gl_rule(int n) {
  thread_local std::map<int, GlRule> cache;
  const auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GlRule r;
  r.t.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Real z = std::cos(pi * (i + 0.75) / (n + 0.5));
    Real pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      Real p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const Real p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const Real dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    r.t[i] = 0.5 * (1.0 - z);
    r.t[n - 1 - i] = 0.5 * (1.0 + z);
    const Real wi = 1.0 / ((1.0 - z * z) * pp * pp);
    r.w[i] = wi;
    r.w[n - 1 - i] = wi;
  }
  return cache.emplace(n, std::move(r)).first->second;
}

// Callbacks receive the integrand value inputs (x, x - a, b - x); the exact
// endpoint offsets avoid cancellation in vanishing factors.
using Integrand = std::function<Vec2c(Complex, Complex, Complex)>;

Vec2c converge(const std::function<Vec2c(int)>& eval, Real tol,
               const char* what) {
  Vec2c prev = eval(16);
  for (int n = 32; n <= 16384; n *= 2) {
    const Vec2c cur = eval(n);
    if ((cur - prev).norm() <= tol * std::max(1.0, cur.norm())) return cur;
    prev = cur;
  }
  std::ostringstream os;
  os << what << ": node doubling stalled; last estimate (" << prev[0] << ", "
     << prev[1] << ")";
  throw ConvergenceError(os.str());
}

// Inverse-square-root singularities at both endpoints (real interval).
Vec2c quad_gc(Real a, Real b, const Integrand& f, Real tol,
              const char* what) {
  const Real mid = 0.5 * (a + b), hw = 0.5 * (b - a);
  return converge(
      [&](int n) {
        Vec2c acc = Vec2c::Zero();
        for (int i = 0; i < n; ++i) {
          const Real cs = std::cos(pi * (i + 0.5) / n);
          const Real da = hw * (1.0 + cs), db = hw * (1.0 - cs);
          acc += f(mid + hw * cs, da, db) * std::sqrt(da * db);
        }
        return Vec2c(acc * (pi / n));
      },
      tol, what);
}

// Inverse-square-root singularity at a; endpoints may be complex.
Vec2c quad_left(Complex a, Complex b, const Integrand& f, Real tol,
                const char* what) {
  const Complex d = b - a;
  return converge(
      [&](int n) {
        const GlRule& r = gl_rule(n);
        Vec2c acc = Vec2c::Zero();
        for (int i = 0; i < n; ++i) {
          const Complex da = d * (r.t[i] * r.t[i]);
          acc += f(a + da, da, d - da) * (2.0 * d * r.t[i] * r.w[i]);
        }
        return acc;
      },
      tol, what);
}

Vec2c quad_right(Complex a, Complex b, const Integrand& f, Real tol,
                 const char* what) {
  const Complex d = b - a;
  return converge(
      [&](int n) {
        const GlRule& r = gl_rule(n);
        Vec2c acc = Vec2c::Zero();
        for (int i = 0; i < n; ++i) {
          const Complex db = d * (r.t[i] * r.t[i]);
          acc += f(b - db, d - db, db) * (2.0 * d * r.t[i] * r.w[i]);
        }
        return acc;
      },
      tol, what);
}

Vec2c quad_plain(Complex a, Complex b, const Integrand& f, Real tol,
                 const char* what) {
  const Complex d = b - a;
  return converge(
      [&](int n) {
        const GlRule& r = gl_rule(n);
        Vec2c acc = Vec2c::Zero();
        for (int i = 0; i < n; ++i) {
          const Complex da = d * r.t[i];
          acc += f(a + da, da, d - da) * (d * r.w[i]);
        }
        return acc;
      },
      tol, what);
}

// 1 / sign of y on the upper side of segment k (k = 0..6 between branch
// points, counting from the west ray); upper-side y carries i^(6-k).
Complex inv_sign(int k) {
  switch ((k + 2) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

// Product over branch points not in {skip1, skip2} of sqrt|xr - x_s|.
Real rest_abs(const std::array<Real, 6>& bp, Real xr, int skip1, int skip2) {
  Real p = 1.0;
  for (int s = 0; s < 6; ++s) {
    if (s == skip1 || s == skip2) continue;
    p *= std::sqrt(std::abs(xr - bp[s]));
  }
  return p;
}

Vec2c du_num(const Mat2& C, Complex x) {
  return {C(0, 0) * x + C(1, 0), C(0, 1) * x + C(1, 1)};
}

// Integral over segment k (1..5) of (x, 1)/|y| dx.
Vec2c seg_monomials(const std::array<Real, 6>& bp, int k, Real tol) {
  return quad_gc(
      bp[k - 1], bp[k],
      [&](Complex x, Complex da, Complex db) {
        const Real g = std::sqrt(da.real() * db.real()) *
                       rest_abs(bp, x.real(), k - 1, k);
        return Vec2c(x.real() / g, 1.0 / g);
      },
      tol, "a/b-period segment");
}

// Integral over segment k (1..5) of du on the upper side, sign included.
Vec2c seg_du_full(const CurveData& c, int k) {
  const auto& bp = c.x;
  const Vec2c raw = quad_gc(
      bp[k - 1], bp[k],
      [&](Complex x, Complex da, Complex db) {
        const Real g = std::sqrt(da.real() * db.real()) *
                       rest_abs(bp, x.real(), k - 1, k);
        return Vec2c(du_num(c.C, x.real()) / g);
      },
      c.tol, "du segment");
  return inv_sign(k) * raw;
}

Real span(const std::array<Real, 6>& bp) { return bp[5] - bp[0]; }

// AJ march along the real axis from x1 to xr, upper side.
Vec2c march_real(const CurveData& c, Real xr) {
  const auto& bp = c.x;
  const Real snap = 1e-13 * std::max(1.0, span(bp) + std::abs(xr));
  const auto near = [&](Real a, Real b) { return std::abs(a - b) <= snap; };

  if (xr < bp[0] && !near(xr, bp[0])) {
    const Vec2c I = quad_right(
        xr, bp[0],
        [&](Complex x, Complex, Complex db) {
          const Real g =
              std::sqrt(db.real()) * rest_abs(bp, x.real(), 0, -1);
          return Vec2c(du_num(c.C, x.real()) / g);
        },
        c.tol, "west partial");
    return -inv_sign(0) * I;  // reversed direction: x1 -> xr
  }

  Vec2c u = Vec2c::Zero();
  for (int k = 1; k <= 5; ++k) {
    const Real a = bp[k - 1], b = bp[k];
    if (xr >= b || near(xr, b)) {
      u += seg_du_full(c, k);
      if (near(xr, b)) return u;
      continue;
    }
    if (xr > a && !near(xr, a)) {
      const Vec2c I = quad_left(
          a, xr,
          [&](Complex x, Complex da, Complex) {
            const Real g =
                std::sqrt(da.real()) * rest_abs(bp, x.real(), k - 1, -1);
            return Vec2c(du_num(c.C, x.real()) / g);
          },
          c.tol, "segment partial");
      u += inv_sign(k) * I;
    }
    return u;
  }
  if (xr > bp[5] && !near(xr, bp[5])) {
    const Vec2c I = quad_left(
        bp[5], xr,
        [&](Complex x, Complex da, Complex) {
          const Real g =
              std::sqrt(da.real()) * rest_abs(bp, x.real(), 5, -1);
          return Vec2c(du_num(c.C, x.real()) / g);
        },
        c.tol, "east partial");
    u += inv_sign(6) * I;
  }
  return u;
}

// AJ path for Im x > 0: vertical leg off x1, then a straight leg.
Vec2c two_leg(const CurveData& c, Complex xu) {
  const auto& bp = c.x;
  const Real D = std::max({span(bp), std::abs(xu - bp[0]), 1.0});
  const Complex top(bp[0], D);
  const Vec2c leg1 = quad_left(
      Complex(bp[0], 0.0), top,
      [&](Complex x, Complex da, Complex) {
        Complex y = std::sqrt(da);
        for (int s = 1; s < 6; ++s) y *= std::sqrt(x - bp[s]);
        return Vec2c(du_num(c.C, x) / y);
      },
      c.tol, "aj vertical leg");
  const Vec2c leg2 = quad_plain(
      top, xu,
      [&](Complex x, Complex, Complex) {
        Complex y(1.0, 0.0);
        for (int s = 0; s < 6; ++s) y *= std::sqrt(x - bp[s]);
        return Vec2c(du_num(c.C, x) / y);
      },
      c.tol, "aj straight leg");
  return leg1 + leg2;
}

}  // namespace

CurveData period_basis(const std::array<Real, 6>& x, Real tol, Real gap) {
  for (int s = 0; s < 5; ++s)
    if (!(x[s + 1] - x[s] > gap)) {
      std::ostringstream os;
      os << "degenerate curve: branch points must increase with gap > " << gap;
      throw DomainError(os.str());
    }
  if (!(tol > 0.0 && tol < 1e-2))
    throw DomainError("quadrature tolerance out of range");

  CurveData c;
  c.x = x;
  c.tol = tol;

  const Vec2c I2 = seg_monomials(x, 2, tol);
  const Vec2c I4 = seg_monomials(x, 4, tol);
  Mat2 M;
  M << 2.0 * I2[0].real(), 2.0 * I2[1].real(),  //
      -2.0 * I4[0].real(), -2.0 * I4[1].real();
  c.C = M.inverse();

  const Complex itwo(0.0, 2.0);
  const Vec2c I1 = seg_monomials(x, 1, tol);
  const Vec2c I5 = seg_monomials(x, 5, tol);
  Mat2c B;
  B << itwo * I1[0], itwo * I1[1],  //
      -itwo * I5[0], -itwo * I5[1];
  const Mat2c Pi = B * c.C.cast<Complex>();

  const Mat2 om = Pi.imag();
  if (Pi.real().norm() > 1e-9 * std::max(1.0, om.norm()))
    throw DomainError("period matrix acquired a real part");
  if (std::abs(om(0, 1) - om(1, 0)) > 1e-8 * std::max(1.0, om.norm()))
    throw ConvergenceError("period matrix asymmetric beyond tolerance");
  c.omega = 0.5 * (om + om.transpose());
  if (!in_cone(c.omega))
    throw DomainError("period matrix left the trihedral cone");

  const Vec2c r = ray_du(c, true);
  if (Vec2(r[0].imag(), r[1].imag()).norm() > 1e-10)
    throw DomainError("marked-point integral acquired an imaginary part");
  c.u0_raw << r[0].real(), r[1].real();

  Vec2 f;
  for (int s = 0; s < 2; ++s) f[s] = c.u0_raw[s] - std::floor(c.u0_raw[s]);
  if (f[0] > 0.5) {  // switch to the -u0 representative
    for (int s = 0; s < 2; ++s) f[s] = f[s] == 0.0 ? 0.0 : 1.0 - f[s];
  }
  c.u0 = f;
  return c;
}

CurveData initial_curve_guess() {
  return period_basis({-3.0, -2.0, -1.0, 1.0, 2.0, 3.0});
}

Complex curve_y(const CurveData& c, Complex x) {
  if (x.imag() == 0.0) x = Complex(x.real(), 0.0);  // clear negative zero
  Complex y(1.0, 0.0);
  for (int s = 0; s < 6; ++s) y *= std::sqrt(x - c.x[s]);
  return y;
}

Vec2c ray_du(const CurveData& c, bool west) {
  const auto& bp = c.x;
  const Real x_ref = 0.5 * (bp[0] + bp[5]);
  const int end = west ? 0 : 5;
  const Real ze = 1.0 / (bp[end] - x_ref);
  std::array<Real, 6> xt{};
  for (int s = 0; s < 6; ++s) xt[s] = bp[s] - x_ref;
  return converge(
      [&](int n) {
        const GlRule& r = gl_rule(n);
        Vec2c acc = Vec2c::Zero();
        for (int i = 0; i < n; ++i) {
          const Real z = ze * (1.0 - r.t[i] * r.t[i]);
          Real prod = 1.0;
          for (int s = 0; s < 6; ++s)
            if (s != end) prod *= std::sqrt(1.0 - z * xt[s]);
          const Real common = 2.0 * ze / prod * r.w[i];
          const Real base = 1.0 + z * x_ref;
          acc[0] += common * (c.C(0, 0) * base + c.C(1, 0) * z);
          acc[1] += common * (c.C(0, 1) * base + c.C(1, 1) * z);
        }
        return acc;
      },
      c.tol, west ? "west ray" : "east ray");
}

Vec2c abel_jacobi(const CurveData& c, const CurvePoint& p) {
  if (!std::isfinite(p.x.real()) || !std::isfinite(p.x.imag()))
    throw DomainError("abel_jacobi needs finite x (p0's image is u0)");
  Complex xs = p.x;
  const bool conj_path = xs.imag() < 0.0;
  if (conj_path) xs = std::conj(xs);
  Vec2c u =
      xs.imag() == 0.0 ? march_real(c, xs.real()) : two_leg(c, xs);
  if (conj_path) u = u.conjugate();
  if (((p.sheet % 2) + 2) % 2 == 1) u = -u;
  return u;
}

Complex cs_quadrature(const CurveData& c, const std::array<int, 3>& sigma,
                      Real A, Real xa, Real xb) {
  for (const int s : sigma)
    if (s < 1 || s > 6) throw InputError("sigma entries must be in 1..6");
  if (xa == xb) return {0.0, 0.0};
  Real a = xa, b = xb, sgn = 1.0;
  if (a > b) {
    std::swap(a, b);
    sgn = -1.0;
  }
  const auto& bp = c.x;
  const Real snap =
      1e-13 * std::max({1.0, span(bp), std::abs(a), std::abs(b)});
  const auto near = [&](Real p, Real q) { return std::abs(p - q) <= snap; };
  for (int s = 0; s < 6; ++s)
    if (bp[s] > a + snap && bp[s] < b - snap)
      throw DomainError("cs_quadrature interval straddles a branch point");

  int k = 0;
  while (k < 6 && bp[k] <= a + snap) ++k;
  const bool sing_a = k >= 1 && near(a, bp[k - 1]);
  const bool sing_b = k <= 5 && near(b, bp[k]);

  const auto f = [&](Complex x, Complex da, Complex db) {
    Real num = A;
    for (const int sig : sigma) {
      const int s = sig - 1;
      if (sing_a && s == k - 1)
        num *= da.real();
      else if (sing_b && s == k)
        num *= -db.real();  // x - bp[k] = -(b - x) when b sits on bp[k]
      else
        num *= x.real() - bp[s];
    }
    Real g = rest_abs(bp, x.real(), sing_a ? k - 1 : -1, sing_b ? k : -1);
    if (sing_a) g *= std::sqrt(da.real());
    if (sing_b) g *= std::sqrt(db.real());
    return Vec2c(Complex(num / g), Complex(0.0));
  };

  Vec2c I;
  if (sing_a && sing_b)
    I = quad_gc(a, b, f, c.tol, "cs segment");
  else if (sing_a)
    I = quad_left(a, b, f, c.tol, "cs left-singular");
  else if (sing_b)
    I = quad_right(a, b, f, c.tol, "cs right-singular");
  else
    I = quad_plain(a, b, f, c.tol, "cs regular");
  return sgn * inv_sign(k) * I[0];
}

}  // namespace hepta
