#include "hepta/theta.hpp"

#include <cmath>

namespace hepta {

namespace {

const Complex I_UNIT{0.0, 1.0};

Real lambda_min(const Mat2& omega) {
  const Real tr = omega(0, 0) + omega(1, 1);
  const Real det = omega(0, 0) * omega(1, 1) - omega(0, 1) * omega(1, 0);
  const Real disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return tr / 2.0 - disc;
}

// Plain theta(v, i*omega) with derivatives, lattice-reduced internally.
ThetaResult plain_theta_full(const Vec2c& v, const Mat2& omega, int order,
                             Real tol) {
  require_spd(omega);
  const LatticeReduction red = lattice_reduce(v, omega);
  const Vec2c& vr = red.v_red;
  const Vec2 im_vr(vr[0].imag(), vr[1].imag());

  const int radius = truncation_radius(omega, tol);
  const Vec2 center = -omega.inverse() * im_vr;
  const int c0 = static_cast<int>(std::lround(center[0]));
  const int c1 = static_cast<int>(std::lround(center[1]));

  ThetaResult acc;
  for (int m0 = c0 - radius; m0 <= c0 + radius; ++m0) {
    for (int m1 = c1 - radius; m1 <= c1 + radius; ++m1) {
      const Vec2 m(static_cast<Real>(m0), static_cast<Real>(m1));
      const Real quad = m.dot(omega * m);
      const Complex lin = 2.0 * pi * I_UNIT * (m[0] * vr[0] + m[1] * vr[1]);
      const Complex term = std::exp(lin - pi * quad);
      acc.value += term;
      if (order >= 1) {
        const Vec2c f = 2.0 * pi * I_UNIT * m.cast<Complex>();
        acc.grad += f * term;
        if (order >= 2) acc.hess += (f * f.transpose()) * term;
      }
    }
  }

  // Undo the reduction: theta(v) = exp(pi n^t omega n - 2 pi i n^t v_red)
  // * theta(v_red); derivatives pick up the -2 pi i n shift.
  const Vec2 n = red.n.cast<Real>();
  const Complex log_pref =
      pi * n.dot(omega * n) - 2.0 * pi * I_UNIT * (n[0] * vr[0] + n[1] * vr[1]);
  const Complex pref = std::exp(log_pref);
  const Vec2c shift = -2.0 * pi * I_UNIT * n.cast<Complex>();

  ThetaResult out;
  out.value = pref * acc.value;
  if (order >= 1) out.grad = pref * (acc.grad + shift * acc.value);
  if (order >= 2)
    out.hess = pref * (acc.hess + shift * acc.grad.transpose() +
                       acc.grad * shift.transpose() +
                       (shift * shift.transpose()) * acc.value);
  return out;
}

}  // namespace

ThetaChar branch_char(int s) {
  ThetaChar c;
  switch (s) {
    case 1: c.a << 0, 0; c.b << 0, 0; break;
    case 2: c.a << 1, 0; c.b << 0, 0; break;
    case 3: c.a << 1, 0; c.b << 1, 0; break;
    case 4: c.a << 0, 1; c.b << 1, 0; break;
    case 5: c.a << 0, 1; c.b << 1, 1; break;
    case 6: c.a << 0, 0; c.b << 1, 1; break;
    default: throw DomainError("branch index must be in 1..6");
  }
  return c;
}

ThetaChar char_sum(std::initializer_list<int> branches) {
  return char_sum(std::vector<int>(branches));
}

ThetaChar char_sum(const std::vector<int>& branches) {
  ThetaChar s;
  for (int idx : branches) s = s + branch_char(idx);
  return s;
}

Vec2c half_period(int s, const Mat2& omega) {
  const ThetaChar c = branch_char(s);
  const Vec2 a = c.a.cast<Real>();
  const Vec2 b = c.b.cast<Real>();
  const Vec2 re = 0.5 * b;
  const Vec2 im = 0.5 * (omega * a);
  return Vec2c(Complex(re[0], im[0]), Complex(re[1], im[1]));
}

bool in_cone(const Mat2& omega) {
  const Real det = omega(0, 0) * omega(1, 1) - omega(0, 1) * omega(1, 0);
  if (!(omega(0, 0) > 0.0 && det > 0.0)) return false;
  return omega(0, 1) > 0.0 &&
         omega(0, 1) < std::min(omega(0, 0), omega(1, 1));
}

void require_spd(const Mat2& omega) {
  const Real det = omega(0, 0) * omega(1, 1) - omega(0, 1) * omega(1, 0);
  if (!(omega(0, 0) > 0.0 && det > 0.0))
    throw DomainError("theta matrix argument is not positive definite");
}

int truncation_radius(const Mat2& omega, Real tol) {
  if (!(tol > 0.0 && tol <= 1e-2))
    throw DomainError("truncation tolerance out of range (0, 1e-2]");
  require_spd(omega);
  const Real lmin = lambda_min(omega);
  for (int r = 2; r < 1000; ++r) {
    const Real bound =
        std::exp(-pi * lmin * (r - 1.0) * (r - 1.0)) * (2.0 * r + 1.0) *
        (2.0 * r + 1.0);
    if (bound < tol) return r;
  }
  throw ConvergenceError("truncation radius exceeds 1000; omega too flat");
}

LatticeReduction lattice_reduce(const Vec2c& v, const Mat2& omega) {
  require_spd(omega);
  LatticeReduction red;
  const Vec2 im(v[0].imag(), v[1].imag());
  const Vec2 s = omega.inverse() * im;
  red.n << static_cast<int>(std::floor(s[0] + 0.5)),
      static_cast<int>(std::floor(s[1] + 0.5));
  Vec2c w = v;
  const Vec2 omn = omega * red.n.cast<Real>();
  w[0] -= Complex(0.0, omn[0]);
  w[1] -= Complex(0.0, omn[1]);
  red.np << static_cast<int>(std::floor(w[0].real() + 0.5)),
      static_cast<int>(std::floor(w[1].real() + 0.5));
  w[0] -= static_cast<Real>(red.np[0]);
  w[1] -= static_cast<Real>(red.np[1]);
  red.v_red = w;
  return red;
}

Real lattice_distance(const Vec2c& a, const Vec2c& b, const Mat2& omega) {
  return lattice_reduce(a - b, omega).v_red.norm();
}

Complex theta(const Vec2c& u, const Mat2& omega, Real tol) {
  return plain_theta_full(u, omega, 0, tol).value;
}

Complex theta_char(const ThetaChar& chr, const Vec2c& u, const Mat2& omega,
                   Real tol) {
  return theta_char_full(chr, u, omega, 0, tol).value;
}

ThetaResult theta_char_full(const ThetaChar& chr, const Vec2c& u,
                            const Mat2& omega, int order, Real tol) {
  const Vec2 eps = 0.5 * chr.a.cast<Real>();
  const Vec2 epsp = 0.5 * chr.b.cast<Real>();

  Vec2c v = u;
  const Vec2 omeps = omega * eps;
  v[0] += Complex(epsp[0], omeps[0]);
  v[1] += Complex(epsp[1], omeps[1]);

  const ThetaResult base = plain_theta_full(v, omega, order, tol);

  // theta[2e,2e'](u) = exp(-pi e^t omega e + 2 pi i e^t (u + e')) theta(v).
  const Complex log_pref = -pi * eps.dot(omega * eps) +
                           2.0 * pi * I_UNIT *
                               (eps[0] * (u[0] + epsp[0]) +
                                eps[1] * (u[1] + epsp[1]));
  const Complex pref = std::exp(log_pref);
  const Vec2c shift = 2.0 * pi * I_UNIT * eps.cast<Complex>();

  ThetaResult out;
  out.value = pref * base.value;
  if (order >= 1) out.grad = pref * (base.grad + shift * base.value);
  if (order >= 2)
    out.hess = pref * (base.hess + shift * base.grad.transpose() +
                       base.grad * shift.transpose() +
                       (shift * shift.transpose()) * base.value);
  return out;
}

std::vector<ThetaChar> odd_chars() {
  std::vector<ThetaChar> out;
  for (int s = 1; s <= 6; ++s) out.push_back(char_sum({s, 3, 5}));
  return out;
}

}  // namespace hepta
