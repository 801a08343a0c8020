#include "hepta/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hepta {

namespace {

Complex unit_i_pow(int s) {
  switch (((s % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

Real point_segment_distance(Complex p, Complex a, Complex b) {
  const Complex ab = b - a;
  const Real len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  Real t = ((p - a) * std::conj(ab)).real() / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

Real point_ray_distance(Complex p, Complex origin, Complex dir) {
  const Real t = std::max(0.0, ((p - origin) * std::conj(dir)).real());
  return std::abs(p - (origin + t * dir));
}

// Signed crossing count of directed segment (a,b) against the horizontal
// line through w, to the right of w.
int crossing(Complex w, Complex a, Complex b) {
  const bool up = a.imag() <= w.imag() && b.imag() > w.imag();
  const bool down = b.imag() <= w.imag() && a.imag() > w.imag();
  if (!up && !down) return 0;
  const Real t = (w.imag() - a.imag()) / (b.imag() - a.imag());
  const Real x_cross = a.real() + t * (b.real() - a.real());
  if (x_cross <= w.real()) return 0;
  return up ? 1 : -1;
}

}  // namespace

Real sign_poly(const std::array<int, 3>& sigma, Real s) {
  return (s - sigma[0]) * (s - sigma[1]) * (s - sigma[2]);
}

int required_sign(const std::array<int, 3>& sigma, int s) {
  return sign_poly(sigma, s + 0.5) < 0.0 ? 1 : -1;
}

std::vector<std::string> validate(const PolygonSpec& spec) {
  std::vector<std::string> out;
  const auto& sg = spec.sigma;

  if (sg[0] < 1 || sg[2] > 6 || !(sg[0] < sg[1] && sg[1] < sg[2])) {
    out.push_back(
        "sigma must be strictly increasing with entries in 1..6 (an "
        "intruding angle at the vertex at infinity is not supported)");
    return out;  // downstream checks assume a sane sigma
  }

  for (int k = 0; k < 3; ++k)
    if (spec.slits[k] < 0.0) {
      std::ostringstream os;
      os << "slit length " << k + 1 << " is negative";
      out.push_back(os.str());
    }

  if (spec.has_slits()) {
    const bool paired = (sg[0] == 1 || sg[0] == 2) &&
                        (sg[1] == 3 || sg[1] == 4) &&
                        (sg[2] == 5 || sg[2] == 6);
    if (!paired)
      out.push_back(
          "slit mode needs one intruding corner per coreal oval: sigma in "
          "{1,2}x{3,4}x{5,6}");
  }

  for (int s = 1; s <= 5; ++s) {
    const Real h = spec.H[s - 1];
    if (h == 0.0) {
      bool covered = false;
      for (int k = 0; k < 3; ++k)
        if (sg[k] - 1 == s && spec.slits[k] > 0.0) covered = true;
      if (!covered) {
        std::ostringstream os;
        os << "side " << s
           << " has zero length and no positive slit attached to it";
        out.push_back(os.str());
      }
      continue;
    }
    if (h * sign_poly(sg, s + 0.5) >= 0.0) {
      std::ostringstream os;
      os << "sign rule violated at side " << s << ": H_" << s << " must be "
         << (required_sign(sg, s) > 0 ? "positive" : "negative");
      out.push_back(os.str());
    }
  }

  const auto& H = spec.H;
  if (sg == std::array<int, 3>{1, 2, 6} && H[3] - H[1] <= 0.0 &&
      !(H[4] - H[2] < 0.0))
    out.push_back("degenerate isthmus: type (1,2,6) needs H5-H3<0 when "
                  "H4-H2<=0");
  if (sg == std::array<int, 3>{1, 5, 6} && H[3] - H[1] <= 0.0 &&
      !(H[0] - H[2] > 0.0))
    out.push_back("degenerate isthmus: type (1,5,6) needs H1-H3>0 when "
                  "H4-H2<=0");
  if (sg == std::array<int, 3>{1, 2, 3} && !(H[4] < H[2]))
    out.push_back("degenerate isthmus: type (1,2,3) needs H5<H3");
  if (sg == std::array<int, 3>{4, 5, 6} && !(H[0] > H[2]))
    out.push_back("degenerate isthmus: type (4,5,6) needs H1>H3");

  return out;
}

void require_valid(const PolygonSpec& spec) {
  const auto violations = validate(spec);
  if (violations.empty()) return;
  std::string msg = "invalid polygon:";
  for (const auto& v : violations) msg += "\n  - " + v;
  throw InputError(msg);
}

std::array<Complex, 6> vertices(const PolygonSpec& spec) {
  std::array<Complex, 6> w;
  w[0] = {0.0, 0.0};
  for (int s = 1; s <= 5; ++s)
    w[s] = w[s - 1] + unit_i_pow(s) * spec.H[s - 1];
  return w;
}

PolygonSpec mirror(const PolygonSpec& spec) {
  PolygonSpec m;
  m.sigma = {7 - spec.sigma[2], 7 - spec.sigma[1], 7 - spec.sigma[0]};
  for (int s = 0; s < 5; ++s) m.H[s] = -spec.H[4 - s];
  m.slits = {spec.slits[2], spec.slits[1], spec.slits[0]};
  return m;
}

bool overlapping(const PolygonSpec& spec) {
  return spec.sigma[1] == spec.sigma[0] + 1 &&
         spec.sigma[2] == spec.sigma[1] + 1;
}

Real diameter(const PolygonSpec& spec) {
  const auto w = vertices(spec);
  std::vector<Complex> pts(w.begin(), w.end());
  for (int k = 0; k < 3; ++k)
    if (spec.slits[k] > 0.0) pts.push_back(spike_tip(spec, k));
  Real d = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      d = std::max(d, std::abs(pts[i] - pts[j]));
  return d > 0.0 ? d : 1.0;
}

Complex spike_direction(const PolygonSpec& spec, int k) {
  if (k < 0 || k > 2) throw DomainError("spike index must be in 0..2");
  const int side = spec.sigma[k] - 1;
  return unit_i_pow(side) * static_cast<Real>(required_sign(spec.sigma, side));
}

Complex spike_tip(const PolygonSpec& spec, int k) {
  const auto w = vertices(spec);
  return w[spec.sigma[k] - 1] + spike_direction(spec, k) * spec.slits[k];
}

int winding_number(const PolygonSpec& spec, Complex w, Real far_radius) {
  const auto v = vertices(spec);
  Real scale = diameter(spec);
  for (const auto& p : v) scale = std::max(scale, std::abs(w - p));
  const Real L = far_radius > 0.0 ? far_radius : 1e3 * (scale + 1.0);

  std::vector<Complex> path;
  path.push_back(v[0] - L);           // west ray entry
  for (const auto& p : v) path.push_back(p);
  path.push_back(v[5] + L);           // east ray exit
  path.push_back(v[5] + L + Complex(0.0, L));   // close far above
  path.push_back(v[0] - L + Complex(0.0, L));
  path.push_back(v[0] - L);

  int winding = 0;
  for (size_t i = 0; i + 1 < path.size(); ++i)
    winding += crossing(w, path[i], path[i + 1]);
  return winding;
}

bool point_inside(const PolygonSpec& spec, Complex w) {
  return winding_number(spec, w) >= 1;
}

Real boundary_distance(const PolygonSpec& spec, Complex w) {
  const auto v = vertices(spec);
  Real d = point_ray_distance(w, v[0], Complex(-1.0, 0.0));
  d = std::min(d, point_ray_distance(w, v[5], Complex(1.0, 0.0)));
  for (int s = 0; s < 5; ++s)
    d = std::min(d, point_segment_distance(w, v[s], v[s + 1]));
  for (int k = 0; k < 3; ++k)
    if (spec.slits[k] > 0.0)
      d = std::min(d, point_segment_distance(w, v[spec.sigma[k] - 1],
                                             spike_tip(spec, k)));
  return d;
}

}  // namespace hepta
