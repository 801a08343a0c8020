#pragma once

#include "hepta/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace hepta {

// Heptagon with a straight angle at infinity: combinatorial type sigma lists
// the three intruding right angles, H holds the five signed side lengths.
// Positive slit entries turn the heptagon into a slit decagon; slit k is
// attached at the intruding corner sigma_k and prolongs side sigma_k - 1.
struct PolygonSpec {
  std::array<int, 3> sigma{1, 2, 3};
  std::array<Real, 5> H{0, 0, 0, 0, 0};
  std::array<Real, 3> slits{0, 0, 0};

  bool has_slits() const {
    return slits[0] > 0.0 || slits[1] > 0.0 || slits[2] > 0.0;
  }
};

// P_sigma(s) = prod_j (s - sigma_j).
Real sign_poly(const std::array<int, 3>& sigma, Real s);

// Required sign of H_s (s = 0..6 admitted; sides 0 and 6 are the rays).
int required_sign(const std::array<int, 3>& sigma, int s);

// All violations of the sign rule, the degeneracy table and slit positivity;
// empty means valid.
std::vector<std::string> validate(const PolygonSpec& spec);
void require_valid(const PolygonSpec& spec);  // throws InputError

// w_1 = 0, w_{s+1} = w_s + i^s H_s.
std::array<Complex, 6> vertices(const PolygonSpec& spec);

// Reflection in the imaginary axis: sigma -> (7-s3, 7-s2, 7-s1),
// H -> (-H5, ..., -H1), slits reversed.
PolygonSpec mirror(const PolygonSpec& spec);

// Types with three consecutive right turns may self-overlap.
bool overlapping(const PolygonSpec& spec);

// Diameter of the finite vertex set (scale for margins and refinement).
Real diameter(const PolygonSpec& spec);

// Spike data for slit decagons: attachment corner w(sigma_k) and the unit
// direction of the cut (prolongation of side sigma_k - 1).
Complex spike_direction(const PolygonSpec& spec, int k);
Complex spike_tip(const PolygonSpec& spec, int k);

// Point location by winding number of the closed contour made of the vertex
// polyline, the two horizontal rays and a closure far above the domain.
// winding >= 1 counts overlap zones as interior.
int winding_number(const PolygonSpec& spec, Complex w, Real far_radius = 0.0);
bool point_inside(const PolygonSpec& spec, Complex w);

// Distance from w to the boundary polyline (rays included, slits included).
Real boundary_distance(const PolygonSpec& spec, Complex w);

}  // namespace hepta
