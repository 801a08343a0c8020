#pragma once

#include <array>
#include <optional>

#include "hepta/params.hpp"
#include "hepta/polygon.hpp"
#include "hepta/types.hpp"

namespace hepta {

// Nine-component residual of the auxiliary heptagon system, in the order:
// three wedge conditions det(grad w, grad theta[35]) at the intruding-corner
// half-periods, the divisor condition theta[35](u0), and five side equations
// (sides 1 and 5 in closed form, the linear rows for c1, c2 and h).
// Each component is the real scalar left after stripping the fixed quarter
// phase of its row.
VecX residual(const PolygonSpec& spec, const AuxParams& params);

// Fifteen-component extension for a heptagon with slits: three divisor rows
// theta[35](u^k) at the zeros, three vanishing rows det(grad w, grad theta)
// at the zeros, the five side equations, three spike-length rows, and the
// marked-point divisor row theta[35](u0). The zeros live on the coreal
// lines gamma_k + i*Omega*rho with gamma = (0,0), (1/2,0), (1/2,1/2).
VecX residual_slit(const PolygonSpec& spec, const AuxParams& params);

// Exactly solvable parameters on the fixed symmetric curve: (c1,c2,h) solve
// the three wedge conditions with c = -1, then everything is rescaled so the
// realized side lengths (returned in h_sides) match the magnitude of spec.H.
AuxParams symmetric_start(const PolygonSpec& spec,
                          std::array<Real, 5>& h_sides);

// Damped Newton with finite-difference Jacobian. Without init, follows a
// straight-line continuation in H-space from the symmetric start. With init,
// polishes the given parameters directly (used by --resume and the restart
// checks). newton_iters, when given, receives the number of Newton steps.
AuxParams solve(const PolygonSpec& spec,
                const std::optional<AuxParams>& init = std::nullopt,
                Real tol = 1e-11, int* newton_iters = nullptr);

// Slit-decagon solve: continuation grows the slit lengths from the heptagon
// solution (zeros at the corner half-periods) as slits * s^3 with a secant
// predictor for the fifteen unknowns.
AuxParams solve_slit(const PolygonSpec& spec,
                     const std::optional<AuxParams>& init = std::nullopt,
                     Real tol = 1e-11, int* newton_iters = nullptr);

}  // namespace hepta
