#pragma once

#include <string>
#include <vector>

#include "rsonc/model.hpp"

namespace rsonc {

/// The two-scenario motivating problem: b1 = u, sigma1 = u, b2 = u,
/// sigma2 = 0, f1 = u^2/2, f2 = u^4/4, h = -x^2/2, U = [-1,1],
/// Lambda = hull{(1,0),(0,1)}, with constant analytic adjoints
/// (P1,Q1) = (0,0), (P2,Q2) = (1,0) along the reference control ubar = 0.
ProblemSpec builtin_example();

/// Scalar linear-quadratic problem b = a x + u, sigma = c, f = x^2/2,
/// h = x^2/2 with exponential closed-form adjoints along ubar = 0.
ProblemSpec builtin_lq();

/// LQ variant with control cost f = (x^2 + u^2)/2; not singular at ubar = 0.
ProblemSpec builtin_lq_control_cost();

/// b = u, sigma = 0, f = x u, h = 0: singular at ubar = 0 with S = -1,
/// so the pointwise condition holds strictly and (H5) monotonicity holds.
ProblemSpec builtin_bilinear();

/// Smooth cubic dynamics b = u - x^3, sigma = 0.2 x + 0.05 x^2; exercises
/// the third-order remainder and the two y1 discretizations.
ProblemSpec builtin_cubic();

/// f = u makes the Hamiltonian gradient a nonzero constant; never singular.
ProblemSpec builtin_nonsingular();

ProblemSpec builtin(const std::string& name);
std::vector<std::string> builtin_names();

}  // namespace rsonc
