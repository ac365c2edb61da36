#pragma once

#include <vector>

#include "rsonc/forward.hpp"
#include "rsonc/model.hpp"
#include "rsonc/paths.hpp"

namespace rsonc {

/// Per-scenario and per-vertex Monte Carlo costs under one control, the
/// robust value (max over polytope vertices; the objective is linear in
/// lambda so extrema sit at vertices) and the statistical argmax set.
struct CostTable {
  std::vector<double> scenario_cost, scenario_se;
  std::vector<double> vertex_cost, vertex_se;
  double robust_value = 0.0;
  std::vector<int> argmax;         // vertex indices within tolerance of max
  double tie_sigma = 3.0;          // argmax tie rule: 3 paired stderr
  MatrixXd per_path;               // paths x scenarios, pathwise costs
};

/// Left-endpoint Riemann sum of the running cost plus terminal cost,
/// averaged over paths: (estimate, stderr).
std::pair<double, double> cost_per_scenario(const ProblemSpec& spec,
                                            const ControlProcess& control,
                                            int scenario,
                                            const PathBundle& bundle);

/// Pathwise per-scenario costs (no reduction); shared by the cost table and
/// the expansion module, which needs paired differences.
VectorXd per_path_cost(const ProblemSpec& spec, const ControlProcess& control,
                       int scenario, const PathBundle& bundle);

/// Full cost table. Argmax ties are decided on paired per-path differences
/// against the best vertex (common random numbers), with tolerance
/// max(1e-12, tie_sigma * paired stderr).
CostTable robust_cost(const ProblemSpec& spec, const ControlProcess& control,
                      const PathBundle& bundle, double tie_sigma = 3.0);

/// The argmax-measure vertex set Lambda^u; nonempty by construction.
std::vector<int> argmax_measures(const CostTable& table);

}  // namespace rsonc
