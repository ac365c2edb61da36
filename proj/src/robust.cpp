#include "rsonc/robust.hpp"

#include <algorithm>
#include <cmath>

#include "rsonc/parallel.hpp"

namespace rsonc {

VectorXd per_path_cost(const ProblemSpec& spec, const ControlProcess& control,
                       int scenario, const PathBundle& bundle) {
  const Scenario& sc = spec.scenarios.at(scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths();
  const double dt = grid.dt();

  ForwardProcesses fwd = simulate_forward(spec, control, scenario, bundle);
  VectorXd cost(P);
  parallel_for_chunks(P, [&](int lo, int hi) {
    for (int p = lo; p < hi; ++p) {
      double acc = 0.0;
      // left-endpoint quadrature, consistent with the Euler scheme's order
      for (int k = 0; k < N; ++k)
        acc += sc.f(grid.node(k), fwd.x.at(p, k), fwd.u.at(p, k)) * dt;
      acc += sc.h(fwd.x.at(p, N));
      cost[p] = acc;
    }
  });
  return cost;
}

std::pair<double, double> cost_per_scenario(const ProblemSpec& spec,
                                            const ControlProcess& control,
                                            int scenario,
                                            const PathBundle& bundle) {
  VectorXd c = per_path_cost(spec, control, scenario, bundle);
  const int P = static_cast<int>(c.size());
  double mean = c.mean();
  double var = 0.0;
  for (int p = 0; p < P; ++p) var += (c[p] - mean) * (c[p] - mean);
  double se = P > 1 ? std::sqrt(var / (P - 1) / P) : 0.0;
  return {mean, se};
}

CostTable robust_cost(const ProblemSpec& spec, const ControlProcess& control,
                      const PathBundle& bundle, double tie_sigma) {
  const int P = bundle.n_paths();
  const int S = static_cast<int>(spec.scenarios.size());
  const int V = static_cast<int>(spec.measures.vertices.size());

  CostTable table;
  table.tie_sigma = tie_sigma;
  table.per_path.resize(P, S);
  table.scenario_cost.resize(S);
  table.scenario_se.resize(S);

  for (int s = 0; s < S; ++s) {
    VectorXd c = per_path_cost(spec, control, s, bundle);
    table.per_path.col(s) = c;
    double mean = c.mean(), var = 0.0;
    for (int p = 0; p < P; ++p) var += (c[p] - mean) * (c[p] - mean);
    table.scenario_cost[s] = mean;
    table.scenario_se[s] = P > 1 ? std::sqrt(var / (P - 1) / P) : 0.0;
  }

  table.vertex_cost.resize(V);
  table.vertex_se.resize(V);
  int best = 0;
  for (int v = 0; v < V; ++v) {
    const VectorXd& lam = spec.measures.vertices[v];
    VectorXd c = table.per_path * lam;  // exact lambda-weighted combination
    double mean = c.mean(), var = 0.0;
    for (int p = 0; p < P; ++p) var += (c[p] - mean) * (c[p] - mean);
    table.vertex_cost[v] = mean;
    table.vertex_se[v] = P > 1 ? std::sqrt(var / (P - 1) / P) : 0.0;
    if (mean > table.vertex_cost[best]) best = v;
  }
  table.robust_value = table.vertex_cost[best];

  // Statistical ties on paired per-path differences against the best vertex.
  const VectorXd& lam_best = spec.measures.vertices[best];
  for (int v = 0; v < V; ++v) {
    if (v == best) {
      table.argmax.push_back(v);
      continue;
    }
    VectorXd diff = table.per_path * (lam_best - spec.measures.vertices[v]);
    double mean = diff.mean(), var = 0.0;
    for (int p = 0; p < P; ++p) var += (diff[p] - mean) * (diff[p] - mean);
    double se = P > 1 ? std::sqrt(var / (P - 1) / P) : 0.0;
    if (mean <= std::max(1e-12, tie_sigma * se)) table.argmax.push_back(v);
  }
  std::sort(table.argmax.begin(), table.argmax.end());
  return table;
}

std::vector<int> argmax_measures(const CostTable& table) {
  return table.argmax;
}

}  // namespace rsonc
