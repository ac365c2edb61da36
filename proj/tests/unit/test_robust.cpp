#include <doctest.h>

#include <cmath>

#include "rsonc/builtins.hpp"
#include "rsonc/robust.hpp"

using namespace rsonc;

namespace {

VectorXd vec1(double v) {
  VectorXd x(1);
  x[0] = v;
  return x;
}

}  // namespace

TEST_SUITE("robust") {

TEST_CASE("the reference control has zero cost, exactly, with a full tie") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(51, 2000, spec.grid);
  CostTable table = robust_cost(spec, spec.ubar, bundle);
  CHECK(table.scenario_cost[0] == 0.0);
  CHECK(table.scenario_cost[1] == 0.0);
  CHECK(table.robust_value == 0.0);
  CHECK(table.argmax == std::vector<int>{0, 1});
}

TEST_CASE("u = 1 separates the vertices and picks the bear scenario") {
  ProblemSpec spec = builtin_example();
  const int P = 100000;
  PathBundle bundle = PathBundle::generate(53, P, spec.grid);
  ControlProcess one = ControlProcess::constant(vec1(1.0));
  CostTable table = robust_cost(spec, one, bundle);

  // gamma = 2 is deterministic: 1/4 - 1/2 = -1/4 pathwise
  CHECK(table.scenario_cost[1] == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(table.scenario_se[1] < 1e-14);
  // gamma = 1: 1/2 - E(1+W(1))^2/2 = -1/2 within 3 stderr
  CHECK(std::abs(table.scenario_cost[0] + 0.5) < 3.0 * table.scenario_se[0]);

  CHECK(table.robust_value == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(table.argmax == std::vector<int>{1});

  // tie rule is insensitive to the sigma multiplier here
  for (double sig : {1.0, 5.0}) {
    CostTable t2 = robust_cost(spec, one, bundle, sig);
    CHECK(t2.argmax == std::vector<int>{1});
  }
}

TEST_CASE("single-scenario polytopes collapse to the scenario cost") {
  ProblemSpec spec = builtin_lq();
  PathBundle bundle = PathBundle::generate(57, 4000, spec.grid);
  ControlProcess u = ControlProcess::constant(vec1(0.3));
  CostTable table = robust_cost(spec, u, bundle);
  auto [est, se] = cost_per_scenario(spec, u, 0, bundle);
  CHECK(table.robust_value == doctest::Approx(est).epsilon(1e-15));
  CHECK(table.vertex_cost[0] == doctest::Approx(est).epsilon(1e-15));
  CHECK(table.vertex_se[0] == doctest::Approx(se).epsilon(1e-12));
}

TEST_CASE("vertex costs are the exact lambda combinations") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(59, 1000, spec.grid);
  ControlProcess u = ControlProcess::constant(vec1(0.7));
  CostTable table = robust_cost(spec, u, bundle);
  for (std::size_t v = 0; v < spec.measures.vertices.size(); ++v) {
    double expect = 0.0;
    for (int s = 0; s < 2; ++s)
      expect += spec.measures.vertices[v][s] * table.scenario_cost[s];
    CHECK(table.vertex_cost[v] == doctest::Approx(expect).epsilon(1e-15));
  }

  // hull point = convex combination of vertex values, exactly
  double c = 0.3;
  VectorXd lam = c * spec.measures.vertices[0] +
                 (1.0 - c) * spec.measures.vertices[1];
  VectorXd per_path = table.per_path * lam;
  double hull_value = per_path.mean();
  CHECK(hull_value ==
        doctest::Approx(c * table.vertex_cost[0] +
                        (1.0 - c) * table.vertex_cost[1])
            .epsilon(1e-13));

  // robust value dominates every vertex value
  for (double vc : table.vertex_cost) CHECK(table.robust_value >= vc - 1e-15);
}

TEST_CASE("paired differences beat unpaired error bars") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(61, 20000, spec.grid);
  ControlProcess ubar = spec.ubar;
  ControlProcess ueps = ControlProcess::blend(
      ubar, ControlProcess::constant(vec1(1.0)), 0.25);

  CostTable a = robust_cost(spec, ubar, bundle);
  CostTable b = robust_cost(spec, ueps, bundle);
  // paired stderr of J(u^eps) - J(ubar) at the gamma=1 vertex
  VectorXd diff = b.per_path.col(0) - a.per_path.col(0);
  double mean = diff.mean(), var = 0.0;
  for (int p = 0; p < diff.size(); ++p)
    var += (diff[p] - mean) * (diff[p] - mean);
  double se_paired = std::sqrt(var / (diff.size() - 1) / diff.size());
  double se_unpaired =
      std::sqrt(a.scenario_se[0] * a.scenario_se[0] +
                b.scenario_se[0] * b.scenario_se[0]);
  CHECK(se_paired <= se_unpaired + 1e-15);
}

}  // TEST_SUITE
