#include <doctest.h>

#include <cmath>

#include "rsonc/builtins.hpp"
#include "rsonc/expansion.hpp"
#include "rsonc/io.hpp"

using namespace rsonc;

namespace {

VectorXd vec1(double v) {
  VectorXd x(1);
  x[0] = v;
  return x;
}

}  // namespace

TEST_SUITE("expansion") {

TEST_CASE("motivating example at the deterministic vertex is exact") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(151, 4000, spec.grid);
  ControlProcess one = ControlProcess::constant(vec1(1.0));
  ExpansionReport rep =
      expansion_scan(spec, spec.ubar, one, default_eps_list(), bundle);

  REQUIRE(rep.fits.size() == 2);  // both vertices tie at ubar
  const auto& bear = rep.fits[1];  // vertex (0,1): gamma = 2 only
  REQUIRE(bear.vertex == 1);
  for (std::size_t e = 0; e < rep.eps.size(); ++e) {
    double eps = rep.eps[e];
    double expect = 0.25 * std::pow(eps, 4) - 0.5 * eps * eps;
    CHECK(std::abs(bear.dj[e] - expect) < 1e-12);
    CHECK(bear.dj_se[e] < 1e-14);
    // remainder against the predicted coefficients is exactly eps^4/4
    CHECK(std::abs(bear.remainder[e] - 0.25 * std::pow(eps, 4)) < 1e-12);
  }
  CHECK(std::abs(bear.a1_pred) < 1e-15);
  CHECK(bear.a2_pred == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(bear.remainder_slope == doctest::Approx(4.0).epsilon(0.2 / 4.0));
}

TEST_CASE("motivating example at the stochastic vertex: paired estimators") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(42, 20000, spec.grid);
  ControlProcess one = ControlProcess::constant(vec1(1.0));
  ExpansionReport rep =
      expansion_scan(spec, spec.ubar, one, default_eps_list(), bundle);

  const auto& bull = rep.fits[0];  // vertex (1,0): gamma = 1 only
  REQUIRE(bull.vertex == 0);
  // the pathwise cost difference is exactly quadratic in eps, so the fitted
  // a1 vanishes to roundoff and a2 carries all the noise
  CHECK(std::abs(bull.a1_fit) <= std::max(3.0 * bull.a1_fit_se, 1e-9));
  CHECK(std::abs(bull.a1_pred) < 1e-15);
  CHECK(std::abs(bull.a2_fit + 0.5) <= 3.0 * bull.a2_fit_se);
  CHECK(std::abs(bull.a2_pred + 0.5) <= 3.0 * bull.a2_pred_se);
  // fitted vs predicted within 3 paired stderr (the derived criterion)
  CHECK(std::abs(bull.a2_fit - bull.a2_pred) <= 3.0 * bull.a2_gap_se);
  CHECK(bull.a2_gap_se > 0.0);
}

TEST_CASE("fitted a1 is statistically zero on singular built-ins") {
  PathBundle bundle;
  for (const char* name : {"example", "bilinear"}) {
    ProblemSpec spec = builtin(name);
    bundle = PathBundle::generate(157, 4000, spec.grid);
    ExpansionReport rep = expansion_scan(
        spec, spec.ubar, ControlProcess::constant(vec1(1.0)),
        default_eps_list(), bundle);
    for (const auto& fit : rep.fits) {
      CHECK(std::abs(fit.a1_pred) <=
            std::max(3.0 * fit.a1_pred_se, 1e-9));
    }
  }
}

TEST_CASE("eps = 0 blending reproduces the reference cost exactly") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(163, 500, spec.grid);
  ControlProcess u0 = ControlProcess::blend(
      spec.ubar, ControlProcess::constant(vec1(1.0)), 0.0);
  CostTable a = robust_cost(spec, spec.ubar, bundle);
  CostTable b = robust_cost(spec, u0, bundle);
  for (int s = 0; s < 2; ++s)
    CHECK(a.scenario_cost[s] == b.scenario_cost[s]);
}

TEST_CASE("reports regenerate bit-exactly from the same seed") {
  ProblemSpec spec = builtin_example();
  PathBundle b1 = PathBundle::generate(167, 800, spec.grid);
  PathBundle b2 = PathBundle::generate(167, 800, spec.grid);
  ControlProcess one = ControlProcess::constant(vec1(1.0));
  ExpansionReport r1 = expansion_scan(spec, spec.ubar, one,
                                      default_eps_list(), b1);
  ExpansionReport r2 = expansion_scan(spec, spec.ubar, one,
                                      default_eps_list(), b2);
  CHECK(to_json(r1).dump() == to_json(r2).dump());
}

TEST_CASE("epsilon ladder validation") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(173, 64, spec.grid);
  ControlProcess one = ControlProcess::constant(vec1(1.0));
  CHECK_THROWS_AS(
      expansion_scan(spec, spec.ubar, one, {0.25, 0.125, 0.0625}, bundle),
      PreconditionError);
  CHECK_THROWS_AS(
      expansion_scan(spec, spec.ubar, one, {0.5, 0.25, 0.125, 0.25}, bundle),
      PreconditionError);
  CHECK_THROWS_AS(
      expansion_scan(spec, spec.ubar, one, {1.5, 0.5, 0.25, 0.125}, bundle),
      PreconditionError);
}

}  // TEST_SUITE
