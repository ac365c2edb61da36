#include <doctest.h>

#include <cmath>

#include "rsonc/builtins.hpp"
#include "rsonc/forward.hpp"
#include "rsonc/polynomial.hpp"

#include "oracles.hpp"

using namespace rsonc;

namespace {

VectorXd vec1(double v) {
  VectorXd x(1);
  x[0] = v;
  return x;
}

// single-scenario scalar problem from polynomials
ProblemSpec poly_problem(Polynomial b, Polynomial s, double x0, double lo,
                         double hi, int steps = 100) {
  ProblemSpec spec;
  spec.name = "test";
  spec.n = spec.m = 1;
  spec.grid = TimeGrid{1.0, steps};
  spec.box.lower = vec1(lo);
  spec.box.upper = vec1(hi);
  spec.x0 = vec1(x0);
  Polynomial f(1, 1), h(1, 1);
  spec.scenarios = {make_polynomial_scenario("test", 1, 1, {b}, {s}, f, h)};
  spec.measures.scenario_count = 1;
  spec.measures.vertices = {vec1(1.0)};
  spec.adjoint_mode = AdjointMode::Regression;
  spec.ubar = ControlProcess::constant(vec1(0.0));
  return spec;
}

}  // namespace

TEST_SUITE("forward") {

TEST_CASE("zero control freezes the motivating example's states") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(3, 32, spec.grid);
  ControlProcess zero = ControlProcess::constant(vec1(0.0));
  for (int s = 0; s < 2; ++s) {
    ForwardProcesses fwd = simulate_forward(spec, zero, s, bundle);
    for (int p = 0; p < bundle.n_paths(); ++p)
      for (int k = 0; k <= spec.grid.steps; ++k)
        CHECK(fwd.x.at(p, k)[0] == 0.0);
  }
}

TEST_CASE("deterministic scenario integrates exactly") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(3, 8, spec.grid);
  ControlProcess one = ControlProcess::constant(vec1(1.0));
  ForwardProcesses fwd = simulate_forward(spec, one, 1, bundle);
  for (int p = 0; p < bundle.n_paths(); ++p)
    for (int k = 0; k <= spec.grid.steps; ++k)
      CHECK(fwd.x.at(p, k)[0] ==
            doctest::Approx(spec.grid.node(k)).epsilon(1e-14));
}

TEST_CASE("linear SDE mean matches the closed form") {
  // b = 0.1 x, sigma = 0.2 x, x0 = 1: E x(T) = e^{0.1 T}
  Polynomial b(1, 1), s(1, 1);
  b.add_term(0.1, {1});
  s.add_term(0.2, {1});
  ProblemSpec spec = poly_problem(b, s, 1.0, -1.0, 1.0);
  const int P = 100000;
  PathBundle bundle = PathBundle::generate(314, P, spec.grid);
  ForwardProcesses fwd =
      simulate_forward(spec, ControlProcess::constant(vec1(0.0)), 0, bundle);
  double mean = 0.0, var = 0.0;
  for (int p = 0; p < P; ++p) mean += fwd.x.at(p, spec.grid.steps)[0];
  mean /= P;
  for (int p = 0; p < P; ++p) {
    double d = fwd.x.at(p, spec.grid.steps)[0] - mean;
    var += d * d;
  }
  double se = std::sqrt(var / (P - 1) / P);
  CHECK(std::abs(mean - std::exp(0.1)) < 3.0 * se);
}

TEST_CASE("non-finite states abort with location") {
  Polynomial b(1, 1), s(1, 1);
  b.add_term(1.0, {3});
  ProblemSpec spec = poly_problem(b, s, 1e200, -1.0, 1.0, 4);
  PathBundle bundle = PathBundle::generate(1, 4, spec.grid);
  try {
    simulate_forward(spec, ControlProcess::constant(vec1(0.0)), 0, bundle);
    FAIL("expected SimulationError");
  } catch (const SimulationError& e) {
    CHECK(e.scenario == 0);
    CHECK(e.path == 0);
    CHECK(e.step >= 1);
  }
}

TEST_CASE("fundamental matrix is the identity when dx-coefficients vanish") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(9, 16, spec.grid);
  for (int s = 0; s < 2; ++s) {
    ForwardProcesses fwd = simulate_forward(
        spec, ControlProcess::constant(vec1(0.0)), s, bundle);
    simulate_fundamental(spec, fwd, bundle);
    for (int p = 0; p < bundle.n_paths(); ++p)
      for (int k = 0; k <= spec.grid.steps; ++k) {
        CHECK(fwd.phi.at(p, k)(0, 0) == 1.0);
        CHECK((fwd.phi.at(p, k) * fwd.phi_inv.at(p, k) -
               MatrixXd::Identity(1, 1))
                  .norm() < 1e-8);
      }
  }
}

TEST_CASE("fundamental matrix mean matches geometric Brownian motion") {
  Polynomial b(1, 1), s(1, 1);
  b.add_term(0.1, {1});
  s.add_term(0.2, {1});
  ProblemSpec spec = poly_problem(b, s, 1.0, -1.0, 1.0);
  const int P = 100000;
  PathBundle bundle = PathBundle::generate(217, P, spec.grid);
  ForwardProcesses fwd =
      simulate_forward(spec, ControlProcess::constant(vec1(0.0)), 0, bundle);
  simulate_fundamental(spec, fwd, bundle);
  double mean = 0.0, var = 0.0;
  const int N = spec.grid.steps;
  for (int p = 0; p < P; ++p) mean += fwd.phi.at(p, N)(0, 0);
  mean /= P;
  for (int p = 0; p < P; ++p) {
    double d = fwd.phi.at(p, N)(0, 0) - mean;
    var += d * d;
  }
  double se = std::sqrt(var / (P - 1) / P);
  CHECK(std::abs(mean - std::exp(0.1)) < 3.0 * se);
  // inversion contract
  for (int p = 0; p < 50; ++p)
    for (int k = 0; k <= N; k += 10)
      CHECK(std::abs(fwd.phi.at(p, k)(0, 0) * fwd.phi_inv.at(p, k)(0, 0) -
                     1.0) < 1e-8);
}

TEST_CASE("degenerate fundamental matrix raises a degeneracy error") {
  Polynomial b(1, 1), s(1, 1);
  b.add_term(-4.0, {1});  // 1 + b_x dt = 0 at dt = 1/4
  ProblemSpec spec = poly_problem(b, s, 1.0, -1.0, 1.0, 4);
  PathBundle bundle = PathBundle::generate(1, 2, spec.grid);
  ForwardProcesses fwd =
      simulate_forward(spec, ControlProcess::constant(vec1(0.0)), 0, bundle);
  CHECK_THROWS_AS(simulate_fundamental(spec, fwd, bundle), DegeneracyError);
}

TEST_CASE("first variation: zero perturbation and exact linear case") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(4, 16, spec.grid);
  ControlProcess zero = ControlProcess::constant(vec1(0.0));
  ForwardProcesses fwd = simulate_forward(spec, zero, 1, bundle);

  VectorPanel v0(bundle.n_paths(), spec.grid.steps + 1, 1);
  VectorPanel y0 = simulate_first_variation(spec, fwd, v0, bundle);
  for (int p = 0; p < bundle.n_paths(); ++p)
    for (int k = 0; k <= spec.grid.steps; ++k) CHECK(y0.at(p, k)[0] == 0.0);

  VectorPanel v = perturbation_trace(
      spec, ControlProcess::constant(vec1(1.0)), fwd, bundle);
  VectorPanel y1 = simulate_first_variation(spec, fwd, v, bundle);
  for (int p = 0; p < bundle.n_paths(); ++p)
    for (int k = 0; k <= spec.grid.steps; ++k)
      CHECK(y1.at(p, k)[0] ==
            doctest::Approx(spec.grid.node(k)).epsilon(1e-14));
}

TEST_CASE("first variation is pathwise linear in the perturbation") {
  ProblemSpec spec = builtin_cubic();
  spec.grid.steps = 64;
  PathBundle bundle = PathBundle::generate(21, 64, spec.grid);
  ForwardProcesses fwd = simulate_forward(spec, spec.ubar, 0, bundle);

  ControlProcess u1 = ControlProcess::constant(vec1(0.8));
  ControlProcess u2 = ControlProcess::deterministic(
      [](double t, VectorXd& out) { out = VectorXd::Constant(1, 0.5 * t); });
  VectorPanel v1 = perturbation_trace(spec, u1, fwd, bundle);
  VectorPanel v2 = perturbation_trace(spec, u2, fwd, bundle);

  const double a = 2.0, b = -0.5;
  VectorPanel vc = v1;
  for (int p = 0; p < vc.paths(); ++p)
    for (int k = 0; k < vc.nodes(); ++k)
      vc.at(p, k) = a * v1.at(p, k) + b * v2.at(p, k);

  VectorPanel y1 = simulate_first_variation(spec, fwd, v1, bundle);
  VectorPanel y2 = simulate_first_variation(spec, fwd, v2, bundle);
  VectorPanel yc = simulate_first_variation(spec, fwd, vc, bundle);
  double worst = 0.0;
  for (int p = 0; p < vc.paths(); ++p)
    for (int k = 0; k < vc.nodes(); ++k)
      worst = std::max(worst, std::abs(yc.at(p, k)[0] - a * y1.at(p, k)[0] -
                                       b * y2.at(p, k)[0]));
  CHECK(worst < 1e-10);
}

TEST_CASE("representation formula reproduces the additive-noise solution") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(12, 32, spec.grid);
  ControlProcess zero = ControlProcess::constant(vec1(0.0));
  ForwardProcesses fwd = simulate_forward(spec, zero, 0, bundle);
  simulate_fundamental(spec, fwd, bundle);
  VectorPanel v = perturbation_trace(
      spec, ControlProcess::constant(vec1(1.0)), fwd, bundle);
  VectorPanel yrep = y1_via_representation(spec, fwd, v, bundle);
  std::vector<double> w;
  for (int p = 0; p < bundle.n_paths(); ++p) {
    bundle.cumulative(p, w);
    for (int k = 0; k <= spec.grid.steps; ++k)
      CHECK(yrep.at(p, k)[0] ==
            doctest::Approx(spec.grid.node(k) + w[k]).epsilon(1e-12));
  }

  VectorPanel v0(bundle.n_paths(), spec.grid.steps + 1, 1);
  VectorPanel y0 = y1_via_representation(spec, fwd, v0, bundle);
  for (int p = 0; p < bundle.n_paths(); ++p)
    for (int k = 0; k <= spec.grid.steps; ++k) CHECK(y0.at(p, k)[0] == 0.0);
}

TEST_CASE("representation-vs-direct gap halves with the step size") {
  ProblemSpec spec = builtin_cubic();
  ControlProcess u = ControlProcess::constant(vec1(1.25));

  auto gap_at = [&](const PathBundle& bundle) {
    ProblemSpec s = spec;
    s.grid = bundle.grid();
    ForwardProcesses fwd = simulate_forward(s, s.ubar, 0, bundle);
    simulate_fundamental(s, fwd, bundle);
    VectorPanel v = perturbation_trace(s, u, fwd, bundle);
    VectorPanel direct = simulate_first_variation(s, fwd, v, bundle);
    VectorPanel rep = y1_via_representation(s, fwd, v, bundle);
    double worst = 0.0;
    for (int p = 0; p < bundle.n_paths(); ++p)
      for (int k = 0; k < direct.nodes(); ++k)
        worst = std::max(worst,
                         (direct.at(p, k) - rep.at(p, k)).norm());
    return worst;
  };

  TimeGrid fine_grid{1.0, 128};
  PathBundle fine = PathBundle::generate(77, 2000, fine_grid);
  PathBundle coarse = fine.coarsen(2);  // same Brownian path, dt doubled
  double gap_fine = gap_at(fine);
  double gap_coarse = gap_at(coarse);
  double ratio = gap_coarse / gap_fine;
  CHECK(ratio > 1.5);
  CHECK(ratio < 3.0);
}

TEST_CASE("second variation vanishes without curvature") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(8, 16, spec.grid);
  for (int s = 0; s < 2; ++s) {
    ForwardProcesses fwd = simulate_forward(
        spec, ControlProcess::constant(vec1(0.0)), s, bundle);
    VectorPanel v = perturbation_trace(
        spec, ControlProcess::constant(vec1(1.0)), fwd, bundle);
    VectorPanel y1 = simulate_first_variation(spec, fwd, v, bundle);
    VectorPanel y2 = simulate_second_variation(spec, fwd, v, y1, bundle);
    for (int p = 0; p < bundle.n_paths(); ++p)
      for (int k = 0; k <= spec.grid.steps; ++k)
        CHECK(y2.at(p, k)[0] == 0.0);
  }
}

TEST_CASE("second variation matches a second difference in epsilon") {
  // deterministic b = x^2 u: y2 = d^2/deps^2 x^eps at eps=0
  Polynomial b(1, 1), s(1, 1);
  b.add_term(1.0, {2}, {1});
  ProblemSpec spec = poly_problem(b, s, 1.0, -2.0, 2.0, 64);
  spec.ubar = ControlProcess::constant(vec1(0.5));
  PathBundle bundle = PathBundle::generate(2, 1, spec.grid);

  ForwardProcesses fwd = simulate_forward(spec, spec.ubar, 0, bundle);
  ControlProcess u = ControlProcess::constant(vec1(1.0));
  VectorPanel v = perturbation_trace(spec, u, fwd, bundle);
  VectorPanel y1 = simulate_first_variation(spec, fwd, v, bundle);
  VectorPanel y2 = simulate_second_variation(spec, fwd, v, y1, bundle);

  const double eps = 1e-3;
  ControlProcess up = ControlProcess::blend(spec.ubar, u, eps);
  // ubar - eps (u - ubar) = blend with -eps
  ControlProcess um = ControlProcess::blend(spec.ubar, u, -eps);
  ForwardProcesses fp = simulate_forward(spec, up, 0, bundle);
  ForwardProcesses fm = simulate_forward(spec, um, 0, bundle);

  double worst = 0.0;
  for (int k = 0; k <= spec.grid.steps; ++k) {
    double fd = (fp.x.at(0, k)[0] - 2.0 * fwd.x.at(0, k)[0] +
                 fm.x.at(0, k)[0]) /
                (eps * eps);
    worst = std::max(worst, std::abs(fd - y2.at(0, k)[0]));
  }
  CHECK(worst < 5e-3);
}

TEST_CASE("remainder norms vanish identically in the degenerate cases") {
  ProblemSpec spec = builtin_example();
  spec.grid.steps = 32;
  PathBundle bundle = PathBundle::generate(31, 16, spec.grid);
  ControlProcess one = ControlProcess::constant(vec1(1.0));

  // gamma = 2 is linear deterministic: dx = eps y1 exactly
  RemainderReport rep = remainder_orders(spec, spec.ubar, one, 1, bundle,
                                         {0.25, 0.125, 0.0625});
  CHECK(rep.vanishes[1]);
  CHECK(rep.vanishes[2]);
  CHECK_FALSE(rep.vanishes[0]);

  // u = ubar: all three norms are exactly zero
  RemainderReport trivial = remainder_orders(spec, spec.ubar, spec.ubar, 0,
                                             bundle, {0.25, 0.125, 0.0625});
  CHECK(trivial.vanishes[0]);
  CHECK(trivial.vanishes[1]);
  CHECK(trivial.vanishes[2]);

  CHECK_THROWS_AS(remainder_orders(spec, spec.ubar, one, 0, bundle, {0.5, 0.25}),
                  PreconditionError);
  CHECK_THROWS_AS(
      remainder_orders(spec, spec.ubar, one, 0, bundle, {0.25, 0.5, 0.125}),
      PreconditionError);
}

TEST_CASE("remainder slopes follow the first, second and third order") {
  ProblemSpec spec = builtin_cubic();
  spec.grid.steps = 64;
  PathBundle bundle = PathBundle::generate(404, 2000, spec.grid);
  std::vector<double> eps;
  for (int k = 3; k <= 7; ++k) eps.push_back(std::pow(2.0, -k));
  RemainderReport rep = remainder_orders(
      spec, spec.ubar, ControlProcess::constant(vec1(1.25)), 0, bundle, eps);
  CHECK(rep.slopes[0] == doctest::Approx(1.0).epsilon(0.25));
  CHECK(rep.slopes[1] == doctest::Approx(2.0).epsilon(0.125));
  CHECK(rep.slopes[2] == doctest::Approx(3.0).epsilon(0.35 / 3.0));
}

}  // TEST_SUITE
