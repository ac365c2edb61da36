#include <cstring>
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rsonc/builtins.hpp"
#include "rsonc/config.hpp"
#include "rsonc/io.hpp"
#include "rsonc/robust.hpp"

using namespace rsonc;

#ifndef RSONC_SOURCE_DIR
#define RSONC_SOURCE_DIR "."
#endif

namespace {

VectorXd vec1(double v) {
  VectorXd x(1);
  x[0] = v;
  return x;
}

}  // namespace

TEST_SUITE("config_io") {

TEST_CASE("the shipped example config reproduces the builtin problem") {
  ProblemSpec cfg =
      load_problem_file(std::string(RSONC_SOURCE_DIR) + "/configs/example.json");
  CHECK(validate(cfg).ok());
  CHECK(cfg.adjoint_mode == AdjointMode::Analytic);
  CHECK(cfg.scenarios.size() == 2);

  ProblemSpec ref = builtin_example();
  PathBundle bundle = PathBundle::generate(42, 2000, cfg.grid);
  ControlProcess one = ControlProcess::constant(vec1(1.0));
  CostTable a = robust_cost(cfg, one, bundle);
  CostTable b = robust_cost(ref, one, bundle);
  for (int s = 0; s < 2; ++s)
    CHECK(a.scenario_cost[s] == doctest::Approx(b.scenario_cost[s]).epsilon(1e-14));

  // analytic adjoints from the config evaluate like the builtin's
  ForwardProcesses fwd = simulate_forward(cfg, cfg.ubar, 0, bundle);
  AdjointProcesses adj =
      solve_adjoints(cfg, 0, fwd, bundle, AdjointMode::Analytic);
  CHECK(adj.P2.at(17, 3)(0, 0) == 1.0);
  CHECK(adj.P1.at(17, 3)[0] == 0.0);
}

TEST_CASE("config errors carry context") {
  CHECK_THROWS_AS(load_problem_file("/nonexistent/rsonc.json"), ConfigError);
  nlohmann::json bad = {{"grid", {{"horizon", 1.0}, {"steps", 10}}}};
  CHECK_THROWS_AS(load_problem(bad), ConfigError);

  nlohmann::json badterm = nlohmann::json::parse(R"({
    "name": "t", "grid": {"horizon": 1.0, "steps": 4},
    "control_box": {"lower": [-1.0], "upper": [1.0]}, "x0": [0.0],
    "scenarios": [{"name": "s",
      "drift": [[{"u": [1]}]],
      "diffusion": [[]],
      "running_cost": [], "terminal_cost": []}],
    "measures": {"vertices": [[1.0]]}
  })");
  CHECK_THROWS_AS(load_problem(badterm), ConfigError);
}

TEST_CASE("controls parse from shorthand and JSON") {
  ProblemSpec spec = builtin_example();
  VectorXd out(1), x(1);
  x[0] = 0.0;
  std::vector<double> w{0.0};

  ControlProcess c1 = parse_control_arg("const:0.5", spec);
  c1.eval(spec.grid, 0, x, w, out);
  CHECK(out[0] == 0.5);

  nlohmann::json cj = nlohmann::json::parse(R"({
    "kind": "spike",
    "base": {"kind": "deterministic", "components": [[{"coef": 0.5, "t": 1}]]},
    "value": [1.0], "tau": 0.5, "alpha": 0.25
  })");
  ControlProcess c2 = load_control(cj, 1);
  // before the window: base 0.5 t; inside: the spike value
  c2.eval(spec.grid, 10, x, w, out);  // t = 0.1
  CHECK(out[0] == doctest::Approx(0.05).epsilon(1e-14));
  c2.eval(spec.grid, 55, x, w, out);  // t = 0.55 in [0.5, 0.75)
  CHECK(out[0] == 1.0);

  CHECK_THROWS_AS(parse_control_arg("const:1,2", spec), ConfigError);
  CHECK_THROWS_AS(parse_control_arg("garbage", spec), ConfigError);
}

TEST_CASE("fd_costs flag wires the fallback markers") {
  nlohmann::json doc = nlohmann::json::parse(R"({
    "name": "fd", "grid": {"horizon": 1.0, "steps": 8},
    "control_box": {"lower": [-1.0], "upper": [1.0]}, "x0": [0.5],
    "scenarios": [{"name": "s", "fd_costs": true,
      "drift": [[{"coef": 1.0, "u": [1]}]],
      "diffusion": [[]],
      "running_cost": [{"coef": 0.5, "x": [2]}],
      "terminal_cost": [{"coef": 0.5, "x": [2]}]}],
    "measures": {"vertices": [[1.0]]}
  })");
  ProblemSpec spec = load_problem(doc);
  CHECK(spec.scenarios[0].fd_fallback_f);
  CHECK(spec.scenarios[0].fd_fallback_h);
  CHECK_THROWS_AS(fd_consistency(spec, 0, 5, 1e-6), PreconditionError);
  // the fallback derivatives are still numerically sound
  VectorXd g(1), x = vec1(0.5), u = vec1(0.0);
  spec.scenarios[0].f_x(0.0, x, u, g);
  CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("panel CSV uses the columnar schema") {
  VectorPanel panel(1, 2, 1);
  panel.at(0, 0)[0] = 1.5;
  panel.at(0, 1)[0] = -2.25;
  std::ostringstream os;
  write_panel_csv(os, 3, panel, "x");
  CHECK(os.str() ==
        "scenario,path,step,field,value\n"
        "3,0,0,x[0],1.5\n"
        "3,0,1,x[0],-2.25\n");
}

TEST_CASE("binary panel dumps are deterministic and carry the header") {
  TimeGrid grid{1.0, 2};
  VectorPanel panel(2, 3, 1);
  for (int p = 0; p < 2; ++p)
    for (int k = 0; k < 3; ++k) panel.at(p, k)[0] = p + 0.25 * k;

  std::string f1 = "/tmp/rsonc_test_panel1.bin";
  std::string f2 = "/tmp/rsonc_test_panel2.bin";
  write_panel_binary(f1, 99, grid, panel);
  write_panel_binary(f2, 99, grid, panel);

  std::ifstream a(f1, std::ios::binary), b(f2, std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  REQUIRE(sa.str() == sb.str());
  const std::string& bytes = sa.str();
  REQUIRE(bytes.size() == 8 + 4 + 8 + 8 + 4 + 4 + 4 + 4 + 4 + 6 * 8);
  CHECK(bytes.substr(0, 8) == "RSONCPAN");
  std::uint64_t seed;
  std::memcpy(&seed, bytes.data() + 12, 8);
  CHECK(seed == 99);
  double first;
  std::memcpy(&first, bytes.data() + 48, 8);
  CHECK(first == 0.0);
  std::remove(f1.c_str());
  std::remove(f2.c_str());
}

TEST_CASE("provenance embeds the reproduction data") {
  ProblemSpec spec = builtin_example();
  PathBundle bundle = PathBundle::generate(31337, 123, spec.grid);
  Json j = provenance(spec, bundle);
  CHECK(j["seed"] == 31337);
  CHECK(j["n_paths"] == 123);
  CHECK(j["grid"]["steps"] == 100);
  CHECK(j["adjoint_mode"] == "analytic");
  CHECK(j["version"] == "0.1.0");
}

}  // TEST_SUITE
