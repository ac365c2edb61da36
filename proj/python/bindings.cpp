// Python bindings for the main pipeline operations. Reports cross the
// boundary as plain dicts (via their JSON form); panels as numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rsonc/builtins.hpp"
#include "rsonc/config.hpp"
#include "rsonc/io.hpp"

namespace py = pybind11;
using namespace rsonc;

namespace {

ProblemSpec resolve_problem(const py::object& problem) {
  if (py::isinstance<py::str>(problem)) {
    std::string s = problem.cast<std::string>();
    for (const std::string& name : builtin_names())
      if (name == s) return builtin(s);
    return load_problem_file(s);
  }
  if (py::isinstance<py::dict>(problem)) {
    py::object dumps = py::module_::import("json").attr("dumps");
    std::string text = dumps(problem).cast<std::string>();
    return load_problem(nlohmann::json::parse(text));
  }
  throw ConfigError("problem must be a builtin name, a config path or a dict");
}

py::object json_to_py(const Json& j) {
  py::object loads = py::module_::import("json").attr("loads");
  return loads(j.dump());
}

py::array_t<double> panel_to_numpy(const VectorPanel& panel) {
  py::array_t<double> out(
      {panel.paths(), panel.nodes(), panel.dim()});
  auto buf = out.mutable_unchecked<3>();
  for (int p = 0; p < panel.paths(); ++p)
    for (int k = 0; k < panel.nodes(); ++k)
      for (int d = 0; d < panel.dim(); ++d) buf(p, k, d) = panel.at(p, k)[d];
  return out;
}

struct Run {
  ProblemSpec spec;
  PathBundle bundle;
};

Run make_run(const py::object& problem, std::uint64_t seed, int paths,
             int steps) {
  Run r{resolve_problem(problem), {}};
  if (steps > 0) r.spec.grid.steps = steps;
  r.bundle = PathBundle::generate(seed, paths, r.spec.grid);
  return r;
}

}  // namespace

PYBIND11_MODULE(_rsonc, m) {
  m.doc() = "robust singular stochastic optimal control analysis toolkit";
  m.attr("__version__") = "0.1.0";

  m.def("builtin_names", &builtin_names, "names of the built-in problems");

  m.def(
      "validate",
      [](const py::object& problem) {
        return json_to_py(to_json(validate(resolve_problem(problem))));
      },
      py::arg("problem"));

  m.def(
      "generate_increments",
      [](std::uint64_t seed, int paths, double horizon, int steps) {
        PathBundle b = PathBundle::generate(seed, paths, {horizon, steps});
        py::array_t<double> out({paths, steps});
        auto buf = out.mutable_unchecked<2>();
        for (int p = 0; p < paths; ++p)
          for (int k = 0; k < steps; ++k) buf(p, k) = b.dW(p, k);
        return out;
      },
      py::arg("seed"), py::arg("paths"), py::arg("horizon") = 1.0,
      py::arg("steps") = 100,
      "seeded Brownian increment panel (paths x steps)");

  m.def(
      "simulate_state",
      [](const py::object& problem, const std::string& control, int scenario,
         std::uint64_t seed, int paths, int steps) {
        Run r = make_run(problem, seed, paths, steps);
        ControlProcess u = parse_control_arg(control, r.spec);
        ForwardProcesses fwd = simulate_forward(r.spec, u, scenario, r.bundle);
        return panel_to_numpy(fwd.x);
      },
      py::arg("problem"), py::arg("control") = "ubar", py::arg("scenario") = 0,
      py::arg("seed") = 1, py::arg("paths") = 1000, py::arg("steps") = 0,
      "Euler-Maruyama state panel (paths x nodes x n)");

  m.def(
      "robust_cost",
      [](const py::object& problem, const std::string& control,
         std::uint64_t seed, int paths, int steps) {
        Run r = make_run(problem, seed, paths, steps);
        ControlProcess u = parse_control_arg(control, r.spec);
        Json j = to_json(robust_cost(r.spec, u, r.bundle));
        j["provenance"] = provenance(r.spec, r.bundle, {{"control", control}});
        return json_to_py(j);
      },
      py::arg("problem"), py::arg("control") = "ubar", py::arg("seed") = 1,
      py::arg("paths") = 10000, py::arg("steps") = 0,
      "per-scenario / per-vertex costs, robust value and argmax vertices");

  m.def(
      "check_singular",
      [](const py::object& problem, const std::string& control_bar,
         std::uint64_t seed, int paths, int steps, double tol) {
        Run r = make_run(problem, seed, paths, steps);
        ControlProcess ubar = parse_control_arg(control_bar, r.spec);
        return json_to_py(
            to_json(check_singular(r.spec, ubar, r.bundle, tol)));
      },
      py::arg("problem"), py::arg("control_bar") = "ubar", py::arg("seed") = 1,
      py::arg("paths") = 1000, py::arg("steps") = 0, py::arg("tol") = 1e-9);

  m.def(
      "pointwise_sonc",
      [](const py::object& problem, const std::vector<double>& tau_grid,
         const std::vector<double>& v_grid, const std::string& control_bar,
         std::uint64_t seed, int paths, int steps, double tol) {
        Run r = make_run(problem, seed, paths, steps);
        if (r.spec.m != 1)
          throw ConfigError("scalar v_grid covers scalar controls only");
        ControlProcess ubar = parse_control_arg(control_bar, r.spec);
        std::vector<VectorXd> vs;
        for (double v : v_grid) vs.push_back(VectorXd::Constant(1, v));
        return json_to_py(to_json(
            pointwise_sonc(r.spec, ubar, tau_grid, vs, r.bundle, tol)));
      },
      py::arg("problem"), py::arg("tau_grid"), py::arg("v_grid"),
      py::arg("control_bar") = "ubar", py::arg("seed") = 1,
      py::arg("paths") = 1000, py::arg("steps") = 0, py::arg("tol") = 1e-9);

  m.def(
      "integral_sonc",
      [](const py::object& problem, const std::vector<double>& v_grid,
         const std::string& control_bar, std::uint64_t seed, int paths,
         int steps, double tol) {
        Run r = make_run(problem, seed, paths, steps);
        if (r.spec.m != 1)
          throw ConfigError("scalar v_grid covers scalar controls only");
        ControlProcess ubar = parse_control_arg(control_bar, r.spec);
        std::vector<ControlProcess> us;
        for (double v : v_grid)
          us.push_back(ControlProcess::constant(VectorXd::Constant(1, v)));
        return json_to_py(
            to_json(integral_sonc(r.spec, ubar, us, r.bundle, tol)));
      },
      py::arg("problem"), py::arg("v_grid"), py::arg("control_bar") = "ubar",
      py::arg("seed") = 1, py::arg("paths") = 1000, py::arg("steps") = 0,
      py::arg("tol") = 1e-9);

  m.def(
      "expansion",
      [](const py::object& problem, const std::string& control,
         const std::string& control_bar, const std::vector<double>& eps,
         std::uint64_t seed, int paths, int steps) {
        Run r = make_run(problem, seed, paths, steps);
        ControlProcess u = parse_control_arg(control, r.spec);
        ControlProcess ubar = parse_control_arg(control_bar, r.spec);
        std::vector<double> ladder = eps.empty() ? default_eps_list() : eps;
        return json_to_py(
            to_json(expansion_scan(r.spec, ubar, u, ladder, r.bundle)));
      },
      py::arg("problem"), py::arg("control") = "const:1",
      py::arg("control_bar") = "ubar",
      py::arg("eps") = std::vector<double>{}, py::arg("seed") = 1,
      py::arg("paths") = 4000, py::arg("steps") = 0);

  m.def(
      "example_summary",
      [](std::uint64_t seed, int paths) {
        ProblemSpec spec = builtin_example();
        PathBundle bundle = PathBundle::generate(seed, paths, spec.grid);
        SingularReport sing = check_singular(spec, spec.ubar, bundle);
        ControlProcess one = ControlProcess::constant(VectorXd::Constant(1, 1.0));
        CostTable cbar = robust_cost(spec, spec.ubar, bundle);
        CostTable cone = robust_cost(spec, one, bundle);
        std::vector<VectorXd> vs;
        for (double v : {-1.0, -0.5, 0.5, 1.0})
          vs.push_back(VectorXd::Constant(1, v));
        PointwiseSoncReport pw =
            pointwise_sonc(spec, spec.ubar, {0.25, 0.5, 0.75}, vs, bundle);
        Json j;
        j["singular"] = sing.verdict == Verdict::Satisfied;
        j["robust_value_ubar"] = cbar.robust_value;
        j["robust_value_one"] = cone.robust_value;
        j["argmax_one"] = cone.argmax;
        j["pointwise_lhs"] = pw.min_over_vertices;
        j["pointwise_verdict"] = to_string(pw.verdict);
        return json_to_py(j);
      },
      py::arg("seed") = 1, py::arg("paths") = 512,
      "end-to-end walkthrough of the built-in two-scenario problem");

  py::register_exception<ConfigError>(m, "RsoncConfigError");
  py::register_exception<PreconditionError>(m, "RsoncPreconditionError");
  py::register_exception<DegeneracyError>(m, "RsoncDegeneracyError");
}
