#include "rsonc/builtins.hpp"

#include <cmath>

#include "rsonc/polynomial.hpp"

namespace rsonc {

namespace {

VectorXd scalar_vec(double v) {
  VectorXd x(1);
  x[0] = v;
  return x;
}

PathVecFn const_path_vec(double v) {
  return [v](double, const VectorXd&, VectorXd& out) {
    out.resize(1);
    out[0] = v;
  };
}

PathMatFn const_path_mat(double v) {
  return [v](double, const VectorXd&, MatrixXd& out) {
    out.resize(1, 1);
    out(0, 0) = v;
  };
}

ProblemSpec scalar_problem(const std::string& name, double lo, double hi,
                           double x0) {
  ProblemSpec spec;
  spec.name = name;
  spec.n = spec.m = 1;
  spec.grid = TimeGrid{1.0, 100};
  spec.box.lower = scalar_vec(lo);
  spec.box.upper = scalar_vec(hi);
  spec.x0 = scalar_vec(x0);
  spec.ubar = ControlProcess::constant(scalar_vec(0.0));
  return spec;
}

void single_scenario_measures(ProblemSpec& spec) {
  spec.measures.scenario_count = 1;
  spec.measures.vertices = {scalar_vec(1.0)};
}

}  // namespace

ProblemSpec builtin_example() {
  ProblemSpec spec = scalar_problem("example", -1.0, 1.0, 0.0);

  Polynomial u_lin(1, 1), zero(1, 1);
  u_lin.add_term(1.0, {}, {1});

  Polynomial f1(1, 1), f2(1, 1), h(1, 1);
  f1.add_term(0.5, {}, {2});
  f2.add_term(0.25, {}, {4});
  h.add_term(-0.5, {2}, {});

  Scenario s1 = make_polynomial_scenario("bull", 1, 1, {u_lin}, {u_lin}, f1, h);
  Scenario s2 = make_polynomial_scenario("bear", 1, 1, {u_lin}, {zero}, f2, h);
  for (Scenario* s : {&s1, &s2}) {
    s->p1 = const_path_vec(0.0);
    s->q1 = const_path_vec(0.0);
    s->p2 = const_path_mat(1.0);
    s->q2 = const_path_mat(0.0);
  }
  spec.scenarios = {s1, s2};

  spec.measures.scenario_count = 2;
  VectorXd v1(2), v2(2);
  v1 << 1.0, 0.0;
  v2 << 0.0, 1.0;
  spec.measures.vertices = {v1, v2};

  spec.adjoint_mode = AdjointMode::Analytic;
  spec.malliavin_mode = MalliavinMode::DeclaredZero;
  return spec;
}

ProblemSpec builtin_lq() {
  const double a = 0.5, c = 0.4;
  ProblemSpec spec = scalar_problem("lq", -1.0, 1.0, 1.0);

  Polynomial b(1, 1), sigma(1, 1), f(1, 1), h(1, 1);
  b.add_term(a, {1}, {}).add_term(1.0, {}, {1});
  sigma.add_term(c);
  f.add_term(0.5, {2}, {});
  h.add_term(0.5, {2}, {});

  Scenario sc = make_polynomial_scenario("lq", 1, 1, {b}, {sigma}, f, h);
  // Along ubar = 0: P1 = -R(t) xbar, Q1 = -R(t) c, P2 = -R(t), Q2 = 0 with
  // R(t) = (1 + 1/(2a)) e^{2a(T-t)} - 1/(2a).
  const double T = spec.grid.horizon;
  auto R = [a, T](double t) {
    return (1.0 + 0.5 / a) * std::exp(2.0 * a * (T - t)) - 0.5 / a;
  };
  sc.p1 = [R](double t, const VectorXd& x, VectorXd& out) {
    out.resize(1);
    out[0] = -R(t) * x[0];
  };
  sc.q1 = [R, c](double t, const VectorXd&, VectorXd& out) {
    out.resize(1);
    out[0] = -R(t) * c;
  };
  sc.p2 = [R](double t, const VectorXd&, MatrixXd& out) {
    out.resize(1, 1);
    out(0, 0) = -R(t);
  };
  sc.q2 = const_path_mat(0.0);
  spec.scenarios = {sc};
  single_scenario_measures(spec);
  spec.adjoint_mode = AdjointMode::Analytic;
  return spec;
}

ProblemSpec builtin_lq_control_cost() {
  const double a = 0.5, c = 0.4;
  ProblemSpec spec = scalar_problem("lqu", -1.0, 1.0, 1.0);

  Polynomial b(1, 1), sigma(1, 1), f(1, 1), h(1, 1);
  b.add_term(a, {1}, {}).add_term(1.0, {}, {1});
  sigma.add_term(c);
  f.add_term(0.5, {2}, {}).add_term(0.5, {}, {2});
  h.add_term(0.5, {2}, {});

  spec.scenarios = {make_polynomial_scenario("lqu", 1, 1, {b}, {sigma}, f, h)};
  single_scenario_measures(spec);
  spec.adjoint_mode = AdjointMode::Regression;
  return spec;
}

ProblemSpec builtin_bilinear() {
  ProblemSpec spec = scalar_problem("bilinear", -1.0, 1.0, 0.0);

  Polynomial b(1, 1), zero(1, 1), f(1, 1), h(1, 1);
  b.add_term(1.0, {}, {1});
  f.add_term(1.0, {1}, {1});

  Scenario sc = make_polynomial_scenario("bilinear", 1, 1, {b}, {zero}, f, h);
  sc.p1 = const_path_vec(0.0);
  sc.q1 = const_path_vec(0.0);
  sc.p2 = const_path_mat(0.0);
  sc.q2 = const_path_mat(0.0);
  spec.scenarios = {sc};
  single_scenario_measures(spec);
  spec.adjoint_mode = AdjointMode::Analytic;
  return spec;
}

ProblemSpec builtin_cubic() {
  ProblemSpec spec = scalar_problem("cubic", -2.0, 2.0, 1.0);
  spec.ubar = ControlProcess::constant(scalar_vec(0.25));

  Polynomial b(1, 1), sigma(1, 1), f(1, 1), h(1, 1);
  b.add_term(1.0, {}, {1}).add_term(-1.0, {3}, {});
  sigma.add_term(0.2, {1}, {}).add_term(0.05, {2}, {});
  f.add_term(0.5, {}, {2}).add_term(0.5, {2}, {});
  h.add_term(0.5, {2}, {});

  spec.scenarios = {make_polynomial_scenario("cubic", 1, 1, {b}, {sigma}, f, h)};
  single_scenario_measures(spec);
  spec.adjoint_mode = AdjointMode::Regression;
  return spec;
}

ProblemSpec builtin_nonsingular() {
  ProblemSpec spec = scalar_problem("nonsingular", -1.0, 1.0, 0.0);

  Polynomial b(1, 1), zero(1, 1), f(1, 1), h(1, 1);
  b.add_term(1.0, {}, {1});
  f.add_term(1.0, {}, {1});

  Scenario sc = make_polynomial_scenario("nonsingular", 1, 1, {b}, {zero}, f, h);
  sc.p1 = const_path_vec(0.0);
  sc.q1 = const_path_vec(0.0);
  sc.p2 = const_path_mat(0.0);
  sc.q2 = const_path_mat(0.0);
  spec.scenarios = {sc};
  single_scenario_measures(spec);
  spec.adjoint_mode = AdjointMode::Analytic;
  return spec;
}

ProblemSpec builtin(const std::string& name) {
  if (name == "example") return builtin_example();
  if (name == "lq") return builtin_lq();
  if (name == "lqu") return builtin_lq_control_cost();
  if (name == "bilinear") return builtin_bilinear();
  if (name == "cubic") return builtin_cubic();
  if (name == "nonsingular") return builtin_nonsingular();
  throw ConfigError("unknown builtin problem: " + name);
}

std::vector<std::string> builtin_names() {
  return {"example", "lq", "lqu", "bilinear", "cubic", "nonsingular"};
}

}  // namespace rsonc
