#include "rsonc/config.hpp"

#include <fstream>
#include <sstream>

#include "rsonc/builtins.hpp"
#include "rsonc/polynomial.hpp"

namespace rsonc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

std::vector<int> int_list(const json& j) {
  std::vector<int> out;
  for (const auto& e : j) out.push_back(e.get<int>());
  return out;
}

PolyTerm parse_term(const json& j, bool allow_t, bool allow_u,
                    const std::string& where) {
  if (!j.is_object() || !j.contains("coef"))
    fail(where + ": polynomial term needs a \"coef\" field");
  PolyTerm t;
  t.coef = j.at("coef").get<double>();
  if (j.contains("x")) t.x_exp = int_list(j.at("x"));
  if (j.contains("u")) {
    if (!allow_u) fail(where + ": u exponents not allowed here");
    t.u_exp = int_list(j.at("u"));
  }
  if (j.contains("t")) {
    if (!allow_t) fail(where + ": t exponents not allowed here");
    t.t_exp = j.at("t").get<int>();
  }
  return t;
}

Polynomial parse_poly(const json& j, int n, int m, bool allow_t, bool allow_u,
                      const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array of terms");
  std::vector<PolyTerm> terms;
  for (const auto& e : j) terms.push_back(parse_term(e, allow_t, allow_u, where));
  return Polynomial(n, m, std::move(terms));
}

std::vector<Polynomial> parse_poly_vec(const json& j, int n, int m,
                                       bool allow_t, bool allow_u,
                                       const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array of components");
  std::vector<Polynomial> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_poly(j[i], n, m, allow_t, allow_u,
                             where + "[" + std::to_string(i) + "]"));
  return out;
}

// (t, x)-polynomial closed forms for adjoints / nabla_s
PathVecFn path_vec_from_polys(std::vector<Polynomial> comps, int m) {
  auto shared = std::make_shared<std::vector<Polynomial>>(std::move(comps));
  VectorXd u_dummy = VectorXd::Zero(m);
  return [shared, u_dummy](double t, const VectorXd& x, VectorXd& out) {
    out.resize(shared->size());
    for (std::size_t i = 0; i < shared->size(); ++i)
      out[i] = (*shared)[i].eval(t, x, u_dummy);
  };
}

PathMatFn path_mat_from_polys(std::vector<std::vector<Polynomial>> rows,
                              int m) {
  auto shared =
      std::make_shared<std::vector<std::vector<Polynomial>>>(std::move(rows));
  VectorXd u_dummy = VectorXd::Zero(m);
  return [shared, u_dummy](double t, const VectorXd& x, MatrixXd& out) {
    out.resize(shared->size(), shared->empty() ? 0 : (*shared)[0].size());
    for (std::size_t i = 0; i < shared->size(); ++i)
      for (std::size_t j = 0; j < (*shared)[i].size(); ++j)
        out(i, j) = (*shared)[i][j].eval(t, x, u_dummy);
  };
}

VectorXd parse_vector(const json& j) {
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

ControlProcess load_control(const nlohmann::json& doc, int m) {
  if (!doc.is_object() || !doc.contains("kind"))
    fail("control: expected an object with a \"kind\" field");
  std::string kind = doc.at("kind").get<std::string>();
  if (kind == "constant") {
    VectorXd v = parse_vector(doc.at("value"));
    if (v.size() != m) fail("control: constant value dimension mismatch");
    return ControlProcess::constant(v);
  }
  if (kind == "deterministic") {
    auto comps = std::make_shared<std::vector<Polynomial>>();
    const json& arr = doc.at("components");
    for (std::size_t i = 0; i < arr.size(); ++i)
      comps->push_back(parse_poly(arr[i], 0, 0, true, false,
                                  "control.components[" + std::to_string(i) +
                                      "]"));
    if (static_cast<int>(comps->size()) != m)
      fail("control: component count mismatch");
    VectorXd x0(0), u0(0);
    return ControlProcess::deterministic(
        [comps, x0, u0](double t, VectorXd& out) {
          out.resize(comps->size());
          for (std::size_t i = 0; i < comps->size(); ++i)
            out[i] = (*comps)[i].eval(t, x0, u0);
        });
  }
  if (kind == "spike") {
    ControlProcess base = load_control(doc.at("base"), m);
    VectorXd v = parse_vector(doc.at("value"));
    if (v.size() != m) fail("control: spike value dimension mismatch");
    return ControlProcess::spike(base, v, doc.at("tau").get<double>(),
                                 doc.at("alpha").get<double>());
  }
  if (kind == "blend") {
    return ControlProcess::blend(load_control(doc.at("a"), m),
                                 load_control(doc.at("b"), m),
                                 doc.at("eps").get<double>());
  }
  fail("control: unknown kind \"" + kind + "\"");
}

ProblemSpec load_problem(const nlohmann::json& doc) {
  ProblemSpec spec;
  try {
    spec.name = doc.value("name", "config");
    const json& grid = doc.at("grid");
    spec.grid.horizon = grid.at("horizon").get<double>();
    spec.grid.steps = grid.at("steps").get<int>();

    const json& box = doc.at("control_box");
    spec.box.lower = parse_vector(box.at("lower"));
    spec.box.upper = parse_vector(box.at("upper"));
    spec.m = static_cast<int>(spec.box.lower.size());

    spec.x0 = parse_vector(doc.at("x0"));
    spec.n = static_cast<int>(spec.x0.size());

    for (const json& sj : doc.at("scenarios")) {
      std::string sname = sj.value("name", "scenario");
      auto drift = parse_poly_vec(sj.at("drift"), spec.n, spec.m, false, true,
                                  sname + ".drift");
      auto diffusion = parse_poly_vec(sj.at("diffusion"), spec.n, spec.m,
                                      false, true, sname + ".diffusion");
      auto f = parse_poly(sj.at("running_cost"), spec.n, spec.m, false, true,
                          sname + ".running_cost");
      auto h = parse_poly(sj.at("terminal_cost"), spec.n, spec.m, false, false,
                          sname + ".terminal_cost");
      if (static_cast<int>(drift.size()) != spec.n ||
          static_cast<int>(diffusion.size()) != spec.n)
        fail(sname + ": drift/diffusion must have n components");
      Scenario sc = make_polynomial_scenario(sname, spec.n, spec.m, drift,
                                             diffusion, f, h);
      if (sj.value("fd_costs", false))
        apply_fd_fallback(sc, spec.n, spec.m, true, true);
      if (sj.contains("adjoint")) {
        const json& aj = sj.at("adjoint");
        auto vec_form = [&](const char* key) {
          return path_vec_from_polys(
              parse_poly_vec(aj.at(key), spec.n, 0, true, false,
                             sname + ".adjoint." + key),
              spec.m);
        };
        auto mat_form = [&](const char* key) {
          std::vector<std::vector<Polynomial>> rows;
          for (const json& rj : aj.at(key))
            rows.push_back(parse_poly_vec(rj, spec.n, 0, true, false,
                                          sname + ".adjoint." + key));
          return path_mat_from_polys(std::move(rows), spec.m);
        };
        sc.p1 = vec_form("p1");
        sc.q1 = vec_form("q1");
        sc.p2 = mat_form("p2");
        sc.q2 = mat_form("q2");
      }
      if (sj.contains("nabla_s")) {
        std::vector<std::vector<Polynomial>> rows;
        for (const json& rj : sj.at("nabla_s"))
          rows.push_back(parse_poly_vec(rj, spec.n, 0, true, false,
                                        sname + ".nabla_s"));
        sc.nabla_s = path_mat_from_polys(std::move(rows), spec.m);
      }
      spec.scenarios.push_back(std::move(sc));
    }

    const json& meas = doc.at("measures");
    spec.measures.scenario_count = static_cast<int>(spec.scenarios.size());
    for (const json& vj : meas.at("vertices"))
      spec.measures.vertices.push_back(parse_vector(vj));

    if (doc.contains("adjoint")) {
      const json& aj = doc.at("adjoint");
      std::string mode = aj.value("mode", "regression");
      if (mode == "analytic")
        spec.adjoint_mode = AdjointMode::Analytic;
      else if (mode == "regression")
        spec.adjoint_mode = AdjointMode::Regression;
      else
        fail("adjoint.mode must be \"analytic\" or \"regression\"");
      spec.basis_degree = aj.value("basis_degree", 2);
    }

    if (doc.contains("malliavin")) {
      const json& mj = doc.at("malliavin");
      std::string mode = mj.value("mode", "zero");
      if (mode == "zero")
        spec.malliavin_mode = MalliavinMode::DeclaredZero;
      else if (mode == "closed_form")
        spec.malliavin_mode = MalliavinMode::ClosedForm;
      else
        fail("malliavin.mode must be \"zero\" or \"closed_form\"");
      if (mj.contains("nabla_ubar")) {
        auto comps = std::make_shared<std::vector<Polynomial>>();
        for (std::size_t i = 0; i < mj.at("nabla_ubar").size(); ++i)
          comps->push_back(parse_poly(mj.at("nabla_ubar")[i], 0, 0, true,
                                      false, "malliavin.nabla_ubar"));
        VectorXd x0(0), u0(0);
        spec.nabla_ubar = [comps, x0, u0](double t, VectorXd& out) {
          out.resize(comps->size());
          for (std::size_t i = 0; i < comps->size(); ++i)
            out[i] = (*comps)[i].eval(t, x0, u0);
        };
      }
    }

    if (doc.contains("ubar"))
      spec.ubar = load_control(doc.at("ubar"), spec.m);
    else
      spec.ubar = ControlProcess::constant(VectorXd::Zero(spec.m));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("problem config: ") + e.what());
  }
  return spec;
}

ProblemSpec load_problem_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open problem config: " + path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const std::exception& e) {
    fail(std::string("problem config parse error: ") + e.what());
  }
  return load_problem(doc);
}

ControlProcess parse_control_arg(const std::string& arg,
                                 const ProblemSpec& spec) {
  if (arg == "zero")
    return ControlProcess::constant(VectorXd::Zero(spec.m));
  if (arg == "ubar") return spec.ubar;
  if (arg.rfind("const:", 0) == 0) {
    std::stringstream ss(arg.substr(6));
    std::vector<double> vals;
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (static_cast<int>(vals.size()) != spec.m)
      fail("const: control needs " + std::to_string(spec.m) + " components");
    VectorXd v(spec.m);
    for (int i = 0; i < spec.m; ++i) v[i] = vals[i];
    return ControlProcess::constant(v);
  }
  // otherwise: path to a JSON control document
  std::ifstream is(arg);
  if (!is) fail("control argument is neither a shorthand nor a readable file: " + arg);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const std::exception& e) {
    fail(std::string("control parse error: ") + e.what());
  }
  return load_control(doc, spec.m);
}

}  // namespace rsonc
