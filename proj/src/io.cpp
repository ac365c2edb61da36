#include "rsonc/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

namespace rsonc {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void binary_header(std::ofstream& os, std::uint64_t seed, const TimeGrid& grid,
                   std::uint32_t paths, std::uint32_t nodes,
                   std::uint32_t rows, std::uint32_t cols) {
  // Host is assumed little-endian (x86-64/aarch64); fields are fixed width.
  os.write("RSONCPAN", 8);
  std::uint32_t version = 1;
  double horizon = grid.horizon;
  std::uint32_t steps = grid.steps;
  os.write(reinterpret_cast<const char*>(&version), 4);
  os.write(reinterpret_cast<const char*>(&seed), 8);
  os.write(reinterpret_cast<const char*>(&horizon), 8);
  os.write(reinterpret_cast<const char*>(&steps), 4);
  os.write(reinterpret_cast<const char*>(&paths), 4);
  os.write(reinterpret_cast<const char*>(&nodes), 4);
  os.write(reinterpret_cast<const char*>(&rows), 4);
  os.write(reinterpret_cast<const char*>(&cols), 4);
}

}  // namespace

Json provenance(const ProblemSpec& spec, const PathBundle& bundle,
                const Json& mode_flags) {
  Json j;
  j["toolkit"] = "rsonc";
  j["version"] = "0.1.0";
  j["problem"] = spec.name;
  j["seed"] = bundle.seed();
  j["n_paths"] = bundle.n_paths();
  j["grid"] = {{"horizon", bundle.grid().horizon}, {"steps", bundle.grid().steps}};
  j["adjoint_mode"] =
      spec.adjoint_mode == AdjointMode::Analytic ? "analytic" : "regression";
  j["basis_degree"] = spec.basis_degree;
  j["malliavin_mode"] = spec.malliavin_mode == MalliavinMode::DeclaredZero
                            ? "zero"
                            : "closed_form";
  if (!mode_flags.empty()) j["flags"] = mode_flags;
  return j;
}

void write_panel_csv(std::ostream& os, int scenario, const VectorPanel& panel,
                     const std::string& field, bool header) {
  if (header) os << "scenario,path,step,field,value\n";
  for (int p = 0; p < panel.paths(); ++p)
    for (int k = 0; k < panel.nodes(); ++k)
      for (int i = 0; i < panel.dim(); ++i)
        os << scenario << ',' << p << ',' << k << ',' << field << '[' << i
           << "]," << fmt(panel.at(p, k)[i]) << '\n';
}

void write_panel_csv(std::ostream& os, int scenario, const MatrixPanel& panel,
                     const std::string& field, bool header) {
  if (header) os << "scenario,path,step,field,value\n";
  for (int p = 0; p < panel.paths(); ++p)
    for (int k = 0; k < panel.nodes(); ++k)
      for (int i = 0; i < panel.rows(); ++i)
        for (int j = 0; j < panel.cols(); ++j)
          os << scenario << ',' << p << ',' << k << ',' << field << '[' << i
             << ',' << j << "]," << fmt(panel.at(p, k)(i, j)) << '\n';
}

void write_panel_binary(const std::string& path, std::uint64_t seed,
                        const TimeGrid& grid, const VectorPanel& panel) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  binary_header(os, seed, grid, panel.paths(), panel.nodes(), panel.dim(), 1);
  os.write(reinterpret_cast<const char*>(panel.raw().data()),
           static_cast<std::streamsize>(panel.raw().size() * sizeof(double)));
}

void write_panel_binary(const std::string& path, std::uint64_t seed,
                        const TimeGrid& grid, const MatrixPanel& panel) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  binary_header(os, seed, grid, panel.paths(), panel.nodes(), panel.rows(),
                panel.cols());
  os.write(reinterpret_cast<const char*>(panel.raw().data()),
           static_cast<std::streamsize>(panel.raw().size() * sizeof(double)));
}

Json to_json(const CostTable& table) {
  Json j;
  j["scenario_costs"] = table.scenario_cost;
  j["scenario_stderr"] = table.scenario_se;
  j["vertex_costs"] = table.vertex_cost;
  j["vertex_stderr"] = table.vertex_se;
  j["robust_value"] = table.robust_value;
  j["argmax_vertices"] = table.argmax;
  j["tie_sigma"] = table.tie_sigma;
  return j;
}

Json to_json(const SingularReport& rep) {
  Json j;
  j["verdict"] = to_string(rep.verdict);
  j["singular"] = rep.verdict == Verdict::Satisfied;
  j["max_first_order"] = rep.max_first;
  j["max_second_order"] = rep.max_second;
  j["stderr_first"] = rep.se_first;
  j["stderr_second"] = rep.se_second;
  j["tol"] = rep.tol;
  j["argmax_vertices"] = rep.argmax_vertices;
  return j;
}

Json to_json(const IntegralSoncReport& rep) {
  Json j;
  j["argmax_vertices"] = rep.argmax_vertices;
  j["tol_floor"] = rep.tol_floor;
  Json arr = Json::array();
  for (const auto& pc : rep.controls) {
    Json e;
    e["vertex_values"] = pc.vertex_value;
    e["vertex_stderr"] = pc.vertex_se;
    e["min_value"] = pc.min_value;
    e["min_stderr"] = pc.min_se;
    e["verdict"] = to_string(pc.verdict);
    arr.push_back(e);
  }
  j["controls"] = arr;
  return j;
}

Json to_json(const MonotonicityReport& rep) {
  Json j;
  j["values"] = rep.value;
  j["stderr"] = rep.se;
  j["holds"] = rep.holds;
  return j;
}

Json to_json(const PointwiseSoncReport& rep) {
  Json j;
  j["verdict"] = to_string(rep.verdict);
  j["min_over_vertices"] = rep.min_over_vertices;
  j["tol"] = rep.tol;
  j["tau_grid"] = rep.tau_grid;
  Json vg = Json::array();
  for (const auto& v : rep.v_grid)
    vg.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  j["v_grid"] = vg;
  j["argmax_vertices"] = rep.argmax_vertices;
  Json wit = Json::array();
  for (const auto& w : rep.per_vertex_max) {
    Json e;
    e["vertex"] = w.vertex;
    e["tau"] = w.tau;
    e["v"] = std::vector<double>(w.v.data(), w.v.data() + w.v.size());
    e["value"] = w.value;
    e["stderr"] = w.se;
    wit.push_back(e);
  }
  j["per_vertex_max"] = wit;
  j["values"] = rep.values;
  if (!rep.h5_note.empty()) j["h5_note"] = rep.h5_note;
  return j;
}

Json to_json(const WindowScanReport& rep) {
  Json j;
  j["alphas"] = rep.alphas;
  j["window_frozen"] = rep.frozen;
  j["window_moving"] = rep.moving;
  j["target"] = rep.target;
  j["gap_frozen"] = rep.gap_frozen;
  j["gap_moving"] = rep.gap_moving;
  return j;
}

Json to_json(const ExpansionReport& rep) {
  Json j;
  j["eps"] = rep.eps;
  j["argmax_vertices"] = rep.argmax_vertices;
  Json arr = Json::array();
  for (const auto& f : rep.fits) {
    Json e;
    e["vertex"] = f.vertex;
    e["dj"] = f.dj;
    e["dj_stderr"] = f.dj_se;
    e["a1_fit"] = f.a1_fit;
    e["a2_fit"] = f.a2_fit;
    e["a1_fit_stderr"] = f.a1_fit_se;
    e["a2_fit_stderr"] = f.a2_fit_se;
    e["a1_pred"] = f.a1_pred;
    e["a2_pred"] = f.a2_pred;
    e["a1_pred_stderr"] = f.a1_pred_se;
    e["a2_pred_stderr"] = f.a2_pred_se;
    e["a2_gap_stderr"] = f.a2_gap_se;
    e["remainder"] = f.remainder;
    e["remainder_slope"] = f.remainder_slope;
    arr.push_back(e);
  }
  j["fits"] = arr;
  return j;
}

Json to_json(const DualityReport& rep) {
  Json j;
  j["lhs"] = rep.lhs;
  j["rhs"] = rep.rhs;
  j["residual"] = rep.residual;
  j["stderr_lhs"] = rep.se_lhs;
  j["stderr_rhs"] = rep.se_rhs;
  j["stderr_residual"] = rep.se_residual;
  return j;
}

Json to_json(const RemainderReport& rep) {
  Json j;
  j["eps"] = rep.eps;
  Json rows = Json::array();
  for (const auto& r : rep.norms) rows.push_back({r[0], r[1], r[2]});
  j["norms"] = rows;
  j["slopes"] = {rep.slopes[0], rep.slopes[1], rep.slopes[2]};
  j["vanishes"] = {rep.vanishes[0], rep.vanishes[1], rep.vanishes[2]};
  return j;
}

Json to_json(const ValidationReport& rep) {
  Json j;
  j["valid"] = rep.ok();
  j["violations"] = rep.violations;
  return j;
}

Json to_json(const ConsistencyReport& rep) {
  Json j;
  j["pass"] = rep.pass;
  j["tol"] = rep.tol;
  Json arr = Json::array();
  for (const auto& e : rep.entries) {
    Json x;
    x["derivative"] = e.derivative;
    x["max_rel_error"] = e.max_rel_error;
    x["worst_t"] = e.worst_t;
    arr.push_back(x);
  }
  j["entries"] = arr;
  return j;
}

}  // namespace rsonc
