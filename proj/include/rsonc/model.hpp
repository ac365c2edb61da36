#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsonc/types.hpp"

namespace rsonc {

/// Box control region U = prod [lower_i, upper_i]; nonempty and convex.
struct ControlBox {
  VectorXd lower, upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const VectorXd& u, double tol = 1e-12) const {
    for (int i = 0; i < dim(); ++i)
      if (u[i] < lower[i] - tol || u[i] > upper[i] + tol) return false;
    return true;
  }
  VectorXd midpoint() const { return 0.5 * (lower + upper); }
};

// Coefficient callbacks. Value maps take (t, x, u); terminal maps take x.
// All writers fill a caller-provided output to keep inner loops allocation
// free.
using VecFn = std::function<void(double, const VectorXd&, const VectorXd&, VectorXd&)>;
using ScalFn = std::function<double(double, const VectorXd&, const VectorXd&)>;
using MatFn = std::function<void(double, const VectorXd&, const VectorXd&, MatrixXd&)>;
// One Hessian block per drift/diffusion component.
using TensFn = std::function<void(double, const VectorXd&, const VectorXd&, std::vector<MatrixXd>&)>;
using TermScalFn = std::function<double(const VectorXd&)>;
using TermVecFn = std::function<void(const VectorXd&, VectorXd&)>;
using TermMatFn = std::function<void(const VectorXd&, MatrixXd&)>;
// Closed forms evaluated along (t, xbar(t)).
using PathVecFn = std::function<void(double, const VectorXd&, VectorXd&)>;
using PathMatFn = std::function<void(double, const VectorXd&, MatrixXd&)>;

/// One uncertainty scenario gamma: dynamics (b, sigma), costs (f, h) and
/// their derivative bundles.
///
/// Shape conventions (n states, m controls, scalar Brownian motion):
///   b, sigma : R^n          f : R          h : R
///   b_x, sigma_x : n x n    b_u, sigma_u : n x m
///   f_x : R^n   f_u : R^m   f_xx : n x n  f_xu : m x n  f_uu : m x m
///   h_x : R^n   h_xx : n x n
///   b_xx[i] : n x n, b_xu[i] : m x n, b_uu[i] : m x m per component i.
struct Scenario {
  std::string name;

  VecFn b, sigma;
  ScalFn f;
  TermScalFn h;

  MatFn b_x, b_u, sigma_x, sigma_u;
  VecFn f_x, f_u;
  MatFn f_xx, f_xu, f_uu;
  TermVecFn h_x;
  TermMatFn h_xx;
  TensFn b_xx, b_xu, b_uu, sigma_xx, sigma_xu, sigma_uu;

  // Set when f/h derivatives were produced by the central-difference
  // fallback rather than analytically (b, sigma must stay analytic).
  bool fd_fallback_f = false;
  bool fd_fallback_h = false;

  // Analytic adjoint closed forms, valid along the problem's reference
  // control; required when ProblemSpec::adjoint_mode == Analytic.
  PathVecFn p1, q1;
  PathMatFn p2, q2;

  // Closed form for the Malliavin derivative of S (m x n); used only when
  // ProblemSpec::malliavin_mode == ClosedForm.
  PathMatFn nabla_s;
};

/// Polytope of uncertainty measures on the finite scenario set, stored by
/// its vertex list; every vertex is a probability vector over scenarios.
struct MeasurePolytope {
  int scenario_count = 0;
  std::vector<VectorXd> vertices;
};

/// Admissible control process. Evaluation sees the time, the current state
/// and the Brownian path up to the current node (w[j] = W(t_j), j <= k).
class ControlProcess {
 public:
  enum class Kind { Deterministic, Feedback, Spike, Blend };
  using EventFn = std::function<bool(std::span<const double>)>;

  ControlProcess() = default;

  static ControlProcess constant(VectorXd value);
  static ControlProcess deterministic(std::function<void(double, VectorXd&)> fn);
  static ControlProcess feedback(std::function<void(double, const VectorXd&, VectorXd&)> fn);
  /// Needle perturbation: value on [tau, tau+alpha) when the event (a
  /// predicate on the Brownian history up to tau) fires, the base control
  /// elsewhere. An empty event always fires.
  static ControlProcess spike(ControlProcess base, VectorXd value, double tau,
                              double alpha, EventFn event = {});
  /// Convex blend a + eps*(b - a); stays in U for eps in [0, 1].
  static ControlProcess blend(ControlProcess a, ControlProcess b, double eps);

  void eval(const TimeGrid& grid, int k, const VectorXd& x,
            std::span<const double> w_history, VectorXd& out) const;

  Kind kind() const { return kind_; }
  bool path_dependent() const;  // true when any spike event reads the path

 private:
  Kind kind_ = Kind::Deterministic;
  std::function<void(double, VectorXd&)> det_;
  std::function<void(double, const VectorXd&, VectorXd&)> fb_;
  // spike
  std::shared_ptr<const ControlProcess> base_;
  VectorXd spike_value_;
  double tau_ = 0.0, alpha_ = 0.0;
  EventFn event_;
  // blend
  std::shared_ptr<const ControlProcess> blend_a_, blend_b_;
  double blend_eps_ = 0.0;
};

enum class AdjointMode { Analytic, Regression };
enum class MalliavinMode { DeclaredZero, ClosedForm };

/// The full uncertain control problem.
struct ProblemSpec {
  std::string name;
  int n = 1;  // state dimension
  int m = 1;  // control dimension
  TimeGrid grid;
  ControlBox box;
  VectorXd x0;
  std::vector<Scenario> scenarios;
  MeasurePolytope measures;
  AdjointMode adjoint_mode = AdjointMode::Regression;
  MalliavinMode malliavin_mode = MalliavinMode::DeclaredZero;
  int basis_degree = 2;
  /// Reference control the analytic adjoint/malliavin closed forms are
  /// declared for.
  ControlProcess ubar = ControlProcess::constant(VectorXd::Zero(1));
  /// Closed form for nabla ubar (m), used when malliavin_mode == ClosedForm.
  std::function<void(double, VectorXd&)> nabla_ubar;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks structural invariants: grid/box sanity, simplex vertices,
/// dimension consistency of every derivative bundle (probed numerically),
/// adjoint-callback presence in analytic mode. Violations are data, not
/// failures; the call itself never throws on a bad spec.
ValidationReport validate(const ProblemSpec& spec);

struct ConsistencyReport {
  struct Entry {
    std::string derivative;  // e.g. "b_x", "f_u"
    double max_rel_error = 0.0;
    double worst_t = 0.0;
    VectorXd worst_x, worst_u;
  };
  std::vector<Entry> entries;
  double tol = 0.0;
  bool pass = false;
};

/// Compares analytic first derivatives of b, sigma, f, h against central
/// finite differences at n_probe deterministic pseudo-random points.
/// Rejects scenarios whose f/h derivatives are themselves FD fallbacks.
ConsistencyReport fd_consistency(const ProblemSpec& spec, int scenario,
                                 int n_probe, double tol);

/// Wires central-difference first/second derivatives of f and h into the
/// scenario (step h = max(1e-5, 1e-7*|coordinate|)) and marks the fallback.
void apply_fd_fallback(Scenario& scen, int n, int m, bool running_cost,
                       bool terminal_cost);

}  // namespace rsonc
