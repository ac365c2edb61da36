#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rsonc/adjoint.hpp"
#include "rsonc/hamiltonian.hpp"
#include "rsonc/model.hpp"
#include "rsonc/robust.hpp"

namespace rsonc {

enum class Verdict { Satisfied, Violated, Inconclusive };

std::string to_string(Verdict v);

/// Shared context for the condition checks: forward/adjoint/S panels along
/// ubar for every scenario, plus the argmax vertex set Lambda^ubar.
struct ConditionContext {
  std::vector<ForwardProcesses> fwd;
  std::vector<AdjointProcesses> adj;
  std::vector<SProcess> s;
  CostTable cost_ubar;
  std::vector<int> argmax_vertices;
};

ConditionContext prepare_context(const ProblemSpec& spec,
                                 const ControlProcess& ubar,
                                 const PathBundle& bundle);

/// Singularity in the classical sense: for every vertex of Lambda^ubar the
/// time-averaged norms of  int dH/du dlambda  and of
/// int (H_uu + sigma_u^T P2 sigma_u) dlambda  are both below tol
/// (zero at every argmax vertex is equivalent to zero on their hull by
/// linearity in lambda).
struct SingularReport {
  Verdict verdict = Verdict::Inconclusive;
  double max_first = 0.0, max_second = 0.0;  // max over argmax vertices
  double se_first = 0.0, se_second = 0.0;
  double tol = 0.0;
  std::vector<int> argmax_vertices;
};

SingularReport check_singular(const ProblemSpec& spec,
                              const ControlProcess& ubar,
                              const PathBundle& bundle,
                              double tol_floor = 1e-9);
SingularReport check_singular(const ProblemSpec& spec,
                              const ConditionContext& ctx,
                              double tol_floor = 1e-9);

/// Integral second-order necessary condition: for each perturbation v the
/// statistic is min over Lambda^ubar vertices of
///   sum_gamma lambda_gamma E int <S_gamma y1_gamma(.;v), v> dt;
/// the condition asks for existence of lambda* with value <= 0, so
/// "violated" means the min exceeds tol.
struct IntegralSoncReport {
  struct PerControl {
    std::vector<double> vertex_value, vertex_se;  // per argmax vertex
    double min_value = 0.0, min_se = 0.0;
    Verdict verdict = Verdict::Inconclusive;
  };
  std::vector<PerControl> controls;
  std::vector<int> argmax_vertices;
  double tol_floor = 0.0;
};

IntegralSoncReport integral_sonc(const ProblemSpec& spec,
                                 const ControlProcess& ubar,
                                 const std::vector<ControlProcess>& us,
                                 const PathBundle& bundle,
                                 double tol_floor = 1e-9);

/// The (H5) monotonicity probe: per scenario,
///   -E int <S_gamma y1_gamma(.; u1-u2), u1(t)-u2(t)> dt
/// should be >= 0; failures downgrade the common-lambda* reading of the
/// pointwise condition, they do not abort it.
struct MonotonicityReport {
  std::vector<double> value, se;  // per scenario
  bool holds = true;              // all values >= -3 se (statistical read)
};

MonotonicityReport check_monotonicity(const ProblemSpec& spec,
                                      const ControlProcess& ubar,
                                      const ControlProcess& u1,
                                      const ControlProcess& u2,
                                      const PathBundle& bundle);

/// Pointwise second-order necessary condition at a (tau, v) grid. For each
/// argmax vertex lambda the statistic is the max over the grid of
///   int [ <S b_u d, d> + <nabla_S sigma_u d, d> - <S sigma_u d, nabla_ubar> ]
///   dlambda,   d = v - ubar(tau);
/// one common lambda* must work for all (tau, v), so the verdict compares
/// the min over vertices of that max against tol.
struct PointwiseSoncReport {
  struct Witness {
    int vertex = 0;
    double tau = 0.0;
    VectorXd v;
    double value = 0.0, se = 0.0;
  };
  Verdict verdict = Verdict::Inconclusive;
  double min_over_vertices = 0.0;
  double tol = 0.0;
  std::vector<Witness> per_vertex_max;  // witness of the max per vertex
  // raw grid: value[vertex][tau_idx][v_idx]
  std::vector<std::vector<std::vector<double>>> values;
  std::vector<double> tau_grid;
  std::vector<VectorXd> v_grid;
  std::vector<int> argmax_vertices;
  std::string h5_note;  // set when the monotonicity probe failed
};

PointwiseSoncReport pointwise_sonc(const ProblemSpec& spec,
                                   const ControlProcess& ubar,
                                   const std::vector<double>& tau_grid,
                                   const std::vector<VectorXd>& v_grid,
                                   const PathBundle& bundle,
                                   double tol_floor = 1e-9);

/// Window functional of the Lebesgue-differentiation lemma: for decreasing
/// alphas,
///   (1/alpha^2) int_Gamma E int_tau^{tau+alpha} <Phi(tau or t),
///        int_tau^t Psi(s) ds> dt dlambda
/// against the limit  (1/2) int_Gamma E <Phi(tau), Psi(tau)> dlambda.
/// Outer integral trapezoid, inner integral left-endpoint: exact for
/// constant Phi, Psi.
struct WindowScanReport {
  std::vector<double> alphas;
  std::vector<double> frozen;  // Phi evaluated at tau
  std::vector<double> moving;  // Phi evaluated at t
  double target = 0.0;
  std::vector<double> gap_frozen, gap_moving;
};

WindowScanReport lebesgue_window_scan(const std::vector<VectorPanel>& phi,
                                      const std::vector<VectorPanel>& psi,
                                      const VectorXd& lambda,
                                      const TimeGrid& grid, double tau,
                                      const std::vector<double>& alphas);

/// The window-scan integrand pieces of the pointwise-condition derivation:
/// per scenario, Phi = S^T (u - ubar) and Psi = b_u (u - ubar) along the
/// context's reference trajectory.
std::pair<std::vector<VectorPanel>, std::vector<VectorPanel>>
sonc_window_panels(const ProblemSpec& spec, const ConditionContext& ctx,
                   const ControlProcess& u, const PathBundle& bundle);

}  // namespace rsonc
