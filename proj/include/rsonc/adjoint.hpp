#pragma once

#include <vector>

#include "rsonc/adjoint_fwd.hpp"
#include "rsonc/forward.hpp"
#include "rsonc/model.hpp"
#include "rsonc/paths.hpp"

namespace rsonc {

/// Polynomial regression basis in the state: all monomials of total degree
/// <= degree. Feature 0 is the constant (never ridge-penalized, so the
/// solver reproduces constants exactly even on degenerate states).
class RegressionBasis {
 public:
  RegressionBasis(int state_dim, int degree);
  int features() const { return static_cast<int>(exponents_.size()); }
  int degree() const { return degree_; }
  void fill(const VectorXd& x, Eigen::Ref<Eigen::RowVectorXd> row) const;

 private:
  int degree_;
  std::vector<std::vector<int>> exponents_;
};

/// First adjoint equation: backward in time,
///   dP1 = -[b_x^T P1 + sigma_x^T Q1 - f_x] dt + Q1 dW,
///   P1(T) = -h_x(xbar(T)).
/// Analytic mode evaluates the scenario's closed forms; regression mode
/// runs least-squares Monte Carlo backward induction on the given basis.
/// Terminal conditions are imposed pathwise exactly in both modes.
AdjointProcesses solve_adjoint_first(const ProblemSpec& spec, int scenario,
                                     const ForwardProcesses& fwd,
                                     const PathBundle& bundle,
                                     AdjointMode mode);

/// Second adjoint equation (matrix-valued, driver includes H_xx built from
/// the first adjoint); P2(T) = -h_xx(xbar(T)). Fills adj.P2/adj.Q2 and
/// symmetrizes after every step.
void solve_adjoint_second(const ProblemSpec& spec, int scenario,
                          const ForwardProcesses& fwd,
                          const PathBundle& bundle, AdjointProcesses& adj);

/// Both equations in sequence.
AdjointProcesses solve_adjoints(const ProblemSpec& spec, int scenario,
                                const ForwardProcesses& fwd,
                                const PathBundle& bundle, AdjointMode mode);

struct DualityReport {
  double lhs = 0.0, rhs = 0.0, residual = 0.0;
  double se_lhs = 0.0, se_rhs = 0.0, se_residual = 0.0;  // paired residual se
};

/// First-order duality identity (Ito):
///   E<h_x(xbar(T)), y1(T)> =
///   -E int [<P1, b_u v> + <Q1, sigma_u v> + <f_x, y1>] dt.
/// Both sides share the bundle; the residual stderr is the paired one.
DualityReport duality_check_first(const ProblemSpec& spec, int scenario,
                                  const ForwardProcesses& fwd,
                                  const AdjointProcesses& adj,
                                  const VectorPanel& v,
                                  const PathBundle& bundle);

/// Second-order duality identity (Ito):
///   E<h_xx(xbar(T)) y1(T), y1(T)> =
///   -E int [2<P2 y1, b_u v> + 2<Q2 sigma_u v, y1> + <P2 sigma_u v, sigma_u v>
///           - <H_xx y1, y1> + 2<P2 sigma_x y1, sigma_u v>] dt.
DualityReport duality_check_second(const ProblemSpec& spec, int scenario,
                                   const ForwardProcesses& fwd,
                                   const AdjointProcesses& adj,
                                   const VectorPanel& v,
                                   const PathBundle& bundle);

}  // namespace rsonc
