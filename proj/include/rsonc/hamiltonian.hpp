#pragma once

#include "rsonc/adjoint_fwd.hpp"
#include "rsonc/forward.hpp"
#include "rsonc/model.hpp"

namespace rsonc {

/// H = <p, b> + <q, sigma> - f.
double hamiltonian_eval(const Scenario& sc, double t, const VectorXd& x,
                        const VectorXd& u, const VectorXd& p,
                        const VectorXd& q);

/// dH/du = b_u^T p + sigma_u^T q - f_u  (R^m).
void hamiltonian_grad_u(const Scenario& sc, double t, const VectorXd& x,
                        const VectorXd& u, const VectorXd& p,
                        const VectorXd& q, VectorXd& out);

struct HamiltonianHess {
  MatrixXd uu;  // m x m
  MatrixXd xu;  // m x n
  MatrixXd xx;  // n x n
};

/// Second-derivative blocks of H assembled from the scenario bundles:
/// H_ab = sum_i p_i b_ab[i] + sum_i q_i sigma_ab[i] - f_ab.
void hamiltonian_hess(const Scenario& sc, double t, const VectorXd& x,
                      const VectorXd& u, const VectorXd& p, const VectorXd& q,
                      HamiltonianHess& out);

/// The m x n second-order kernel
///   S = H_xu + b_u^T P2 + sigma_u^T Q2 + sigma_u^T P2 sigma_x
/// along (xbar, ubar, P1, Q1, P2, Q2), plus its Malliavin companion
/// nabla S (zero in declared-zero mode, user closed form otherwise).
struct SProcess {
  int scenario = 0;
  MatrixPanel S;        // m x n
  MatrixPanel nabla_S;  // m x n
};

SProcess s_matrix(const ProblemSpec& spec, int scenario,
                  const ForwardProcesses& fwd, const AdjointProcesses& adj);

}  // namespace rsonc
