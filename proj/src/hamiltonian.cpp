#include "rsonc/hamiltonian.hpp"

#include "rsonc/parallel.hpp"

namespace rsonc {

double hamiltonian_eval(const Scenario& sc, double t, const VectorXd& x,
                        const VectorXd& u, const VectorXd& p,
                        const VectorXd& q) {
  VectorXd bval, sval;
  sc.b(t, x, u, bval);
  sc.sigma(t, x, u, sval);
  return p.dot(bval) + q.dot(sval) - sc.f(t, x, u);
}

void hamiltonian_grad_u(const Scenario& sc, double t, const VectorXd& x,
                        const VectorXd& u, const VectorXd& p,
                        const VectorXd& q, VectorXd& out) {
  MatrixXd bu, su;
  VectorXd fu;
  sc.b_u(t, x, u, bu);
  sc.sigma_u(t, x, u, su);
  sc.f_u(t, x, u, fu);
  out = bu.transpose() * p + su.transpose() * q - fu;
}

void hamiltonian_hess(const Scenario& sc, double t, const VectorXd& x,
                      const VectorXd& u, const VectorXd& p, const VectorXd& q,
                      HamiltonianHess& out) {
  const int n = static_cast<int>(x.size()), m = static_cast<int>(u.size());
  std::vector<MatrixXd> bxx, bxu, buu, sxx, sxu, suu;
  sc.b_xx(t, x, u, bxx);
  sc.b_xu(t, x, u, bxu);
  sc.b_uu(t, x, u, buu);
  sc.sigma_xx(t, x, u, sxx);
  sc.sigma_xu(t, x, u, sxu);
  sc.sigma_uu(t, x, u, suu);
  MatrixXd fxx, fxu, fuu;
  sc.f_xx(t, x, u, fxx);
  sc.f_xu(t, x, u, fxu);
  sc.f_uu(t, x, u, fuu);

  out.xx = -fxx;
  out.xu = -fxu;
  out.uu = -fuu;
  for (int i = 0; i < n; ++i) {
    out.xx += p[i] * bxx[i] + q[i] * sxx[i];
    out.xu += p[i] * bxu[i] + q[i] * sxu[i];
    out.uu += p[i] * buu[i] + q[i] * suu[i];
  }
  (void)m;
}

SProcess s_matrix(const ProblemSpec& spec, int scenario,
                  const ForwardProcesses& fwd, const AdjointProcesses& adj) {
  const Scenario& sc = spec.scenarios.at(scenario);
  const int P = fwd.x.paths(), K = fwd.x.nodes();
  const int n = spec.n, m = spec.m;
  const TimeGrid& grid = spec.grid;

  if (adj.P2.rows() != n || adj.P2.cols() != n || adj.P1.dim() != n)
    throw PreconditionError(
        "s_matrix: adjoint panel shape does not match the scenario state "
        "dimension");

  SProcess sp;
  sp.scenario = scenario;
  sp.S = MatrixPanel(P, K, m, n);
  sp.nabla_S = MatrixPanel(P, K, m, n);

  parallel_for_chunks(P, [&](int lo, int hi) {
    MatrixXd bu(n, m), su(n, m), sx(n, n), nabla(m, n);
    HamiltonianHess hess;
    for (int p = lo; p < hi; ++p) {
      for (int k = 0; k < K; ++k) {
        double t = grid.node(std::min(k, grid.steps));
        auto xk = fwd.x.at(p, k);
        auto uk = fwd.u.at(p, k);
        sc.b_u(t, xk, uk, bu);
        sc.sigma_u(t, xk, uk, su);
        sc.sigma_x(t, xk, uk, sx);
        hamiltonian_hess(sc, t, xk, uk, adj.P1.at(p, k), adj.Q1.at(p, k), hess);
        auto P2 = adj.P2.at(p, k);
        sp.S.at(p, k) = hess.xu + bu.transpose() * P2 +
                        su.transpose() * adj.Q2.at(p, k) +
                        su.transpose() * P2 * sx;
        if (spec.malliavin_mode == MalliavinMode::ClosedForm) {
          if (!sc.nabla_s)
            throw PreconditionError("s_matrix: closed-form malliavin mode without nabla_s");
          sc.nabla_s(t, xk, nabla);
          if (nabla.rows() != m || nabla.cols() != n)
            throw PreconditionError("s_matrix: nabla_s shape mismatch");
          sp.nabla_S.at(p, k) = nabla;
        }
        // declared-zero mode leaves nabla_S at its zero initialization
      }
    }
  });
  return sp;
}

}  // namespace rsonc
