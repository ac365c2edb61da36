#include "rsonc/expansion.hpp"

#include <cmath>

#include "rsonc/forward.hpp"
#include "rsonc/robust.hpp"

namespace rsonc {

std::vector<double> default_eps_list() {
  std::vector<double> eps;
  for (int k = 2; k <= 7; ++k) eps.push_back(std::pow(2.0, -k));
  return eps;
}

namespace {

double trap_w(int k, int N, double dt) {
  return (k == 0 || k == N) ? 0.5 * dt : dt;
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const VectorXd& v) {
  const int P = static_cast<int>(v.size());
  MeanSe s;
  s.mean = v.mean();
  if (P > 1) {
    double var = 0.0;
    for (int p = 0; p < P; ++p) var += (v[p] - s.mean) * (v[p] - s.mean);
    s.se = std::sqrt(var / (P - 1) / P);
  }
  return s;
}

}  // namespace

ExpansionReport expansion_scan(const ProblemSpec& spec,
                               const ControlProcess& ubar,
                               const ControlProcess& u,
                               const std::vector<double>& eps_list,
                               const PathBundle& bundle) {
  if (eps_list.size() < 4)
    throw PreconditionError("expansion_scan: need at least 4 epsilon values");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (eps_list[i] <= 0.0 || eps_list[i] >= 1.0)
      throw PreconditionError("expansion_scan: eps must lie in (0,1)");
    if (i > 0 && eps_list[i] >= eps_list[i - 1])
      throw PreconditionError("expansion_scan: eps_list must decrease");
  }

  const int P = bundle.n_paths();
  const int S = static_cast<int>(spec.scenarios.size());
  const int E = static_cast<int>(eps_list.size());
  const TimeGrid& grid = spec.grid;
  const int N = grid.steps;

  ConditionContext ctx = prepare_context(spec, ubar, bundle);

  // Pathwise scenario costs at ubar and at each u^eps (shared noise).
  MatrixXd cost_bar(P, S);
  for (int s = 0; s < S; ++s)
    cost_bar.col(s) = per_path_cost(spec, ubar, s, bundle);
  std::vector<MatrixXd> cost_eps(E, MatrixXd(P, S));
  for (int e = 0; e < E; ++e) {
    ControlProcess u_eps = ControlProcess::blend(ubar, u, eps_list[e]);
    for (int s = 0; s < S; ++s)
      cost_eps[e].col(s) = per_path_cost(spec, u_eps, s, bundle);
  }

  // Predicted coefficients: pathwise integrals per scenario.
  MatrixXd pred1(P, S), pred2(P, S);
  for (int s = 0; s < S; ++s) {
    const Scenario& sc = spec.scenarios[s];
    const ForwardProcesses& fwd = ctx.fwd[s];
    const AdjointProcesses& adj = ctx.adj[s];
    VectorPanel v = perturbation_trace(spec, u, fwd, bundle);
    VectorPanel y1 = simulate_first_variation(spec, fwd, v, bundle);
    VectorXd grad(spec.m);
    MatrixXd su(spec.n, spec.m);
    HamiltonianHess hess;
    for (int p = 0; p < P; ++p) {
      double acc1 = 0.0, acc2 = 0.0;
      for (int k = 0; k <= N; ++k) {
        double t = grid.node(k);
        auto xk = fwd.x.at(p, k);
        auto uk = fwd.u.at(p, k);
        auto vk = v.at(p, k);
        hamiltonian_grad_u(sc, t, xk, uk, adj.P1.at(p, k), adj.Q1.at(p, k),
                           grad);
        hamiltonian_hess(sc, t, xk, uk, adj.P1.at(p, k), adj.Q1.at(p, k),
                         hess);
        sc.sigma_u(t, xk, uk, su);
        double w = trap_w(k, N, grid.dt());
        acc1 += w * grad.dot(vk);
        VectorXd suv = su * vk;
        acc2 += w * ((ctx.s[s].S.at(p, k) * y1.at(p, k)).dot(vk) +
                     0.5 * (vk.dot(hess.uu * vk) + suv.dot(adj.P2.at(p, k) * suv)));
      }
      pred1(p, s) = -acc1;
      pred2(p, s) = -acc2;
    }
  }

  // OLS map for the Vandermonde system in (eps, eps^2).
  MatrixXd X(E, 2);
  for (int e = 0; e < E; ++e) {
    X(e, 0) = eps_list[e];
    X(e, 1) = eps_list[e] * eps_list[e];
  }
  MatrixXd W = (X.transpose() * X).ldlt().solve(X.transpose());  // 2 x E

  ExpansionReport rep;
  rep.eps = eps_list;
  rep.argmax_vertices = ctx.argmax_vertices;

  for (int vi : ctx.argmax_vertices) {
    const VectorXd& lam = spec.measures.vertices[vi];
    ExpansionReport::VertexFit fit;
    fit.vertex = vi;

    // Pathwise DJ(eps), then pathwise OLS coefficients (the OLS map is
    // linear, so the fit of the mean equals the mean of pathwise fits).
    MatrixXd dj_paths(P, E);
    VectorXd base = cost_bar * lam;
    for (int e = 0; e < E; ++e)
      dj_paths.col(e) = cost_eps[e] * lam - base;
    for (int e = 0; e < E; ++e) {
      MeanSe ms = mean_se(dj_paths.col(e));
      fit.dj.push_back(ms.mean);
      fit.dj_se.push_back(ms.se);
    }

    MatrixXd coefs = dj_paths * W.transpose();  // P x 2 pathwise fits
    MeanSe a1 = mean_se(coefs.col(0)), a2 = mean_se(coefs.col(1));
    fit.a1_fit = a1.mean;
    fit.a2_fit = a2.mean;
    fit.a1_fit_se = a1.se;
    fit.a2_fit_se = a2.se;

    VectorXd p1 = pred1 * lam, p2 = pred2 * lam;
    MeanSe m1 = mean_se(p1), m2 = mean_se(p2);
    fit.a1_pred = m1.mean;
    fit.a2_pred = m2.mean;
    fit.a1_pred_se = m1.se;
    fit.a2_pred_se = m2.se;
    fit.a2_gap_se = mean_se((coefs.col(1) - p2).eval()).se;

    for (int e = 0; e < E; ++e)
      fit.remainder.push_back(fit.dj[e] - fit.a1_pred * eps_list[e] -
                              fit.a2_pred * eps_list[e] * eps_list[e]);

    // slope on the small-eps half, where the asymptotics dominate
    std::vector<double> tail_eps, tail_rem;
    for (int e = E / 2; e < E; ++e) {
      tail_eps.push_back(eps_list[e]);
      tail_rem.push_back(std::abs(fit.remainder[e]));
    }
    fit.remainder_slope = loglog_slope(tail_eps, tail_rem);

    rep.fits.push_back(std::move(fit));
  }
  return rep;
}

}  // namespace rsonc
