#include "rsonc/conditions.hpp"

#include <algorithm>
#include <cmath>

#include "rsonc/parallel.hpp"

namespace rsonc {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Satisfied:
      return "satisfied";
    case Verdict::Violated:
      return "violated";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "?";
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

// Pathwise trapezoid integral of <S_gamma y1_gamma, v> over [0, T].
VectorXd integral_s_y1_v(const SProcess& s, const VectorPanel& y1,
                         const VectorPanel& v, const TimeGrid& grid) {
  const int P = y1.paths(), N = grid.steps;
  VectorXd out(P);
  for (int p = 0; p < P; ++p) {
    double acc = 0.0;
    for (int k = 0; k <= N; ++k)
      acc += trap_w(k, N, grid.dt()) * (s.S.at(p, k) * y1.at(p, k)).dot(v.at(p, k));
    out[p] = acc;
  }
  return out;
}

}  // namespace

ConditionContext prepare_context(const ProblemSpec& spec,
                                 const ControlProcess& ubar,
                                 const PathBundle& bundle) {
  ConditionContext ctx;
  const int S = static_cast<int>(spec.scenarios.size());
  for (int s = 0; s < S; ++s) {
    ctx.fwd.push_back(simulate_forward(spec, ubar, s, bundle));
    ctx.adj.push_back(
        solve_adjoints(spec, s, ctx.fwd.back(), bundle, spec.adjoint_mode));
    ctx.s.push_back(s_matrix(spec, s, ctx.fwd.back(), ctx.adj.back()));
  }
  ctx.cost_ubar = robust_cost(spec, ubar, bundle);
  ctx.argmax_vertices = ctx.cost_ubar.argmax;
  return ctx;
}

// ---------------------------------------------------------------------------
// singularity (Definition of singular control in the classical sense)

SingularReport check_singular(const ProblemSpec& spec,
                              const ConditionContext& ctx, double tol_floor) {
  const TimeGrid& grid = spec.grid;
  const int S = static_cast<int>(spec.scenarios.size());
  const int P = ctx.fwd.front().x.paths();
  const int N = grid.steps, m = spec.m;

  // Per-scenario pathwise panels of dH/du and H_uu + sigma_u^T P2 sigma_u.
  std::vector<VectorPanel> g1(S);
  std::vector<MatrixPanel> g2(S);
  for (int s = 0; s < S; ++s) {
    const Scenario& sc = spec.scenarios[s];
    g1[s] = VectorPanel(P, N + 1, m);
    g2[s] = MatrixPanel(P, N + 1, m, m);
    const ForwardProcesses& fwd = ctx.fwd[s];
    const AdjointProcesses& adj = ctx.adj[s];
    parallel_for_chunks(P, [&](int lo, int hi) {
      VectorXd grad(m);
      MatrixXd su(spec.n, m);
      HamiltonianHess hess;
      for (int p = lo; p < hi; ++p)
        for (int k = 0; k <= N; ++k) {
          double t = grid.node(k);
          auto xk = fwd.x.at(p, k);
          auto uk = fwd.u.at(p, k);
          hamiltonian_grad_u(sc, t, xk, uk, adj.P1.at(p, k), adj.Q1.at(p, k),
                             grad);
          g1[s].at(p, k) = grad;
          hamiltonian_hess(sc, t, xk, uk, adj.P1.at(p, k), adj.Q1.at(p, k),
                           hess);
          sc.sigma_u(t, xk, uk, su);
          g2[s].at(p, k) = hess.uu + su.transpose() * adj.P2.at(p, k) * su;
        }
    });
  }

  SingularReport rep;
  rep.argmax_vertices = ctx.argmax_vertices;
  VectorXd a(P), b(P);
  VectorXd comb1(m);
  MatrixXd comb2(m, m);
  for (int vi : ctx.argmax_vertices) {
    const VectorXd& lam = spec.measures.vertices[vi];
    for (int p = 0; p < P; ++p) {
      double acc1 = 0.0, acc2 = 0.0;
      for (int k = 0; k <= N; ++k) {
        comb1.setZero();
        comb2.setZero();
        for (int s = 0; s < S; ++s) {
          comb1 += lam[s] * g1[s].at(p, k);
          comb2 += lam[s] * g2[s].at(p, k);
        }
        double w = trap_w(k, N, grid.dt());
        acc1 += w * comb1.norm();
        acc2 += w * comb2.norm();
      }
      a[p] = acc1 / grid.horizon;
      b[p] = acc2 / grid.horizon;
    }
    MeanSe sa = mean_se(a), sb = mean_se(b);
    if (sa.mean > rep.max_first) {
      rep.max_first = sa.mean;
      rep.se_first = sa.se;
    }
    if (sb.mean > rep.max_second) {
      rep.max_second = sb.mean;
      rep.se_second = sb.se;
    }
  }

  rep.tol = std::max(tol_floor, 3.0 * std::max(rep.se_first, rep.se_second));
  rep.verdict = (rep.max_first <= rep.tol && rep.max_second <= rep.tol)
                    ? Verdict::Satisfied
                    : Verdict::Violated;
  return rep;
}

SingularReport check_singular(const ProblemSpec& spec,
                              const ControlProcess& ubar,
                              const PathBundle& bundle, double tol_floor) {
  ConditionContext ctx = prepare_context(spec, ubar, bundle);
  return check_singular(spec, ctx, tol_floor);
}

// ---------------------------------------------------------------------------
// integral-type second-order necessary condition

IntegralSoncReport integral_sonc(const ProblemSpec& spec,
                                 const ControlProcess& ubar,
                                 const std::vector<ControlProcess>& us,
                                 const PathBundle& bundle, double tol_floor) {
  ConditionContext ctx = prepare_context(spec, ubar, bundle);
  SingularReport sing = check_singular(spec, ctx, tol_floor);
  if (sing.verdict != Verdict::Satisfied)
    throw PreconditionError(
        "integral_sonc: reference control is not singular (|int dH/du "
        "dlambda| = " +
        std::to_string(sing.max_first) + ", second quantity = " +
        std::to_string(sing.max_second) + "); theorem hypothesis unmet");

  const int S = static_cast<int>(spec.scenarios.size());
  const int P = bundle.n_paths();

  IntegralSoncReport rep;
  rep.argmax_vertices = ctx.argmax_vertices;
  rep.tol_floor = tol_floor;

  for (const ControlProcess& u : us) {
    // per-scenario pathwise integral of <S y1, v>
    MatrixXd c(P, S);
    for (int s = 0; s < S; ++s) {
      VectorPanel v = perturbation_trace(spec, u, ctx.fwd[s], bundle);
      VectorPanel y1 = simulate_first_variation(spec, ctx.fwd[s], v, bundle);
      c.col(s) = integral_s_y1_v(ctx.s[s], y1, v, spec.grid);
    }

    IntegralSoncReport::PerControl pc;
    int argmin = -1;
    for (int vi : ctx.argmax_vertices) {
      VectorXd vals = c * spec.measures.vertices[vi];
      MeanSe s = mean_se(vals);
      pc.vertex_value.push_back(s.mean);
      pc.vertex_se.push_back(s.se);
      if (argmin < 0 || s.mean < pc.min_value) {
        pc.min_value = s.mean;
        pc.min_se = s.se;
        argmin = vi;
      }
    }
    double tol = std::max(tol_floor, 3.0 * pc.min_se);
    if (pc.min_value > tol)
      pc.verdict = Verdict::Violated;
    else if (pc.min_value < -tol)
      pc.verdict = Verdict::Satisfied;
    else
      pc.verdict = Verdict::Inconclusive;
    rep.controls.push_back(std::move(pc));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// (H5) monotonicity probe

namespace {

MonotonicityReport monotonicity_with_context(const ProblemSpec& spec,
                                             const ConditionContext& ctx,
                                             const ControlProcess& u1,
                                             const ControlProcess& u2,
                                             const PathBundle& bundle) {
  const int S = static_cast<int>(spec.scenarios.size());

  MonotonicityReport rep;
  for (int s = 0; s < S; ++s) {
    VectorPanel t1 = control_trace(spec, u1, ctx.fwd[s].x, bundle);
    VectorPanel t2 = control_trace(spec, u2, ctx.fwd[s].x, bundle);
    VectorPanel v = t1;
    for (int p = 0; p < v.paths(); ++p)
      for (int k = 0; k < v.nodes(); ++k) v.at(p, k) -= t2.at(p, k);
    VectorPanel y1 = simulate_first_variation(spec, ctx.fwd[s], v, bundle);
    VectorXd vals = -integral_s_y1_v(ctx.s[s], y1, v, spec.grid);
    MeanSe ms = mean_se(vals);
    rep.value.push_back(ms.mean);
    rep.se.push_back(ms.se);
    if (ms.mean < -3.0 * ms.se - 1e-12) rep.holds = false;
  }
  return rep;
}

}  // namespace

MonotonicityReport check_monotonicity(const ProblemSpec& spec,
                                      const ControlProcess& ubar,
                                      const ControlProcess& u1,
                                      const ControlProcess& u2,
                                      const PathBundle& bundle) {
  ConditionContext ctx = prepare_context(spec, ubar, bundle);
  return monotonicity_with_context(spec, ctx, u1, u2, bundle);
}

// ---------------------------------------------------------------------------
// pointwise second-order necessary condition

namespace {

int node_of(double t, const TimeGrid& grid, const char* what) {
  double k_real = t / grid.dt();
  int k = static_cast<int>(std::llround(k_real));
  if (k < 0 || k > grid.steps ||
      std::abs(k * grid.dt() - t) > 1e-9 * std::max(1.0, grid.horizon))
    throw PreconditionError(std::string(what) +
                            " must be aligned with the time grid");
  return k;
}

// max cross-path deviation of a panel at each node, used to certify the
// declared-zero Malliavin mode (deterministic processes only).
double path_spread(const MatrixPanel& panel) {
  double worst = 0.0;
  for (int k = 0; k < panel.nodes(); ++k) {
    auto ref = panel.at(0, k);
    double scale = 1.0 + ref.norm();
    for (int p = 1; p < panel.paths(); ++p)
      worst = std::max(worst, (panel.at(p, k) - ref).norm() / scale);
  }
  return worst;
}

double path_spread(const VectorPanel& panel) {
  double worst = 0.0;
  for (int k = 0; k < panel.nodes(); ++k) {
    auto ref = panel.at(0, k);
    double scale = 1.0 + ref.norm();
    for (int p = 1; p < panel.paths(); ++p)
      worst = std::max(worst, (panel.at(p, k) - ref).norm() / scale);
  }
  return worst;
}

}  // namespace

PointwiseSoncReport pointwise_sonc(const ProblemSpec& spec,
                                   const ControlProcess& ubar,
                                   const std::vector<double>& tau_grid,
                                   const std::vector<VectorXd>& v_grid,
                                   const PathBundle& bundle,
                                   double tol_floor) {
  ConditionContext ctx = prepare_context(spec, ubar, bundle);
  SingularReport sing = check_singular(spec, ctx, tol_floor);
  if (sing.verdict != Verdict::Satisfied)
    throw PreconditionError(
        "pointwise_sonc: reference control is not singular; theorem "
        "hypothesis unmet");

  const int S = static_cast<int>(spec.scenarios.size());
  const int P = bundle.n_paths();
  const TimeGrid& grid = spec.grid;

  // Declared-zero Malliavin mode is only valid for deterministic S and ubar.
  if (spec.malliavin_mode == MalliavinMode::DeclaredZero) {
    for (int s = 0; s < S; ++s) {
      double spread = path_spread(ctx.s[s].S);
      if (spread > 1e-8)
        throw PreconditionError(
            "pointwise_sonc: S is path-dependent (spread " +
            std::to_string(spread) +
            ") in scenario " + std::to_string(s) +
            " but malliavin mode is declared_zero; supply a closed form");
    }
    double uspread = path_spread(ctx.fwd.front().u);
    if (uspread > 1e-8)
      throw PreconditionError(
          "pointwise_sonc: ubar is path-dependent but malliavin mode is "
          "declared_zero; supply a closed form for nabla ubar");
  }
  if (spec.malliavin_mode == MalliavinMode::ClosedForm && !spec.nabla_ubar)
    throw PreconditionError(
        "pointwise_sonc: closed-form malliavin mode requires nabla_ubar");

  for (const VectorXd& v : v_grid)
    if (!spec.box.contains(v))
      throw PreconditionError("pointwise_sonc: v grid point outside U");

  PointwiseSoncReport rep;
  rep.tau_grid = tau_grid;
  rep.v_grid = v_grid;
  rep.argmax_vertices = ctx.argmax_vertices;

  std::vector<int> tau_nodes;
  for (double tau : tau_grid) tau_nodes.push_back(node_of(tau, grid, "tau"));

  // Pathwise scenario statistic at (tau, v), then lambda-combination.
  const int NT = static_cast<int>(tau_grid.size());
  const int NV = static_cast<int>(v_grid.size());
  // values_base[s][ti][vi] = per-path vector
  std::vector<std::vector<std::vector<VectorXd>>> base(
      S, std::vector<std::vector<VectorXd>>(NT, std::vector<VectorXd>(NV)));

  VectorXd nabla_u(spec.m);
  for (int s = 0; s < S; ++s) {
    const Scenario& sc = spec.scenarios[s];
    const ForwardProcesses& fwd = ctx.fwd[s];
    for (int ti = 0; ti < NT; ++ti) {
      int k = tau_nodes[ti];
      double t = grid.node(k);
      if (spec.malliavin_mode == MalliavinMode::ClosedForm)
        spec.nabla_ubar(t, nabla_u);
      else
        nabla_u = VectorXd::Zero(spec.m);
      for (int vi = 0; vi < NV; ++vi) {
        VectorXd vals(P);
        MatrixXd bu(spec.n, spec.m), su(spec.n, spec.m);
        for (int p = 0; p < P; ++p) {
          auto xk = fwd.x.at(p, k);
          auto uk = fwd.u.at(p, k);
          VectorXd d = v_grid[vi] - uk;
          sc.b_u(t, xk, uk, bu);
          sc.sigma_u(t, xk, uk, su);
          auto Sm = ctx.s[s].S.at(p, k);
          auto Gm = ctx.s[s].nabla_S.at(p, k);
          vals[p] = (Sm * (bu * d)).dot(d) + (Gm * (su * d)).dot(d) -
                    (Sm * (su * d)).dot(nabla_u);
        }
        base[s][ti][vi] = vals;
      }
    }
  }

  rep.values.assign(ctx.argmax_vertices.size(),
                    std::vector<std::vector<double>>(
                        NT, std::vector<double>(NV, 0.0)));
  double min_over_vertices = 0.0;
  double se_at_min = 0.0;
  bool first_vertex = true;
  for (std::size_t a = 0; a < ctx.argmax_vertices.size(); ++a) {
    const VectorXd& lam = spec.measures.vertices[ctx.argmax_vertices[a]];
    PointwiseSoncReport::Witness w;
    w.vertex = ctx.argmax_vertices[a];
    bool first_cell = true;
    for (int ti = 0; ti < NT; ++ti)
      for (int vi = 0; vi < NV; ++vi) {
        VectorXd vals = VectorXd::Zero(P);
        for (int s = 0; s < S; ++s) vals += lam[s] * base[s][ti][vi];
        MeanSe ms = mean_se(vals);
        rep.values[a][ti][vi] = ms.mean;
        if (first_cell || ms.mean > w.value) {
          w.value = ms.mean;
          w.se = ms.se;
          w.tau = tau_grid[ti];
          w.v = v_grid[vi];
          first_cell = false;
        }
      }
    rep.per_vertex_max.push_back(w);
    if (first_vertex || w.value < min_over_vertices) {
      min_over_vertices = w.value;
      se_at_min = w.se;
      first_vertex = false;
    }
  }

  rep.min_over_vertices = min_over_vertices;
  rep.tol = std::max(tol_floor, 3.0 * se_at_min);
  if (min_over_vertices > rep.tol)
    rep.verdict = Verdict::Violated;
  else if (min_over_vertices < -rep.tol)
    rep.verdict = Verdict::Satisfied;
  else
    rep.verdict = Verdict::Inconclusive;

  // (H5) probe along the tested directions; failure annotates, not aborts.
  bool h5_ok = true;
  for (const VectorXd& v : v_grid) {
    MonotonicityReport mono = monotonicity_with_context(
        spec, ctx, ControlProcess::constant(v), ubar, bundle);
    if (!mono.holds) h5_ok = false;
  }
  if (!h5_ok)
    rep.h5_note =
        "monotonicity (H5) probe failed along some tested direction: the "
        "common-lambda* reading is downgraded to per-direction lambda*; see "
        "the raw per-(tau,v,vertex) table";
  return rep;
}

std::pair<std::vector<VectorPanel>, std::vector<VectorPanel>>
sonc_window_panels(const ProblemSpec& spec, const ConditionContext& ctx,
                   const ControlProcess& u, const PathBundle& bundle) {
  const int S = static_cast<int>(spec.scenarios.size());
  const TimeGrid& grid = spec.grid;
  std::vector<VectorPanel> phi, psi;
  for (int s = 0; s < S; ++s) {
    const Scenario& sc = spec.scenarios[s];
    const ForwardProcesses& fwd = ctx.fwd[s];
    VectorPanel v = perturbation_trace(spec, u, fwd, bundle);
    VectorPanel ph(v.paths(), v.nodes(), spec.n);
    VectorPanel ps(v.paths(), v.nodes(), spec.n);
    MatrixXd bu(spec.n, spec.m);
    for (int p = 0; p < v.paths(); ++p)
      for (int k = 0; k < v.nodes(); ++k) {
        double t = grid.node(std::min(k, grid.steps));
        sc.b_u(t, fwd.x.at(p, k), fwd.u.at(p, k), bu);
        ph.at(p, k) = ctx.s[s].S.at(p, k).transpose() * v.at(p, k);
        ps.at(p, k) = bu * v.at(p, k);
      }
    phi.push_back(std::move(ph));
    psi.push_back(std::move(ps));
  }
  return {std::move(phi), std::move(psi)};
}

// ---------------------------------------------------------------------------
// Lebesgue differentiation window scan

WindowScanReport lebesgue_window_scan(const std::vector<VectorPanel>& phi,
                                      const std::vector<VectorPanel>& psi,
                                      const VectorXd& lambda,
                                      const TimeGrid& grid, double tau,
                                      const std::vector<double>& alphas) {
  const int S = static_cast<int>(phi.size());
  if (S == 0 || psi.size() != phi.size())
    throw PreconditionError("window scan: panel lists empty or mismatched");
  if (lambda.size() != S)
    throw PreconditionError("window scan: lambda dimension mismatch");
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (alphas[i] >= alphas[i - 1])
      throw PreconditionError("window scan: alphas must decrease");
  double alpha_max = alphas.empty() ? 0.0 : alphas.front();
  if (tau + alpha_max > grid.horizon + 1e-12)
    throw PreconditionError("window scan: window exceeds the horizon");

  const int i_tau = node_of(tau, grid, "tau");
  const double dt = grid.dt();
  const int P = phi.front().paths();

  WindowScanReport rep;
  rep.alphas = alphas;

  // limit target (1/2) sum_gamma lambda_gamma E <phi(tau), psi(tau)>
  double target = 0.0;
  for (int s = 0; s < S; ++s) {
    double acc = 0.0;
    for (int p = 0; p < P; ++p)
      acc += phi[s].at(p, i_tau).dot(psi[s].at(p, i_tau));
    target += lambda[s] * acc / P;
  }
  rep.target = 0.5 * target;

  for (double alpha : alphas) {
    int J = static_cast<int>(std::llround(alpha / dt));
    if (J < 1 || std::abs(J * dt - alpha) > 1e-9 * std::max(1.0, grid.horizon))
      throw PreconditionError(
          "window scan: alpha must be a whole number of steps");
    double frozen = 0.0, moving = 0.0;
    for (int s = 0; s < S; ++s) {
      double acc_f = 0.0, acc_m = 0.0;
      for (int p = 0; p < P; ++p) {
        VectorXd inner = VectorXd::Zero(phi[s].dim());
        double path_f = 0.0, path_m = 0.0;
        for (int j = 0; j <= J; ++j) {
          int k = i_tau + j;
          // inner integral: left endpoints on [tau, t_k)
          if (j > 0) inner += psi[s].at(p, k - 1) * dt;
          double wt = (j == 0 || j == J) ? 0.5 * dt : dt;  // outer trapezoid
          path_f += wt * phi[s].at(p, i_tau).dot(inner);
          path_m += wt * phi[s].at(p, k).dot(inner);
        }
        acc_f += path_f;
        acc_m += path_m;
      }
      frozen += lambda[s] * acc_f / P;
      moving += lambda[s] * acc_m / P;
    }
    rep.frozen.push_back(frozen / (alpha * alpha));
    rep.moving.push_back(moving / (alpha * alpha));
    rep.gap_frozen.push_back(std::abs(rep.frozen.back() - rep.target));
    rep.gap_moving.push_back(std::abs(rep.moving.back() - rep.target));
  }
  return rep;
}

}  // namespace rsonc
