#include "rsonc/adjoint.hpp"

#include <cmath>

#include "rsonc/hamiltonian.hpp"
#include "rsonc/parallel.hpp"

namespace rsonc {

// ---------------------------------------------------------------------------
// RegressionBasis

namespace {

void enumerate_monomials(int dims, int max_degree, std::vector<int>& current,
                         int start, int remaining,
                         std::vector<std::vector<int>>& out) {
  out.push_back(current);
  if (remaining == 0) return;
  for (int i = start; i < dims; ++i) {
    current[i] += 1;
    enumerate_monomials(dims, max_degree, current, i, remaining - 1, out);
    current[i] -= 1;
  }
}

}  // namespace

RegressionBasis::RegressionBasis(int state_dim, int degree) : degree_(degree) {
  if (degree < 0) throw ConfigError("basis degree must be >= 0");
  std::vector<int> current(state_dim, 0);
  enumerate_monomials(state_dim, degree, current, 0, degree, exponents_);
}

void RegressionBasis::fill(const VectorXd& x,
                           Eigen::Ref<Eigen::RowVectorXd> row) const {
  for (std::size_t f = 0; f < exponents_.size(); ++f) {
    double v = 1.0;
    for (std::size_t i = 0; i < exponents_[f].size(); ++i)
      for (int e = 0; e < exponents_[f][i]; ++e) v *= x[i];
    row[static_cast<int>(f)] = v;
  }
}

// ---------------------------------------------------------------------------
// per-node least squares

namespace {

// Cross-sectional regression at one time node. The normal matrix is
// accumulated in path order (deterministic reduction); ridge activates only
// when the design is ill-conditioned and skips the intercept column.
class NodeRegression {
 public:
  NodeRegression(const RegressionBasis& basis, const VectorPanel& x, int node,
                 bool* ridge_flag)
      : basis_(basis), F_(basis.features()), P_(x.paths()) {
    rows_.resize(P_, F_);
    Eigen::RowVectorXd row(F_);
    for (int p = 0; p < P_; ++p) {
      basis_.fill(x.at(p, node), row);
      rows_.row(p) = row;
    }
    MatrixXd xtx = rows_.transpose() * rows_;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(xtx);
    double emax = es.eigenvalues().cwiseAbs().maxCoeff();
    double emin = es.eigenvalues().minCoeff();
    if (!(emax > 0.0) || emin < 1e-12 * emax) {
      double lambda = 1e-8 * xtx.trace() / F_;
      for (int f = 1; f < F_; ++f) xtx(f, f) += lambda;
      if (ridge_flag) *ridge_flag = true;
    }
    solver_.compute(xtx);
    if (solver_.info() != Eigen::Success)
      throw DegeneracyError("regression design matrix unusable even with ridge");
  }

  // Projects each column of `targets` (P x cols) onto the basis and writes
  // the fitted values back into `fitted` (P x cols).
  template <typename TA, typename TB>
  void project(const TA& targets, TB& fitted) const {
    MatrixXd beta = solver_.solve(rows_.transpose() * targets);
    fitted.noalias() = rows_ * beta;
  }

 private:
  const RegressionBasis& basis_;
  int F_, P_;
  MatrixXd rows_;
  Eigen::LDLT<MatrixXd> solver_;
};

void symmetrize(Eigen::Ref<MatrixXd> m) {
  m = 0.5 * (m + m.transpose()).eval();
}

}  // namespace

// ---------------------------------------------------------------------------
// first adjoint

AdjointProcesses solve_adjoint_first(const ProblemSpec& spec, int scenario,
                                     const ForwardProcesses& fwd,
                                     const PathBundle& bundle,
                                     AdjointMode mode) {
  const Scenario& sc = spec.scenarios.at(scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths(), n = spec.n;
  const double dt = grid.dt();

  AdjointProcesses adj;
  adj.scenario = scenario;
  adj.mode = mode;
  adj.P1 = VectorPanel(P, N + 1, n);
  adj.Q1 = VectorPanel(P, N + 1, n);

  // Terminal condition, exact pathwise in both modes.
  {
    VectorXd hx(n);
    for (int p = 0; p < P; ++p) {
      sc.h_x(fwd.x.at(p, N), hx);
      adj.P1.at(p, N) = -hx;
    }
  }

  if (mode == AdjointMode::Analytic) {
    if (!sc.p1 || !sc.q1)
      throw PreconditionError("analytic adjoint mode without p1/q1 closed forms");
    parallel_for_chunks(P, [&](int lo, int hi) {
      VectorXd val(n);
      for (int p = lo; p < hi; ++p)
        for (int k = 0; k <= N; ++k) {
          double t = grid.node(k);
          if (k < N) {
            sc.p1(t, fwd.x.at(p, k), val);
            adj.P1.at(p, k) = val;
          }
          sc.q1(t, fwd.x.at(p, k), val);
          adj.Q1.at(p, k) = val;
        }
    });
    return adj;
  }

  RegressionBasis basis(n, spec.basis_degree);
  MatrixXd p_next(P, n), cont(P, n), q_target(P, n), p_target(P, n),
      fitted(P, n);
  VectorXd fx(n), driver(n);
  MatrixXd bx(n, n), sx(n, n);

  for (int p = 0; p < P; ++p) p_next.row(p) = adj.P1.at(p, N).transpose();

  for (int k = N - 1; k >= 0; --k) {
    NodeRegression reg(basis, fwd.x, k, &adj.ridge_used);

    // continuation value, also the control variate for the Q estimator
    reg.project(p_next, cont);

    double t_next = grid.node(k + 1);
    for (int p = 0; p < P; ++p) {
      double dw = bundle.dW(p, k);
      q_target.row(p) = (p_next.row(p) - cont.row(p)) * (dw / dt);
      // explicit backward Euler: driver at t_{k+1} with pathwise values
      sc.b_x(t_next, fwd.x.at(p, k + 1), fwd.u.at(p, k + 1), bx);
      sc.sigma_x(t_next, fwd.x.at(p, k + 1), fwd.u.at(p, k + 1), sx);
      sc.f_x(t_next, fwd.x.at(p, k + 1), fwd.u.at(p, k + 1), fx);
      driver = bx.transpose() * p_next.row(p).transpose() +
               sx.transpose() * adj.Q1.at(p, k + 1) - fx;
      p_target.row(p) = p_next.row(p) + dt * driver.transpose();
    }

    reg.project(q_target, fitted);
    for (int p = 0; p < P; ++p) adj.Q1.at(p, k) = fitted.row(p).transpose();

    reg.project(p_target, fitted);
    for (int p = 0; p < P; ++p) adj.P1.at(p, k) = fitted.row(p).transpose();
    p_next = fitted;
  }
  return adj;
}

// ---------------------------------------------------------------------------
// second adjoint

void solve_adjoint_second(const ProblemSpec& spec, int scenario,
                          const ForwardProcesses& fwd,
                          const PathBundle& bundle, AdjointProcesses& adj) {
  const Scenario& sc = spec.scenarios.at(scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths(), n = spec.n;
  const double dt = grid.dt();

  if (adj.P1.empty())
    throw PreconditionError("solve_adjoint_second: first adjoint missing");

  adj.P2 = MatrixPanel(P, N + 1, n, n);
  adj.Q2 = MatrixPanel(P, N + 1, n, n);

  {
    MatrixXd hxx(n, n);
    for (int p = 0; p < P; ++p) {
      sc.h_xx(fwd.x.at(p, N), hxx);
      adj.P2.at(p, N) = -hxx;
      symmetrize(adj.P2.at(p, N));
    }
  }

  if (adj.mode == AdjointMode::Analytic) {
    if (!sc.p2 || !sc.q2)
      throw PreconditionError("analytic adjoint mode without p2/q2 closed forms");
    parallel_for_chunks(P, [&](int lo, int hi) {
      MatrixXd val(n, n);
      for (int p = lo; p < hi; ++p)
        for (int k = 0; k <= N; ++k) {
          double t = grid.node(k);
          if (k < N) {
            sc.p2(t, fwd.x.at(p, k), val);
            symmetrize(val);
            adj.P2.at(p, k) = val;
          }
          sc.q2(t, fwd.x.at(p, k), val);
          symmetrize(val);
          adj.Q2.at(p, k) = val;
        }
    });
    return;
  }

  RegressionBasis basis(n, spec.basis_degree);
  const int C = n * n;  // matrix targets flattened, one row per path
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat p_next(P, C), cont(P, C), q_target(P, C), p_target(P, C),
      fitted(P, C);
  MatrixXd bx(n, n), sx(n, n), P2(n, n), Q2(n, n), drv(n, n);
  HamiltonianHess hess;

  for (int p = 0; p < P; ++p)
    p_next.row(p) = Eigen::Map<const Eigen::RowVectorXd>(adj.P2.slot(p, N), C);

  for (int k = N - 1; k >= 0; --k) {
    NodeRegression reg(basis, fwd.x, k, &adj.ridge_used);
    reg.project(p_next, cont);

    double t_next = grid.node(k + 1);
    for (int p = 0; p < P; ++p) {
      double dw = bundle.dW(p, k);
      q_target.row(p) = (p_next.row(p) - cont.row(p)) * (dw / dt);

      auto x_next = fwd.x.at(p, k + 1);
      auto u_next = fwd.u.at(p, k + 1);
      sc.b_x(t_next, x_next, u_next, bx);
      sc.sigma_x(t_next, x_next, u_next, sx);
      hamiltonian_hess(sc, t_next, x_next, u_next, adj.P1.at(p, k + 1),
                       adj.Q1.at(p, k + 1), hess);
      P2 = Eigen::Map<const MatrixXd>(p_next.row(p).data(), n, n);
      Q2 = adj.Q2.at(p, k + 1);
      drv = bx.transpose() * P2 + P2 * bx + sx.transpose() * P2 * sx +
            sx.transpose() * Q2 + Q2 * sx + hess.xx;
      P2 += dt * drv;
      p_target.row(p) = Eigen::Map<const Eigen::RowVectorXd>(P2.data(), C);
    }

    reg.project(q_target, fitted);
    for (int p = 0; p < P; ++p) {
      adj.Q2.at(p, k) = Eigen::Map<const MatrixXd>(fitted.row(p).data(), n, n);
      symmetrize(adj.Q2.at(p, k));
    }

    reg.project(p_target, fitted);
    for (int p = 0; p < P; ++p) {
      MatrixXd m = Eigen::Map<const MatrixXd>(fitted.row(p).data(), n, n);
      symmetrize(m);
      adj.P2.at(p, k) = m;
      p_next.row(p) = Eigen::Map<const Eigen::RowVectorXd>(m.data(), C);
    }
  }
}

AdjointProcesses solve_adjoints(const ProblemSpec& spec, int scenario,
                                const ForwardProcesses& fwd,
                                const PathBundle& bundle, AdjointMode mode) {
  AdjointProcesses adj = solve_adjoint_first(spec, scenario, fwd, bundle, mode);
  solve_adjoint_second(spec, scenario, fwd, bundle, adj);
  return adj;
}

// ---------------------------------------------------------------------------
// duality oracles

namespace {

struct PairedMean {
  double mean_a = 0, mean_b = 0, se_a = 0, se_b = 0, se_diff = 0;
};

PairedMean paired_stats(const std::vector<double>& a,
                        const std::vector<double>& b) {
  const std::size_t P = a.size();
  PairedMean s;
  for (std::size_t p = 0; p < P; ++p) {
    s.mean_a += a[p];
    s.mean_b += b[p];
  }
  s.mean_a /= P;
  s.mean_b /= P;
  double va = 0, vb = 0, vd = 0;
  for (std::size_t p = 0; p < P; ++p) {
    va += (a[p] - s.mean_a) * (a[p] - s.mean_a);
    vb += (b[p] - s.mean_b) * (b[p] - s.mean_b);
    double d = (a[p] - b[p]) - (s.mean_a - s.mean_b);
    vd += d * d;
  }
  if (P > 1) {
    s.se_a = std::sqrt(va / (P - 1) / P);
    s.se_b = std::sqrt(vb / (P - 1) / P);
    s.se_diff = std::sqrt(vd / (P - 1) / P);
  }
  return s;
}

// trapezoid weight over [0, T]
double trap_w(int k, int N, double dt) {
  return (k == 0 || k == N) ? 0.5 * dt : dt;
}

}  // namespace

DualityReport duality_check_first(const ProblemSpec& spec, int scenario,
                                  const ForwardProcesses& fwd,
                                  const AdjointProcesses& adj,
                                  const VectorPanel& v,
                                  const PathBundle& bundle) {
  const Scenario& sc = spec.scenarios.at(scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths(), n = spec.n;

  VectorPanel y1 = simulate_first_variation(spec, fwd, v, bundle);

  std::vector<double> lhs(P), rhs(P);
  parallel_for_chunks(P, [&](int lo, int hi) {
    VectorXd hx(n), fx(n);
    MatrixXd bu(n, spec.m), su(n, spec.m);
    for (int p = lo; p < hi; ++p) {
      sc.h_x(fwd.x.at(p, N), hx);
      lhs[p] = hx.dot(y1.at(p, N));
      double acc = 0.0;
      for (int k = 0; k <= N; ++k) {
        double t = grid.node(k);
        auto xk = fwd.x.at(p, k);
        auto uk = fwd.u.at(p, k);
        sc.b_u(t, xk, uk, bu);
        sc.sigma_u(t, xk, uk, su);
        sc.f_x(t, xk, uk, fx);
        double integrand = adj.P1.at(p, k).dot(bu * v.at(p, k)) +
                           adj.Q1.at(p, k).dot(su * v.at(p, k)) +
                           fx.dot(y1.at(p, k));
        acc += trap_w(k, N, grid.dt()) * integrand;
      }
      rhs[p] = -acc;
    }
  });

  PairedMean s = paired_stats(lhs, rhs);
  return {s.mean_a, s.mean_b, s.mean_a - s.mean_b, s.se_a, s.se_b, s.se_diff};
}

DualityReport duality_check_second(const ProblemSpec& spec, int scenario,
                                   const ForwardProcesses& fwd,
                                   const AdjointProcesses& adj,
                                   const VectorPanel& v,
                                   const PathBundle& bundle) {
  const Scenario& sc = spec.scenarios.at(scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths(), n = spec.n;

  VectorPanel y1 = simulate_first_variation(spec, fwd, v, bundle);

  std::vector<double> lhs(P), rhs(P);
  parallel_for_chunks(P, [&](int lo, int hi) {
    MatrixXd hxx(n, n), bu(n, spec.m), su(n, spec.m), sx(n, n);
    HamiltonianHess hess;
    for (int p = lo; p < hi; ++p) {
      sc.h_xx(fwd.x.at(p, N), hxx);
      lhs[p] = y1.at(p, N).dot(hxx * y1.at(p, N));
      double acc = 0.0;
      for (int k = 0; k <= N; ++k) {
        double t = grid.node(k);
        auto xk = fwd.x.at(p, k);
        auto uk = fwd.u.at(p, k);
        auto y1k = y1.at(p, k);
        sc.b_u(t, xk, uk, bu);
        sc.sigma_u(t, xk, uk, su);
        sc.sigma_x(t, xk, uk, sx);
        hamiltonian_hess(sc, t, xk, uk, adj.P1.at(p, k), adj.Q1.at(p, k), hess);
        auto P2 = adj.P2.at(p, k);
        VectorXd suv = su * v.at(p, k);
        double integrand = 2.0 * (P2 * y1k).dot(bu * v.at(p, k)) +
                           2.0 * (adj.Q2.at(p, k) * suv).dot(y1k) +
                           suv.dot(P2 * suv) - y1k.dot(hess.xx * y1k) +
                           2.0 * (P2 * (sx * y1k)).dot(suv);
        acc += trap_w(k, N, grid.dt()) * integrand;
      }
      rhs[p] = -acc;
    }
  });

  PairedMean s = paired_stats(lhs, rhs);
  return {s.mean_a, s.mean_b, s.mean_a - s.mean_b, s.se_a, s.se_b, s.se_diff};
}

}  // namespace rsonc
