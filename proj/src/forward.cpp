#include "rsonc/forward.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>

#include "rsonc/parallel.hpp"

namespace rsonc {

namespace {

// Runs fn(p) over all paths in parallel; the lowest-path failure is
// rethrown after the join so errors are deterministic under any worker
// count.
template <typename Fn>
void for_each_path(int n_paths, Fn&& fn) {
  std::mutex mu;
  int first_path = -1;
  std::exception_ptr first_error;
  parallel_for_chunks(n_paths, [&](int lo, int hi) {
    for (int p = lo; p < hi; ++p) {
      try {
        fn(p);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (first_path < 0 || p < first_path) {
          first_path = p;
          first_error = std::current_exception();
        }
        return;  // abandon this chunk; other chunks finish normally
      }
    }
  });
  if (first_error) std::rethrow_exception(first_error);
}

void check_finite(const VectorXd& v, int scenario, int p, int k) {
  for (int i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw SimulationError(scenario, p, k,
                            "non-finite state at scenario " +
                                std::to_string(scenario) + ", path " +
                                std::to_string(p) + ", step " +
                                std::to_string(k));
}

}  // namespace

ForwardProcesses simulate_forward(const ProblemSpec& spec,
                                  const ControlProcess& control, int scenario,
                                  const PathBundle& bundle) {
  const Scenario& sc = spec.scenarios.at(scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths();
  const double dt = grid.dt();

  ForwardProcesses fwd;
  fwd.scenario = scenario;
  fwd.x = VectorPanel(P, N + 1, spec.n);
  fwd.u = VectorPanel(P, N + 1, spec.m);

  for_each_path(P, [&](int p) {
    VectorXd x = spec.x0, u_val(spec.m), bval(spec.n), sval(spec.n);
    std::vector<double> w(N + 1, 0.0);
    fwd.x.at(p, 0) = x;
    for (int k = 0; k < N; ++k) {
      double t = grid.node(k);
      control.eval(grid, k, x, std::span<const double>(w.data(), k + 1), u_val);
      fwd.u.at(p, k) = u_val;
      sc.b(t, x, u_val, bval);
      sc.sigma(t, x, u_val, sval);
      double dw = bundle.dW(p, k);
      x += bval * dt + sval * dw;
      check_finite(x, scenario, p, k + 1);
      w[k + 1] = w[k] + dw;
      fwd.x.at(p, k + 1) = x;
    }
    // trace at the terminal node, for exporters and feedback controls
    control.eval(grid, N, x, std::span<const double>(w.data(), N + 1), u_val);
    fwd.u.at(p, N) = u_val;
  });
  return fwd;
}

VectorPanel control_trace(const ProblemSpec& spec,
                          const ControlProcess& control, const VectorPanel& x,
                          const PathBundle& bundle) {
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths();
  VectorPanel out(P, N + 1, spec.m);
  for_each_path(P, [&](int p) {
    VectorXd u_val(spec.m);
    std::vector<double> w;
    bundle.cumulative(p, w);
    for (int k = 0; k <= N; ++k) {
      control.eval(grid, k, x.at(p, k), std::span<const double>(w.data(), k + 1),
                   u_val);
      out.at(p, k) = u_val;
    }
  });
  return out;
}

VectorPanel perturbation_trace(const ProblemSpec& spec,
                               const ControlProcess& u,
                               const ForwardProcesses& fwd_bar,
                               const PathBundle& bundle) {
  VectorPanel v = control_trace(spec, u, fwd_bar.x, bundle);
  const int P = v.paths(), K = v.nodes();
  for (int p = 0; p < P; ++p)
    for (int k = 0; k < K; ++k) v.at(p, k) -= fwd_bar.u.at(p, k);
  return v;
}

void simulate_fundamental(const ProblemSpec& spec, ForwardProcesses& fwd,
                          const PathBundle& bundle) {
  const Scenario& sc = spec.scenarios.at(fwd.scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths(), n = spec.n;
  const double dt = grid.dt();

  fwd.phi = MatrixPanel(P, N + 1, n, n);
  fwd.phi_inv = MatrixPanel(P, N + 1, n, n);

  for_each_path(P, [&](int p) {
    MatrixXd phi = MatrixXd::Identity(n, n), bx(n, n), sx(n, n);
    for (int k = 0; k <= N; ++k) {
      fwd.phi.at(p, k) = phi;
      Eigen::PartialPivLU<MatrixXd> lu(phi);
      double det = lu.determinant();
      if (std::abs(det) < 1e-12)
        throw DegeneracyError(
            "fundamental matrix degenerate (|det| < 1e-12) at scenario " +
            std::to_string(fwd.scenario) + ", path " + std::to_string(p) +
            ", node " + std::to_string(k));
      fwd.phi_inv.at(p, k) = lu.inverse();
      if (k == N) break;
      double t = grid.node(k);
      sc.b_x(t, fwd.x.at(p, k), fwd.u.at(p, k), bx);
      sc.sigma_x(t, fwd.x.at(p, k), fwd.u.at(p, k), sx);
      phi += bx * phi * dt + sx * phi * bundle.dW(p, k);
      if (!phi.allFinite())
        throw SimulationError(fwd.scenario, p, k + 1,
                              "non-finite fundamental matrix");
    }
  });
}

VectorPanel simulate_first_variation(const ProblemSpec& spec,
                                     const ForwardProcesses& fwd_bar,
                                     const VectorPanel& v,
                                     const PathBundle& bundle) {
  const Scenario& sc = spec.scenarios.at(fwd_bar.scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths(), n = spec.n;
  const double dt = grid.dt();

  VectorPanel y1(P, N + 1, n);
  for_each_path(P, [&](int p) {
    VectorXd y = VectorXd::Zero(n);
    MatrixXd bx(n, n), bu(n, spec.m), sx(n, n), su(n, spec.m);
    for (int k = 0; k < N; ++k) {
      double t = grid.node(k);
      auto xk = fwd_bar.x.at(p, k);
      auto uk = fwd_bar.u.at(p, k);
      auto vk = v.at(p, k);
      sc.b_x(t, xk, uk, bx);
      sc.b_u(t, xk, uk, bu);
      sc.sigma_x(t, xk, uk, sx);
      sc.sigma_u(t, xk, uk, su);
      y += (bx * y + bu * vk) * dt + (sx * y + su * vk) * bundle.dW(p, k);
      check_finite(y, fwd_bar.scenario, p, k + 1);
      y1.at(p, k + 1) = y;
    }
  });
  return y1;
}

VectorPanel y1_via_representation(const ProblemSpec& spec,
                                  const ForwardProcesses& fwd_bar,
                                  const VectorPanel& v,
                                  const PathBundle& bundle) {
  if (fwd_bar.phi.empty())
    throw PreconditionError("y1_via_representation: fundamental matrix panel missing");
  const Scenario& sc = spec.scenarios.at(fwd_bar.scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths(), n = spec.n;
  const double dt = grid.dt();

  VectorPanel y1(P, N + 1, n);
  for_each_path(P, [&](int p) {
    VectorXd acc = VectorXd::Zero(n);  // Lebesgue + Ito accumulators combined
    MatrixXd bu(n, spec.m), sx(n, n), su(n, spec.m);
    for (int k = 0; k < N; ++k) {
      double t = grid.node(k);
      auto xk = fwd_bar.x.at(p, k);
      auto uk = fwd_bar.u.at(p, k);
      auto vk = v.at(p, k);
      sc.b_u(t, xk, uk, bu);
      sc.sigma_x(t, xk, uk, sx);
      sc.sigma_u(t, xk, uk, su);
      acc += fwd_bar.phi_inv.at(p, k) *
             ((bu - sx * su) * vk * dt + su * vk * bundle.dW(p, k));
      y1.at(p, k + 1) = fwd_bar.phi.at(p, k + 1) * acc;
    }
  });
  return y1;
}

VectorPanel simulate_second_variation(const ProblemSpec& spec,
                                      const ForwardProcesses& fwd_bar,
                                      const VectorPanel& v,
                                      const VectorPanel& y1,
                                      const PathBundle& bundle) {
  const Scenario& sc = spec.scenarios.at(fwd_bar.scenario);
  const TimeGrid& grid = bundle.grid();
  const int N = grid.steps, P = bundle.n_paths(), n = spec.n;
  const double dt = grid.dt();

  VectorPanel y2(P, N + 1, n);
  for_each_path(P, [&](int p) {
    VectorXd y = VectorXd::Zero(n), drift(n), diff(n);
    MatrixXd bx(n, n), sx(n, n);
    std::vector<MatrixXd> bxx, bxu, buu, sxx, sxu, suu;
    for (int k = 0; k < N; ++k) {
      double t = grid.node(k);
      auto xk = fwd_bar.x.at(p, k);
      auto uk = fwd_bar.u.at(p, k);
      auto vk = v.at(p, k);
      auto y1k = y1.at(p, k);
      sc.b_x(t, xk, uk, bx);
      sc.sigma_x(t, xk, uk, sx);
      sc.b_xx(t, xk, uk, bxx);
      sc.b_xu(t, xk, uk, bxu);
      sc.b_uu(t, xk, uk, buu);
      sc.sigma_xx(t, xk, uk, sxx);
      sc.sigma_xu(t, xk, uk, sxu);
      sc.sigma_uu(t, xk, uk, suu);
      drift = bx * y;
      diff = sx * y;
      for (int i = 0; i < n; ++i) {
        drift[i] += y1k.dot(bxx[i] * y1k) + 2.0 * vk.dot(bxu[i] * y1k) +
                    vk.dot(buu[i] * vk);
        diff[i] += y1k.dot(sxx[i] * y1k) + 2.0 * vk.dot(sxu[i] * y1k) +
                   vk.dot(suu[i] * vk);
      }
      y += drift * dt + diff * bundle.dW(p, k);
      check_finite(y, fwd_bar.scenario, p, k + 1);
      y2.at(p, k + 1) = y;
    }
  });
  return y2;
}

double supnorm2(const VectorPanel& panel) {
  double acc = 0.0;
  for (int p = 0; p < panel.paths(); ++p) {
    double peak = 0.0;
    for (int k = 0; k < panel.nodes(); ++k)
      peak = std::max(peak, panel.at(p, k).squaredNorm());
    acc += peak;
  }
  return std::sqrt(acc / panel.paths());
}

double loglog_slope(const std::vector<double>& x,
                    const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] <= 0.0) continue;
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  if (cnt < 2) return std::numeric_limits<double>::quiet_NaN();
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

RemainderReport remainder_orders(const ProblemSpec& spec,
                                 const ControlProcess& ubar,
                                 const ControlProcess& u, int scenario,
                                 const PathBundle& bundle,
                                 const std::vector<double>& eps_list) {
  if (eps_list.size() < 3)
    throw PreconditionError("remainder_orders: need at least 3 epsilon values");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (eps_list[i] <= 0.0 || eps_list[i] >= 1.0)
      throw PreconditionError("remainder_orders: eps must lie in (0,1)");
    if (i > 0 && eps_list[i] >= eps_list[i - 1])
      throw PreconditionError("remainder_orders: eps_list must decrease");
  }

  ForwardProcesses fwd_bar = simulate_forward(spec, ubar, scenario, bundle);
  VectorPanel v = perturbation_trace(spec, u, fwd_bar, bundle);
  VectorPanel y1 = simulate_first_variation(spec, fwd_bar, v, bundle);
  VectorPanel y2 = simulate_second_variation(spec, fwd_bar, v, y1, bundle);

  const int P = bundle.n_paths(), K = bundle.grid().steps + 1, n = spec.n;
  RemainderReport rep;
  rep.eps = eps_list;
  for (double eps : eps_list) {
    ControlProcess u_eps = ControlProcess::blend(ubar, u, eps);
    ForwardProcesses fwd_eps = simulate_forward(spec, u_eps, scenario, bundle);
    VectorPanel d0(P, K, n), d1(P, K, n), d2(P, K, n);
    for (int p = 0; p < P; ++p)
      for (int k = 0; k < K; ++k) {
        VectorXd dx = fwd_eps.x.at(p, k) - fwd_bar.x.at(p, k);
        d0.at(p, k) = dx;
        d1.at(p, k) = dx - eps * y1.at(p, k);
        d2.at(p, k) = dx - eps * y1.at(p, k) - 0.5 * eps * eps * y2.at(p, k);
      }
    rep.norms.push_back({supnorm2(d0), supnorm2(d1), supnorm2(d2)});
  }

  for (int j = 0; j < 3; ++j) {
    std::vector<double> ys;
    bool nonzero = false;
    for (const auto& row : rep.norms) {
      ys.push_back(row[j]);
      if (row[j] > 1e-14) nonzero = true;
    }
    rep.vanishes[j] = !nonzero;
    rep.slopes[j] = nonzero ? loglog_slope(rep.eps, ys)
                            : std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

}  // namespace rsonc
