#include "rsonc/model.hpp"

#include <cmath>
#include <sstream>

#include "rsonc/rng.hpp"

namespace rsonc {

// ---------------------------------------------------------------------------
// ControlProcess

ControlProcess ControlProcess::constant(VectorXd value) {
  ControlProcess c;
  c.kind_ = Kind::Deterministic;
  c.det_ = [v = std::move(value)](double, VectorXd& out) { out = v; };
  return c;
}

ControlProcess ControlProcess::deterministic(
    std::function<void(double, VectorXd&)> fn) {
  ControlProcess c;
  c.kind_ = Kind::Deterministic;
  c.det_ = std::move(fn);
  return c;
}

ControlProcess ControlProcess::feedback(
    std::function<void(double, const VectorXd&, VectorXd&)> fn) {
  ControlProcess c;
  c.kind_ = Kind::Feedback;
  c.fb_ = std::move(fn);
  return c;
}

ControlProcess ControlProcess::spike(ControlProcess base, VectorXd value,
                                     double tau, double alpha, EventFn event) {
  ControlProcess c;
  c.kind_ = Kind::Spike;
  c.base_ = std::make_shared<const ControlProcess>(std::move(base));
  c.spike_value_ = std::move(value);
  c.tau_ = tau;
  c.alpha_ = alpha;
  c.event_ = std::move(event);
  return c;
}

ControlProcess ControlProcess::blend(ControlProcess a, ControlProcess b,
                                     double eps) {
  ControlProcess c;
  c.kind_ = Kind::Blend;
  c.blend_a_ = std::make_shared<const ControlProcess>(std::move(a));
  c.blend_b_ = std::make_shared<const ControlProcess>(std::move(b));
  c.blend_eps_ = eps;
  return c;
}

void ControlProcess::eval(const TimeGrid& grid, int k, const VectorXd& x,
                          std::span<const double> w_history,
                          VectorXd& out) const {
  double t = grid.node(k);
  switch (kind_) {
    case Kind::Deterministic:
      det_(t, out);
      return;
    case Kind::Feedback:
      fb_(t, x, out);
      return;
    case Kind::Spike: {
      if (t >= tau_ && t < tau_ + alpha_) {
        bool fires = true;
        if (event_) {
          // The event reads only the Brownian history up to the window
          // start (adaptedness surrogate).
          int i = static_cast<int>(std::floor(tau_ / grid.dt() + 1e-9));
          int avail = static_cast<int>(w_history.size());
          int upto = std::min(avail, i + 1);
          fires = event_(w_history.subspan(0, upto));
        }
        if (fires) {
          out = spike_value_;
          return;
        }
      }
      base_->eval(grid, k, x, w_history, out);
      return;
    }
    case Kind::Blend: {
      VectorXd ua(out.size()), ub(out.size());
      blend_a_->eval(grid, k, x, w_history, ua);
      blend_b_->eval(grid, k, x, w_history, ub);
      out = ua + blend_eps_ * (ub - ua);
      return;
    }
  }
}

bool ControlProcess::path_dependent() const {
  switch (kind_) {
    case Kind::Deterministic:
      return false;
    case Kind::Feedback:
      return false;  // state enters, but not the raw path history
    case Kind::Spike:
      return static_cast<bool>(event_) || base_->path_dependent();
    case Kind::Blend:
      return blend_a_->path_dependent() || blend_b_->path_dependent();
  }
  return false;
}

// ---------------------------------------------------------------------------
// validate

namespace {

template <typename Fn>
bool check_shape(const std::string& label, Fn&& probe, long rows, long cols,
                 std::vector<std::string>& out) {
  try {
    auto [r, c] = probe();
    if (r != rows || c != cols) {
      std::ostringstream os;
      os << "derivative shape mismatch: " << label << " is " << r << "x" << c
         << ", expected " << rows << "x" << cols;
      out.push_back(os.str());
      return false;
    }
  } catch (const std::exception& e) {
    out.push_back(label + " evaluation failed: " + e.what());
    return false;
  }
  return true;
}

}  // namespace

ValidationReport validate(const ProblemSpec& spec) {
  ValidationReport rep;
  auto& v = rep.violations;

  if (!(spec.grid.horizon > 0.0)) v.push_back("grid horizon must be positive");
  if (spec.grid.steps < 1) v.push_back("grid steps must be >= 1");
  if (spec.n < 1 || spec.m < 1) v.push_back("state/control dimensions must be >= 1");
  if (spec.x0.size() != spec.n) v.push_back("x0 dimension mismatch");

  if (spec.box.lower.size() != spec.m || spec.box.upper.size() != spec.m) {
    v.push_back("control box dimension mismatch");
  } else {
    for (int i = 0; i < spec.m; ++i)
      if (spec.box.lower[i] > spec.box.upper[i]) {
        v.push_back("control box empty: lower > upper in component " +
                    std::to_string(i));
        break;
      }
  }

  if (spec.measures.scenario_count != static_cast<int>(spec.scenarios.size()))
    v.push_back("measure polytope scenario count (" +
                std::to_string(spec.measures.scenario_count) +
                ") differs from scenario list length (" +
                std::to_string(spec.scenarios.size()) + ")");
  if (spec.measures.vertices.empty())
    v.push_back("measure polytope needs at least one vertex");
  for (std::size_t i = 0; i < spec.measures.vertices.size(); ++i) {
    const VectorXd& vert = spec.measures.vertices[i];
    if (vert.size() != spec.measures.scenario_count) {
      v.push_back("vertex " + std::to_string(i) + " dimension mismatch");
      continue;
    }
    double mass = vert.sum();
    if (std::abs(mass - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "vertex mass " << mass << " != 1 (vertex " << i << ")";
      v.push_back(os.str());
    }
    if ((vert.array() < -1e-15).any())
      v.push_back("vertex " + std::to_string(i) + " has negative mass");
  }

  if (spec.x0.size() != spec.n || spec.box.lower.size() != spec.m ||
      spec.scenarios.empty())
    return rep;  // probing below needs consistent dimensions

  // Probe each scenario's callbacks at two points and check output shapes.
  const double t_probe = 0.5 * spec.grid.horizon;
  VectorXd x = spec.x0, u = spec.box.midpoint();
  VectorXd vec_out;
  MatrixXd mat_out;
  std::vector<MatrixXd> tens_out;
  for (std::size_t s = 0; s < spec.scenarios.size(); ++s) {
    const Scenario& sc = spec.scenarios[s];
    const std::string tag = "scenario " + std::to_string(s) + " ";
    const long n = spec.n, m = spec.m;

    auto vec_probe = [&](const VecFn& fn, long want) {
      return [&, want]() {
        vec_out.resize(0);
        fn(t_probe, x, u, vec_out);
        return std::pair<long, long>(vec_out.size(), 1);
      };
    };
    auto mat_probe = [&](const MatFn& fn) {
      return [&]() {
        mat_out.resize(0, 0);
        fn(t_probe, x, u, mat_out);
        return std::pair<long, long>(mat_out.rows(), mat_out.cols());
      };
    };

    if (!sc.b || !sc.sigma || !sc.f || !sc.h) {
      v.push_back(tag + "missing coefficient callback");
      continue;
    }
    check_shape(tag + "b", vec_probe(sc.b, n), n, 1, v);
    check_shape(tag + "sigma", vec_probe(sc.sigma, n), n, 1, v);
    if (sc.b_x) check_shape(tag + "b_x", mat_probe(sc.b_x), n, n, v);
    if (sc.b_u) check_shape(tag + "b_u", mat_probe(sc.b_u), n, m, v);
    if (sc.sigma_x) check_shape(tag + "sigma_x", mat_probe(sc.sigma_x), n, n, v);
    if (sc.sigma_u) check_shape(tag + "sigma_u", mat_probe(sc.sigma_u), n, m, v);
    if (sc.f_x) check_shape(tag + "f_x", vec_probe(sc.f_x, n), n, 1, v);
    if (sc.f_u) check_shape(tag + "f_u", vec_probe(sc.f_u, m), m, 1, v);
    if (sc.f_xx) check_shape(tag + "f_xx", mat_probe(sc.f_xx), n, n, v);
    if (sc.f_xu) check_shape(tag + "f_xu", mat_probe(sc.f_xu), m, n, v);
    if (sc.f_uu) check_shape(tag + "f_uu", mat_probe(sc.f_uu), m, m, v);
    if (sc.h_x)
      check_shape(
          tag + "h_x",
          [&]() {
            vec_out.resize(0);
            sc.h_x(x, vec_out);
            return std::pair<long, long>(vec_out.size(), 1);
          },
          n, 1, v);
    if (sc.h_xx)
      check_shape(
          tag + "h_xx",
          [&]() {
            mat_out.resize(0, 0);
            sc.h_xx(x, mat_out);
            return std::pair<long, long>(mat_out.rows(), mat_out.cols());
          },
          n, n, v);

    auto tens_check = [&](const TensFn& fn, const std::string& lbl, long rr,
                          long cc) {
      if (!fn) return;
      tens_out.clear();
      try {
        fn(t_probe, x, u, tens_out);
      } catch (const std::exception& e) {
        v.push_back(tag + lbl + " evaluation failed: " + e.what());
        return;
      }
      if (static_cast<long>(tens_out.size()) != n) {
        v.push_back("derivative shape mismatch: " + tag + lbl + " has " +
                    std::to_string(tens_out.size()) + " blocks, expected " +
                    std::to_string(n));
        return;
      }
      for (long i = 0; i < n; ++i)
        if (tens_out[i].rows() != rr || tens_out[i].cols() != cc) {
          v.push_back("derivative shape mismatch: " + tag + lbl + "[" +
                      std::to_string(i) + "]");
          return;
        }
    };
    tens_check(sc.b_xx, "b_xx", n, n);
    tens_check(sc.b_xu, "b_xu", m, n);
    tens_check(sc.b_uu, "b_uu", m, m);
    tens_check(sc.sigma_xx, "sigma_xx", n, n);
    tens_check(sc.sigma_xu, "sigma_xu", m, n);
    tens_check(sc.sigma_uu, "sigma_uu", m, m);

    if (spec.adjoint_mode == AdjointMode::Analytic &&
        (!sc.p1 || !sc.q1 || !sc.p2 || !sc.q2))
      v.push_back(tag + "analytic adjoint mode requires p1,q1,p2,q2 callbacks");
    if (spec.malliavin_mode == MalliavinMode::ClosedForm && !sc.nabla_s)
      v.push_back(tag + "closed-form malliavin mode requires nabla_s");
  }

  return rep;
}

// ---------------------------------------------------------------------------
// finite differences

namespace {

double fd_step(double coord) {
  return std::max(1e-5, 1e-7 * std::abs(coord));
}

// Deterministic probe point stream for fd_consistency.
struct ProbeStream {
  std::uint64_t s = 0xC0FFEE;
  double unit() { return rng::to_unit(s = rng::splitmix64(s)); }
};

}  // namespace

ConsistencyReport fd_consistency(const ProblemSpec& spec, int scenario,
                                 int n_probe, double tol) {
  const Scenario& sc = spec.scenarios.at(scenario);
  if (sc.fd_fallback_f || sc.fd_fallback_h)
    throw PreconditionError(
        "fd_consistency: scenario uses finite-difference fallback "
        "derivatives; nothing to compare");
  if (!sc.b_x || !sc.b_u || !sc.sigma_x || !sc.sigma_u || !sc.f_x || !sc.f_u ||
      !sc.h_x)
    throw PreconditionError("fd_consistency: missing analytic derivatives");

  const int n = spec.n, m = spec.m;
  ConsistencyReport rep;
  rep.tol = tol;
  rep.entries = {{"b_x"}, {"b_u"}, {"sigma_x"}, {"sigma_u"},
                 {"f_x"}, {"f_u"}, {"h_x"}};

  ProbeStream ps;
  VectorXd x(n), u(m), fp(n), fm(n), gvec;
  MatrixXd amat;
  for (int probe = 0; probe < n_probe; ++probe) {
    double t = ps.unit() * spec.grid.horizon;
    for (int i = 0; i < n; ++i) x[i] = spec.x0[i] + 2.0 * (ps.unit() - 0.5);
    for (int j = 0; j < m; ++j)
      u[j] = spec.box.lower[j] +
             ps.unit() * (spec.box.upper[j] - spec.box.lower[j]);

    auto record = [&](int slot, double analytic, double numeric) {
      double denom = std::max(1.0, std::abs(analytic));
      double err = std::abs(analytic - numeric) / denom;
      if (err > rep.entries[slot].max_rel_error) {
        rep.entries[slot].max_rel_error = err;
        rep.entries[slot].worst_t = t;
        rep.entries[slot].worst_x = x;
        rep.entries[slot].worst_u = u;
      }
    };

    // Vector-valued coefficients: columnwise central differences.
    auto diff_vec_x = [&](const VecFn& fn, const MatFn& dfn, int slot) {
      dfn(t, x, u, amat);
      VectorXd xs = x;
      for (int j = 0; j < n; ++j) {
        double h = fd_step(x[j]);
        xs[j] = x[j] + h;
        fn(t, xs, u, fp);
        xs[j] = x[j] - h;
        fn(t, xs, u, fm);
        xs[j] = x[j];
        for (int i = 0; i < n; ++i)
          record(slot, amat(i, j), (fp[i] - fm[i]) / (2 * h));
      }
    };
    auto diff_vec_u = [&](const VecFn& fn, const MatFn& dfn, int slot) {
      dfn(t, x, u, amat);
      VectorXd us = u;
      for (int j = 0; j < m; ++j) {
        double h = fd_step(u[j]);
        us[j] = u[j] + h;
        fn(t, x, us, fp);
        us[j] = u[j] - h;
        fn(t, x, us, fm);
        us[j] = u[j];
        for (int i = 0; i < n; ++i)
          record(slot, amat(i, j), (fp[i] - fm[i]) / (2 * h));
      }
    };
    diff_vec_x(sc.b, sc.b_x, 0);
    diff_vec_u(sc.b, sc.b_u, 1);
    diff_vec_x(sc.sigma, sc.sigma_x, 2);
    diff_vec_u(sc.sigma, sc.sigma_u, 3);

    sc.f_x(t, x, u, gvec);
    {
      VectorXd xs = x;
      for (int j = 0; j < n; ++j) {
        double h = fd_step(x[j]);
        xs[j] = x[j] + h;
        double up = sc.f(t, xs, u);
        xs[j] = x[j] - h;
        double dn = sc.f(t, xs, u);
        xs[j] = x[j];
        record(4, gvec[j], (up - dn) / (2 * h));
      }
    }
    sc.f_u(t, x, u, gvec);
    {
      VectorXd us = u;
      for (int j = 0; j < m; ++j) {
        double h = fd_step(u[j]);
        us[j] = u[j] + h;
        double up = sc.f(t, x, us);
        us[j] = u[j] - h;
        double dn = sc.f(t, x, us);
        us[j] = u[j];
        record(5, gvec[j], (up - dn) / (2 * h));
      }
    }
    sc.h_x(x, gvec);
    {
      VectorXd xs = x;
      for (int j = 0; j < n; ++j) {
        double h = fd_step(x[j]);
        xs[j] = x[j] + h;
        double up = sc.h(xs);
        xs[j] = x[j] - h;
        double dn = sc.h(xs);
        xs[j] = x[j];
        record(6, gvec[j], (up - dn) / (2 * h));
      }
    }
  }

  rep.pass = true;
  for (const auto& e : rep.entries)
    if (e.max_rel_error > tol) rep.pass = false;
  return rep;
}

void apply_fd_fallback(Scenario& scen, int n, int m, bool running_cost,
                       bool terminal_cost) {
  if (running_cost) {
    scen.fd_fallback_f = true;
    ScalFn f = scen.f;
    scen.f_x = [f, n](double t, const VectorXd& x, const VectorXd& u,
                      VectorXd& out) {
      out.resize(n);
      VectorXd xs = x;
      for (int j = 0; j < n; ++j) {
        double h = fd_step(x[j]);
        xs[j] = x[j] + h;
        double up = f(t, xs, u);
        xs[j] = x[j] - h;
        double dn = f(t, xs, u);
        xs[j] = x[j];
        out[j] = (up - dn) / (2 * h);
      }
    };
    scen.f_u = [f, m](double t, const VectorXd& x, const VectorXd& u,
                      VectorXd& out) {
      out.resize(m);
      VectorXd us = u;
      for (int j = 0; j < m; ++j) {
        double h = fd_step(u[j]);
        us[j] = u[j] + h;
        double up = f(t, x, us);
        us[j] = u[j] - h;
        double dn = f(t, x, us);
        us[j] = u[j];
        out[j] = (up - dn) / (2 * h);
      }
    };
    scen.f_xx = [f, n](double t, const VectorXd& x, const VectorXd& u,
                       MatrixXd& out) {
      out.resize(n, n);
      VectorXd xs = x;
      double f0 = f(t, x, u);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          double hi = fd_step(x[i]), hj = fd_step(x[j]);
          double val;
          if (i == j) {
            xs[i] = x[i] + hi;
            double up = f(t, xs, u);
            xs[i] = x[i] - hi;
            double dn = f(t, xs, u);
            xs[i] = x[i];
            val = (up - 2 * f0 + dn) / (hi * hi);
          } else {
            xs[i] = x[i] + hi; xs[j] = x[j] + hj;
            double pp = f(t, xs, u);
            xs[j] = x[j] - hj;
            double pm = f(t, xs, u);
            xs[i] = x[i] - hi; xs[j] = x[j] + hj;
            double mp = f(t, xs, u);
            xs[j] = x[j] - hj;
            double mm = f(t, xs, u);
            xs[i] = x[i]; xs[j] = x[j];
            val = (pp - pm - mp + mm) / (4 * hi * hj);
          }
          out(i, j) = out(j, i) = val;
        }
    };
    scen.f_xu = [f, n, m](double t, const VectorXd& x, const VectorXd& u,
                          MatrixXd& out) {
      out.resize(m, n);
      VectorXd xs = x, us = u;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double hu = fd_step(u[i]), hx = fd_step(x[j]);
          us[i] = u[i] + hu; xs[j] = x[j] + hx;
          double pp = f(t, xs, us);
          xs[j] = x[j] - hx;
          double pm = f(t, xs, us);
          us[i] = u[i] - hu; xs[j] = x[j] + hx;
          double mp = f(t, xs, us);
          xs[j] = x[j] - hx;
          double mm = f(t, xs, us);
          us[i] = u[i]; xs[j] = x[j];
          out(i, j) = (pp - pm - mp + mm) / (4 * hu * hx);
        }
    };
    scen.f_uu = [f, m](double t, const VectorXd& x, const VectorXd& u,
                       MatrixXd& out) {
      out.resize(m, m);
      VectorXd us = u;
      double f0 = f(t, x, u);
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
          double hi = fd_step(u[i]), hj = fd_step(u[j]);
          double val;
          if (i == j) {
            us[i] = u[i] + hi;
            double up = f(t, x, us);
            us[i] = u[i] - hi;
            double dn = f(t, x, us);
            us[i] = u[i];
            val = (up - 2 * f0 + dn) / (hi * hi);
          } else {
            us[i] = u[i] + hi; us[j] = u[j] + hj;
            double pp = f(t, x, us);
            us[j] = u[j] - hj;
            double pm = f(t, x, us);
            us[i] = u[i] - hi; us[j] = u[j] + hj;
            double mp = f(t, x, us);
            us[j] = u[j] - hj;
            double mm = f(t, x, us);
            us[i] = u[i]; us[j] = u[j];
            val = (pp - pm - mp + mm) / (4 * hi * hj);
          }
          out(i, j) = out(j, i) = val;
        }
    };
  }
  if (terminal_cost) {
    scen.fd_fallback_h = true;
    TermScalFn h = scen.h;
    scen.h_x = [h, n](const VectorXd& x, VectorXd& out) {
      out.resize(n);
      VectorXd xs = x;
      for (int j = 0; j < n; ++j) {
        double s = fd_step(x[j]);
        xs[j] = x[j] + s;
        double up = h(xs);
        xs[j] = x[j] - s;
        double dn = h(xs);
        xs[j] = x[j];
        out[j] = (up - dn) / (2 * s);
      }
    };
    scen.h_xx = [h, n](const VectorXd& x, MatrixXd& out) {
      out.resize(n, n);
      VectorXd xs = x;
      double h0 = h(x);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          double hi = fd_step(x[i]), hj = fd_step(x[j]);
          double val;
          if (i == j) {
            xs[i] = x[i] + hi;
            double up = h(xs);
            xs[i] = x[i] - hi;
            double dn = h(xs);
            xs[i] = x[i];
            val = (up - 2 * h0 + dn) / (hi * hi);
          } else {
            xs[i] = x[i] + hi; xs[j] = x[j] + hj;
            double pp = h(xs);
            xs[j] = x[j] - hj;
            double pm = h(xs);
            xs[i] = x[i] - hi; xs[j] = x[j] + hj;
            double mp = h(xs);
            xs[j] = x[j] - hj;
            double mm = h(xs);
            xs[i] = x[i]; xs[j] = x[j];
            val = (pp - pm - mp + mm) / (4 * hi * hj);
          }
          out(i, j) = out(j, i) = val;
        }
    };
  }
}

}  // namespace rsonc
