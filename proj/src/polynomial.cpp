#include "rsonc/polynomial.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace rsonc {

namespace {

double ipow(double base, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

}  // namespace

Polynomial::Polynomial(int n, int m, std::vector<PolyTerm> terms)
    : n_(n), m_(m), terms_(std::move(terms)) {
  for (auto& t : terms_) {
    t.x_exp.resize(n_, 0);
    t.u_exp.resize(m_, 0);
  }
}

Polynomial Polynomial::constant(int n, int m, double c) {
  Polynomial p(n, m);
  if (c != 0.0) p.add_term(c);
  return p;
}

Polynomial& Polynomial::add_term(double coef, std::vector<int> x_exp,
                                 std::vector<int> u_exp, int t_exp) {
  PolyTerm t;
  t.coef = coef;
  t.t_exp = t_exp;
  t.x_exp = std::move(x_exp);
  t.u_exp = std::move(u_exp);
  t.x_exp.resize(n_, 0);
  t.u_exp.resize(m_, 0);
  terms_.push_back(std::move(t));
  return *this;
}

double Polynomial::eval(double t, const VectorXd& x, const VectorXd& u) const {
  double acc = 0.0;
  for (const PolyTerm& term : terms_) {
    double v = term.coef;
    if (term.t_exp) v *= ipow(t, term.t_exp);
    for (int i = 0; i < n_; ++i)
      if (term.x_exp[i]) v *= ipow(x[i], term.x_exp[i]);
    for (int j = 0; j < m_; ++j)
      if (term.u_exp[j]) v *= ipow(u[j], term.u_exp[j]);
    acc += v;
  }
  return acc;
}

Polynomial Polynomial::diff_x(int i) const {
  Polynomial out(n_, m_);
  for (const PolyTerm& term : terms_) {
    if (term.x_exp[i] == 0) continue;
    PolyTerm d = term;
    d.coef *= term.x_exp[i];
    d.x_exp[i] -= 1;
    out.terms_.push_back(std::move(d));
  }
  return out;
}

Polynomial Polynomial::diff_u(int j) const {
  Polynomial out(n_, m_);
  for (const PolyTerm& term : terms_) {
    if (term.u_exp[j] == 0) continue;
    PolyTerm d = term;
    d.coef *= term.u_exp[j];
    d.u_exp[j] -= 1;
    out.terms_.push_back(std::move(d));
  }
  return out;
}

namespace {

using PolyVec = std::vector<Polynomial>;
using PolyMat = std::vector<PolyVec>;  // [row][col]

VecFn vec_fn(std::shared_ptr<PolyVec> comps) {
  return [comps](double t, const VectorXd& x, const VectorXd& u,
                 VectorXd& out) {
    out.resize(comps->size());
    for (std::size_t i = 0; i < comps->size(); ++i)
      out[i] = (*comps)[i].eval(t, x, u);
  };
}

MatFn mat_fn(std::shared_ptr<PolyMat> rows) {
  return [rows](double t, const VectorXd& x, const VectorXd& u,
                MatrixXd& out) {
    out.resize(rows->size(), rows->empty() ? 0 : (*rows)[0].size());
    for (std::size_t i = 0; i < rows->size(); ++i)
      for (std::size_t j = 0; j < (*rows)[i].size(); ++j)
        out(i, j) = (*rows)[i][j].eval(t, x, u);
  };
}

TensFn tens_fn(std::shared_ptr<std::vector<PolyMat>> blocks) {
  return [blocks](double t, const VectorXd& x, const VectorXd& u,
                  std::vector<MatrixXd>& out) {
    out.resize(blocks->size());
    for (std::size_t c = 0; c < blocks->size(); ++c) {
      const PolyMat& blk = (*blocks)[c];
      out[c].resize(blk.size(), blk.empty() ? 0 : blk[0].size());
      for (std::size_t i = 0; i < blk.size(); ++i)
        for (std::size_t j = 0; j < blk[i].size(); ++j)
          out[c](i, j) = blk[i][j].eval(t, x, u);
    }
  };
}

}  // namespace

Scenario make_polynomial_scenario(const std::string& name, int n, int m,
                                  std::vector<Polynomial> drift,
                                  std::vector<Polynomial> diffusion,
                                  Polynomial running_cost,
                                  Polynomial terminal_cost) {
  Scenario sc;
  sc.name = name;

  auto jac_x = [n](const PolyVec& v) {
    PolyMat mrows;
    for (const auto& comp : v) {
      PolyVec row;
      for (int j = 0; j < n; ++j) row.push_back(comp.diff_x(j));
      mrows.push_back(std::move(row));
    }
    return mrows;
  };
  auto jac_u = [m](const PolyVec& v) {
    PolyMat mrows;
    for (const auto& comp : v) {
      PolyVec row;
      for (int j = 0; j < m; ++j) row.push_back(comp.diff_u(j));
      mrows.push_back(std::move(row));
    }
    return mrows;
  };
  // Per-component Hessian blocks matching the Eq.-level contractions:
  // xx block n x n, xu block m x n (d2/du_i dx_j), uu block m x m.
  auto hess_blocks = [n, m](const PolyVec& v, char a, char b) {
    std::vector<PolyMat> blocks;
    for (const auto& comp : v) {
      int rows = (a == 'x') ? n : m;
      int cols = (b == 'x') ? n : m;
      PolyMat blk(rows, PolyVec());
      for (int i = 0; i < rows; ++i) {
        Polynomial di = (a == 'x') ? comp.diff_x(i) : comp.diff_u(i);
        for (int j = 0; j < cols; ++j)
          blk[i].push_back((b == 'x') ? di.diff_x(j) : di.diff_u(j));
      }
      blocks.push_back(std::move(blk));
    }
    return blocks;
  };

  auto b_vec = std::make_shared<PolyVec>(std::move(drift));
  auto s_vec = std::make_shared<PolyVec>(std::move(diffusion));
  sc.b = vec_fn(b_vec);
  sc.sigma = vec_fn(s_vec);
  sc.b_x = mat_fn(std::make_shared<PolyMat>(jac_x(*b_vec)));
  sc.b_u = mat_fn(std::make_shared<PolyMat>(jac_u(*b_vec)));
  sc.sigma_x = mat_fn(std::make_shared<PolyMat>(jac_x(*s_vec)));
  sc.sigma_u = mat_fn(std::make_shared<PolyMat>(jac_u(*s_vec)));
  sc.b_xx = tens_fn(std::make_shared<std::vector<PolyMat>>(hess_blocks(*b_vec, 'x', 'x')));
  sc.b_xu = tens_fn(std::make_shared<std::vector<PolyMat>>(hess_blocks(*b_vec, 'u', 'x')));
  sc.b_uu = tens_fn(std::make_shared<std::vector<PolyMat>>(hess_blocks(*b_vec, 'u', 'u')));
  sc.sigma_xx = tens_fn(std::make_shared<std::vector<PolyMat>>(hess_blocks(*s_vec, 'x', 'x')));
  sc.sigma_xu = tens_fn(std::make_shared<std::vector<PolyMat>>(hess_blocks(*s_vec, 'u', 'x')));
  sc.sigma_uu = tens_fn(std::make_shared<std::vector<PolyMat>>(hess_blocks(*s_vec, 'u', 'u')));

  auto f_poly = std::make_shared<Polynomial>(std::move(running_cost));
  sc.f = [f_poly](double t, const VectorXd& x, const VectorXd& u) {
    return f_poly->eval(t, x, u);
  };
  {
    PolyVec fx, fu;
    for (int j = 0; j < n; ++j) fx.push_back(f_poly->diff_x(j));
    for (int j = 0; j < m; ++j) fu.push_back(f_poly->diff_u(j));
    sc.f_x = vec_fn(std::make_shared<PolyVec>(fx));
    sc.f_u = vec_fn(std::make_shared<PolyVec>(fu));
    PolyMat fxx(n, PolyVec()), fxu(m, PolyVec()), fuu(m, PolyVec());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) fxx[i].push_back(fx[i].diff_x(j));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) fxu[i].push_back(fu[i].diff_x(j));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) fuu[i].push_back(fu[i].diff_u(j));
    sc.f_xx = mat_fn(std::make_shared<PolyMat>(std::move(fxx)));
    sc.f_xu = mat_fn(std::make_shared<PolyMat>(std::move(fxu)));
    sc.f_uu = mat_fn(std::make_shared<PolyMat>(std::move(fuu)));
  }

  auto h_poly = std::make_shared<Polynomial>(std::move(terminal_cost));
  VectorXd u_dummy = VectorXd::Zero(m);
  sc.h = [h_poly, u_dummy](const VectorXd& x) {
    return h_poly->eval(0.0, x, u_dummy);
  };
  {
    auto hx = std::make_shared<PolyVec>();
    for (int j = 0; j < n; ++j) hx->push_back(h_poly->diff_x(j));
    sc.h_x = [hx, u_dummy](const VectorXd& x, VectorXd& out) {
      out.resize(hx->size());
      for (std::size_t i = 0; i < hx->size(); ++i)
        out[i] = (*hx)[i].eval(0.0, x, u_dummy);
    };
    auto hxx = std::make_shared<PolyMat>(n, PolyVec());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) (*hxx)[i].push_back((*hx)[i].diff_x(j));
    sc.h_xx = [hxx, u_dummy](const VectorXd& x, MatrixXd& out) {
      out.resize(hxx->size(), hxx->empty() ? 0 : (*hxx)[0].size());
      for (std::size_t i = 0; i < hxx->size(); ++i)
        for (std::size_t j = 0; j < (*hxx)[i].size(); ++j)
          out(i, j) = (*hxx)[i][j].eval(0.0, x, u_dummy);
    };
  }

  return sc;
}

}  // namespace rsonc
