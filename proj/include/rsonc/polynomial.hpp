#pragma once

#include <string>
#include <vector>

#include "rsonc/model.hpp"
#include "rsonc/types.hpp"

namespace rsonc {

/// One monomial c * t^a * prod x_i^{e_i} * prod u_j^{g_j}.
struct PolyTerm {
  double coef = 0.0;
  int t_exp = 0;
  std::vector<int> x_exp;  // padded to n with zeros
  std::vector<int> u_exp;  // padded to m with zeros
};

/// Polynomial in (t, x, u) with exact symbolic differentiation; the named
/// coefficient catalog behind declarative problem configs.
class Polynomial {
 public:
  Polynomial(int n, int m) : n_(n), m_(m) {}
  Polynomial(int n, int m, std::vector<PolyTerm> terms);

  static Polynomial zero(int n, int m) { return Polynomial(n, m); }
  static Polynomial constant(int n, int m, double c);

  Polynomial& add_term(double coef, std::vector<int> x_exp = {},
                       std::vector<int> u_exp = {}, int t_exp = 0);

  double eval(double t, const VectorXd& x, const VectorXd& u) const;

  Polynomial diff_x(int i) const;
  Polynomial diff_u(int j) const;

  int n() const { return n_; }
  int m() const { return m_; }
  const std::vector<PolyTerm>& terms() const { return terms_; }

 private:
  int n_, m_;
  std::vector<PolyTerm> terms_;
};

/// Builds a scenario with analytic derivative bundles from polynomial
/// coefficients (dynamics must be polynomial; that keeps Eq.-level second
/// derivatives exact).
Scenario make_polynomial_scenario(const std::string& name, int n, int m,
                                  std::vector<Polynomial> drift,
                                  std::vector<Polynomial> diffusion,
                                  Polynomial running_cost,
                                  Polynomial terminal_cost);

}  // namespace rsonc
