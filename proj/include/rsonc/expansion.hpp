#pragma once

#include <vector>

#include "rsonc/conditions.hpp"
#include "rsonc/model.hpp"
#include "rsonc/paths.hpp"

namespace rsonc {

/// Cost-difference expansion DJ(eps) = J(u^eps; lambda) - J(ubar; lambda)
/// at every Lambda^ubar vertex, on one shared bundle (common random
/// numbers).
///
/// Two coefficient estimates are reported per vertex:
///  - (a1_fit, a2_fit): ordinary least squares of DJ on [eps, eps^2];
///  - (a1_pred, a2_pred): the expansion's own coefficients,
///      a1 = -int E int <dH/du, v> dt dlambda,
///      a2 = -int E int [<S y1, v> + (1/2)<(H_uu + sigma_u^T P2 sigma_u) v,
///            v>] dt dlambda.
/// The remainder r(eps) = DJ - a1_pred*eps - a2_pred*eps^2 and its log-log
/// slope over the small-eps half are reported. All stderrs are pathwise
/// (paired across estimators thanks to the shared bundle).
struct ExpansionReport {
  std::vector<double> eps;
  struct VertexFit {
    int vertex = 0;
    std::vector<double> dj, dj_se;
    double a1_fit = 0.0, a2_fit = 0.0;
    double a1_fit_se = 0.0, a2_fit_se = 0.0;    // MC stderr through the OLS map
    double a1_pred = 0.0, a2_pred = 0.0;
    double a1_pred_se = 0.0, a2_pred_se = 0.0;
    double a2_gap_se = 0.0;  // paired stderr of a2_fit - a2_pred
    std::vector<double> remainder;
    double remainder_slope = 0.0;  // log-log slope on the small-eps half
  };
  std::vector<VertexFit> fits;
  std::vector<int> argmax_vertices;
};

ExpansionReport expansion_scan(const ProblemSpec& spec,
                               const ControlProcess& ubar,
                               const ControlProcess& u,
                               const std::vector<double>& eps_list,
                               const PathBundle& bundle);

/// Default eps ladder 2^-2 .. 2^-7.
std::vector<double> default_eps_list();

}  // namespace rsonc
