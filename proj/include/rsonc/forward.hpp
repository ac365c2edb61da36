#pragma once

#include <array>
#include <vector>

#include "rsonc/model.hpp"
#include "rsonc/paths.hpp"
#include "rsonc/types.hpp"

namespace rsonc {

/// Per-scenario forward panels along one control: the Euler-Maruyama state,
/// the control trace, and (once computed) the fundamental matrix and the
/// first/second variational processes.
struct ForwardProcesses {
  int scenario = 0;
  VectorPanel x;        // n per node
  VectorPanel u;        // m per node (control trace)
  MatrixPanel phi;      // n x n
  MatrixPanel phi_inv;  // n x n
  VectorPanel y1, y2;   // n per node
};

/// Euler-Maruyama integration of the scenario state under `control`:
/// x_{k+1} = x_k + b dt + sigma dW. Non-finite states abort with a
/// SimulationError carrying (scenario, path, step).
ForwardProcesses simulate_forward(const ProblemSpec& spec,
                                  const ControlProcess& control, int scenario,
                                  const PathBundle& bundle);

/// Control trace along an existing state panel (used to evaluate a
/// perturbing control on the reference trajectory; open-loop controls do
/// not read the state, so the panel only matters for feedback kinds).
VectorPanel control_trace(const ProblemSpec& spec,
                          const ControlProcess& control, const VectorPanel& x,
                          const PathBundle& bundle);

/// v = u - ubar evaluated along the reference trajectory.
VectorPanel perturbation_trace(const ProblemSpec& spec,
                               const ControlProcess& u,
                               const ForwardProcesses& fwd_bar,
                               const PathBundle& bundle);

/// Fundamental matrix dPhi = b_x Phi dt + sigma_x Phi dW, Phi(0) = I, with
/// per-node direct inverses; coefficients frozen along (fwd.x, fwd.u).
/// |det Phi| < 1e-12 at any node raises DegeneracyError.
void simulate_fundamental(const ProblemSpec& spec, ForwardProcesses& fwd,
                          const PathBundle& bundle);

/// First variational process (linearized state) for perturbation trace v.
VectorPanel simulate_first_variation(const ProblemSpec& spec,
                                     const ForwardProcesses& fwd_bar,
                                     const VectorPanel& v,
                                     const PathBundle& bundle);

/// y1 by the fundamental-matrix representation
/// y1(t) = Phi(t) [ int Phi^-1 (b_u - sigma_x sigma_u) v ds
///                  + int Phi^-1 sigma_u v dW ],
/// an independent cross-check of simulate_first_variation on shared noise.
VectorPanel y1_via_representation(const ProblemSpec& spec,
                                  const ForwardProcesses& fwd_bar,
                                  const VectorPanel& v,
                                  const PathBundle& bundle);

/// Second variational process; consumes the y1 panel computed on the same
/// bundle.
VectorPanel simulate_second_variation(const ProblemSpec& spec,
                                      const ForwardProcesses& fwd_bar,
                                      const VectorPanel& v,
                                      const VectorPanel& y1,
                                      const PathBundle& bundle);

/// sqrt( mean_p sup_k |phi_{p,k}|^2 ) — the ||.||_{inf,2} sample norm.
double supnorm2(const VectorPanel& panel);

struct RemainderReport {
  std::vector<double> eps;
  // norms[i][j]: i-th epsilon, j in {dx, dx - eps y1, dx - eps y1 - eps^2/2 y2}
  std::vector<std::array<double, 3>> norms;
  std::array<double, 3> slopes{};     // log-log regression slopes
  std::array<bool, 3> vanishes{};     // norm identically ~0, slope undefined
};

/// Measures the three remainder norms of the eps-expansion on shared noise
/// (common random numbers) and their log-log slopes; expected orders are
/// 1, 2, 3.
RemainderReport remainder_orders(const ProblemSpec& spec,
                                 const ControlProcess& ubar,
                                 const ControlProcess& u, int scenario,
                                 const PathBundle& bundle,
                                 const std::vector<double>& eps_list);

/// Least-squares slope of log(y) on log(x); ignores pairs with y <= 0.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rsonc
