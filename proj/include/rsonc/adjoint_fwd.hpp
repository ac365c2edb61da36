#pragma once

#include "rsonc/model.hpp"
#include "rsonc/types.hpp"

namespace rsonc {

/// Backward-equation solutions along (xbar, ubar). P2/Q2 live in S^n
/// (symmetric within 1e-10 at every node); terminal conditions hold
/// pathwise exactly in both modes.
struct AdjointProcesses {
  int scenario = 0;
  AdjointMode mode = AdjointMode::Analytic;
  VectorPanel P1, Q1;  // n per node
  MatrixPanel P2, Q2;  // n x n per node
  bool ridge_used = false;
};

}  // namespace rsonc
