#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rsonc/types.hpp"

namespace rsonc {

/// Seeded panel of Brownian increments dW[p][k] ~ N(0, dt). Each entry is a
/// pure function of (seed, p, k): regeneration is bit-exact regardless of
/// generation order or worker count.
class PathBundle {
 public:
  PathBundle() = default;

  static PathBundle generate(std::uint64_t seed, int n_paths,
                             const TimeGrid& grid);

  /// Coarse bundle on steps/factor intervals whose increments are sums of
  /// consecutive fine increments: both grids ride the same Brownian path.
  PathBundle coarsen(int factor) const;

  std::uint64_t seed() const { return seed_; }
  int n_paths() const { return n_paths_; }
  const TimeGrid& grid() const { return grid_; }

  double dW(int p, int k) const {
    return dw_[static_cast<std::size_t>(p) * grid_.steps + k];
  }

  /// Fills w[k] = W(t_k) for one path (w[0] = 0, size steps+1).
  void cumulative(int p, std::vector<double>& w) const;

  const std::vector<double>& raw() const { return dw_; }

 private:
  std::uint64_t seed_ = 0;
  int n_paths_ = 0;
  TimeGrid grid_;
  std::vector<double> dw_;
};

}  // namespace rsonc
