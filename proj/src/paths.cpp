#include "rsonc/paths.hpp"

#include <cmath>
#include <stdexcept>

#include "rsonc/parallel.hpp"
#include "rsonc/rng.hpp"

namespace rsonc {

PathBundle PathBundle::generate(std::uint64_t seed, int n_paths,
                                const TimeGrid& grid) {
  if (n_paths < 1) throw ConfigError("generate_paths: n_paths must be >= 1");
  PathBundle b;
  b.seed_ = seed;
  b.n_paths_ = n_paths;
  b.grid_ = grid;
  b.dw_.resize(static_cast<std::size_t>(n_paths) * grid.steps);
  const double sqrt_dt = std::sqrt(grid.dt());
  const int steps = grid.steps;
  parallel_for_chunks(n_paths, [&](int lo, int hi) {
    for (int p = lo; p < hi; ++p) {
      double* row = b.dw_.data() + static_cast<std::size_t>(p) * steps;
      for (int k = 0; k < steps; ++k)
        row[k] = sqrt_dt * rng::standard_normal(seed, p, k);
    }
  });
  return b;
}

PathBundle PathBundle::coarsen(int factor) const {
  if (factor < 1 || grid_.steps % factor != 0)
    throw ConfigError("coarsen: factor must divide the step count");
  PathBundle c;
  c.seed_ = seed_;
  c.n_paths_ = n_paths_;
  c.grid_ = TimeGrid{grid_.horizon, grid_.steps / factor};
  c.dw_.resize(static_cast<std::size_t>(n_paths_) * c.grid_.steps);
  for (int p = 0; p < n_paths_; ++p) {
    const double* fine = dw_.data() + static_cast<std::size_t>(p) * grid_.steps;
    double* coarse = c.dw_.data() + static_cast<std::size_t>(p) * c.grid_.steps;
    for (int k = 0; k < c.grid_.steps; ++k) {
      double s = 0.0;
      for (int j = 0; j < factor; ++j) s += fine[k * factor + j];
      coarse[k] = s;
    }
  }
  return c;
}

void PathBundle::cumulative(int p, std::vector<double>& w) const {
  w.resize(grid_.steps + 1);
  w[0] = 0.0;
  const double* row = dw_.data() + static_cast<std::size_t>(p) * grid_.steps;
  for (int k = 0; k < grid_.steps; ++k) w[k + 1] = w[k] + row[k];
}

}  // namespace rsonc
