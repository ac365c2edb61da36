#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace rsonc {

/// Worker count: ROBUST_SONC_THREADS caps it, hardware concurrency is the
/// default. Results never depend on this value; it only sets throughput.
inline int worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("ROBUST_SONC_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

/// Runs body(lo, hi) over a partition of [0, n). Each chunk must write only
/// to its own slots; reductions happen after the join, in index order.
inline void parallel_for_chunks(int n,
                                const std::function<void(int, int)>& body) {
  int workers = std::min(worker_count(), std::max(1, n));
  if (workers <= 1 || n < 256) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace rsonc
