#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace onebit {

/// Worker count used by parallel_for. Defaults to 1; the CLI sets it from --jobs.
inline std::atomic<unsigned>& job_count() {
  static std::atomic<unsigned> jobs{1};
  return jobs;
}

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks, so any body whose
/// result depends only on i yields schedule-independent output.
template <class F>
void parallel_for(std::size_t n, F&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, job_count().load()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace onebit
