#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace emskin {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once and workers write to disjoint slots only, so the
/// result is independent of the worker count. Reductions belong to the caller
/// and must run serially in index order to stay deterministic.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace emskin
