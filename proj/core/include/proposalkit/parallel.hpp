#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace proposalkit {

/// Resolves a requested worker count. 0 falls back to the PROPOSALKIT_THREADS
/// environment variable and then to std::thread::hardware_concurrency().
int effective_threads(int requested = 0);

/// Runs fn(begin, end) over contiguous chunks of [0, n). Each index is
/// processed by exactly one worker, so writes to per-index slots are
/// race-free and results do not depend on the worker count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace proposalkit
