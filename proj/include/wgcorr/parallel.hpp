#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wgcorr {

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once and results must be written to per-index slots, so
/// the outcome does not depend on scheduling. The first exception is rethrown.
template <class Body> void parallel_for(std::size_t n, int threads, Body &&body) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure)
            failure = std::current_exception();
        }
      }
    });
  for (auto &t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace wgcorr
