#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ndspec {

// Worker count used by ParallelFor. Defaults to NDSPEC_THREADS or, failing
// that, the hardware concurrency. Results never depend on this value: work is
// partitioned statically and no cross-item reduction happens inside workers.
inline std::atomic<int>& ThreadCountStorage() {
  static std::atomic<int> count = [] {
    if (const char* env = std::getenv("NDSPEC_THREADS")) {
      int t = std::atoi(env);
      if (t >= 1) return t;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return count;
}

inline int GetThreadCount() { return ThreadCountStorage().load(); }
inline void SetThreadCount(int t) { ThreadCountStorage().store(std::max(1, t)); }

// Runs fn(i) for i in [0, count) across workers with a static block
// partition. fn must write only to item-i-owned locations.
inline void ParallelFor(std::size_t count,
                        const std::function<void(std::size_t)>& fn) {
  const int workers =
      static_cast<int>(std::min<std::size_t>(GetThreadCount(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mu;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::size_t lo = chunk * static_cast<std::size_t>(w);
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) {
          if (failed.load(std::memory_order_relaxed)) return;
          fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Range flavor: fn(lo, hi) over a static chunking of [0, count).
inline void ParallelForRange(
    std::size_t count,
    const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(GetThreadCount()), count);
  if (workers <= 1) {
    if (count > 0) fn(0, count);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  ParallelFor(workers, [&](std::size_t w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo < hi) fn(lo, hi);
  });
}

}  // namespace ndspec
