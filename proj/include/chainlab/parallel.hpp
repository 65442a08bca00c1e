#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chainlab {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(k) for k in [0, count) on a bounded pool; indices are handed out in
// order and results must be merged by the caller in index order. The first
// exception thrown by any task is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const int w = std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(count, 1));
  if (w <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= count || error) return;
        k = next++;
      }
      try {
        fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < w; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace chainlab
