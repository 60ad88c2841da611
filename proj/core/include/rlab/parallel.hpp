#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rlab {

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  unsigned h = std::thread::hardware_concurrency();
  return h > 0 ? h : 1;
}

/// Runs body(i) for i in [0, count) across `threads` threads. Each index must
/// write only to its own slots; results are then independent of the schedule.
template <typename F>
void parallel_for(std::size_t count, std::size_t threads, F&& body) {
  threads = resolve_threads(threads);
  if (threads > count) threads = count > 0 ? count : 1;
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) body(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rlab
