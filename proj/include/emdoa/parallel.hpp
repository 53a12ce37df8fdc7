#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "emdoa/common.hpp"

namespace emdoa {

/// Runs fn(i) for every i in [0, count) on a small worker pool fed by an
/// atomic cursor. Work must be independent per index and write only to
/// per-index slots, so results never depend on scheduling; with a single
/// hardware thread this degrades to a plain loop. The first exception thrown
/// by any worker is rethrown after the pool drains.
inline void parallel_for(Index count, const std::function<void(Index)>& fn,
                         unsigned threads = 0) {
  require(count >= 0, "count must be nonnegative");
  if (count == 0) return;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (static_cast<Index>(threads) > count) threads = static_cast<unsigned>(count);
  if (threads <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<Index> cursor{0};
  std::exception_ptr first_error;
  std::mutex error_lock;
  auto work = [&] {
    while (true) {
      const Index i = cursor.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> guard(error_lock);
        if (!first_error) first_error = std::current_exception();
        cursor.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work);
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace emdoa
