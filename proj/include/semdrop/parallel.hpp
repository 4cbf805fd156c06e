#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace semdrop {

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Work items are
// claimed from a shared counter; callers own any result slots, so output is
// independent of the schedule. The first exception is rethrown after all
// workers join.
inline void parallel_for(int jobs, long count, const std::function<void(long)>& fn) {
  if (count <= 0) return;
  if (jobs <= 1 || count == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long>(jobs, count));
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace semdrop
