#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace kfc {

/// Worker count honoring KFC_THREADS (0 or unset = hardware concurrency).
inline std::size_t thread_count() {
  std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const char* env = std::getenv("KFC_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  try {
    long v = std::stol(env);
    if (v <= 0) return hw;
    return static_cast<std::size_t>(v);
  } catch (...) {
    return hw;
  }
}

/// Runs fn(i) for every i in [0, count). Tasks are claimed dynamically, so fn
/// must write only to slots owned by i; callers merge in index order.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t max_workers = 0) {
  std::size_t workers = max_workers == 0 ? thread_count() : max_workers;
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto body = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace kfc
