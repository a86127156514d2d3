#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace a2dmrg {

/// Runs fn(0) .. fn(n_tasks - 1) on up to `workers` threads.
///
/// Tasks are claimed from a shared counter, so the assignment of tasks to
/// threads varies between runs; callers write results into per-task slots to
/// stay deterministic. If tasks throw, the exception of the lowest-numbered
/// failing task is rethrown after all threads have joined.
template <class Fn>
void parallel_for(std::size_t n_tasks, std::size_t workers, Fn&& fn) {
  if (n_tasks == 0) return;
  const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, n_tasks);
  std::vector<std::exception_ptr> errors(n_tasks);
  if (n_threads == 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto body = [&]() {
      for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_threads - 1);
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace a2dmrg
