#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fvd {

inline int default_thread_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Outcome of one independent task: either a value or the failure message.
template <typename T>
struct TaskResult {
  std::optional<T> value;
  std::string error;
  bool ok() const { return value.has_value(); }
};

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results are stored
// by index, so the output does not depend on scheduling. Exceptions are
// caught per task.
template <typename T, typename F>
std::vector<TaskResult<T>> parallel_map(std::size_t n, int threads, F&& fn) {
  std::vector<TaskResult<T>> out(n);
  auto run_one = [&](std::size_t i) {
    try {
      out[i].value.emplace(fn(i));
    } catch (const std::exception& e) {
      out[i].error = e.what();
    } catch (...) {
      out[i].error = "unknown error";
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_one(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace fvd
