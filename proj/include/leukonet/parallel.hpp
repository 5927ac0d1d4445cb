#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace leukonet {

namespace detail {
inline int& thread_count_ref() {
  static int n = 1;
  return n;
}
}  // namespace detail

inline int num_threads() { return detail::thread_count_ref(); }

/// n <= 0 means "hardware concurrency". Default is 1: single-threaded runs
/// are the bitwise-deterministic reference mode.
inline void set_num_threads(int n) {
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  detail::thread_count_ref() = std::max(1, n);
}

/// Runs body(begin, end) over a contiguous partition of [0, n).
/// Partition depends only on (n, num_threads), never on scheduling, so any
/// kernel whose chunks write disjoint outputs stays deterministic.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const int threads = num_threads();
  if (threads <= 1 || n < 2) {
    body(std::size_t{0}, n);
    return;
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  const std::size_t chunk = (n + k - 1) / k;
  std::vector<std::thread> pool;
  pool.reserve(k - 1);
  for (std::size_t t = 1; t < k; ++t) {
    const std::size_t b = std::min(n, t * chunk);
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(0, std::min(n, chunk));
  for (auto& th : pool) th.join();
}

}  // namespace leukonet
