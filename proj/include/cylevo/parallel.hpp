#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace cylevo {

/// Runs fn(i) for i in [0, n). With threads <= 1 the loop is serial.
/// Work items must be independent; callers get determinism by writing to
/// index-addressed slots.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (n == 0) return;
  threads = std::min<std::size_t>(threads == 0 ? 1 : threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline unsigned hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

}  // namespace cylevo
