#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace topiclab {

// Runs fn(worker, i) for i in [0, n) over contiguous index blocks. Work must
// be keyed by i (not by worker or arrival order) so results are independent
// of the thread count.
inline void parallel_for(int n, int threads, const std::function<void(int, int)>& fn) {
  if (n <= 0) return;
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(0, i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  const int chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([=, &fn] {
      for (int i = lo; i < hi; ++i) fn(w, i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace topiclab
