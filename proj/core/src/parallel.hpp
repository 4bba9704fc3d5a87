#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace nld::par {

inline int thread_count() {
  if (const char* env = std::getenv("NLD_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? int(hc) : 1;
}

/// Static-chunked parallel loop; results must be written to disjoint slots so
/// that the outcome is independent of the schedule.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  int nt = thread_count();
  if (nt <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  nt = int(std::min<std::size_t>(nt, n));
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t i = t; i < n; i += std::size_t(nt)) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace nld::par
