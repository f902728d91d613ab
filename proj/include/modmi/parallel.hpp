#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace modmi {

// Worker count from MODMI_THREADS, else hardware concurrency. Always >= 1.
std::size_t default_thread_count();

// Runs fn(begin, end) over contiguous blocks of [0, n). Blocks are disjoint,
// so any fn that only writes its own indices is deterministic regardless of
// the thread count.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n / 256 + 1));
  if (threads == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t block = (n + threads - 1) / threads;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * block;
    const std::size_t end = std::min(n, begin + block);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

}  // namespace modmi
