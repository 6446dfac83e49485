#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace softals {

struct ParallelOptions {
  unsigned threads = 1;       // 0 = hardware concurrency
  bool deterministic = true;  // fixed reduction order, independent of `threads`

  unsigned resolved_threads() const noexcept {
    if (threads != 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
  }
};

/// Splits [0, n) into `blocks` contiguous ranges and runs fn(begin, end, block)
/// on each, one thread per block. Block boundaries depend only on n and blocks.
inline void parallel_blocks(std::size_t n, unsigned blocks,
                            const std::function<void(std::size_t, std::size_t, unsigned)>& fn) {
  blocks = static_cast<unsigned>(std::clamp<std::size_t>(blocks, 1, std::max<std::size_t>(n, 1)));
  if (blocks == 1) {
    fn(0, n, 0);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(blocks - 1);
  auto bounds = [&](unsigned b) { return n * b / blocks; };
  for (unsigned b = 1; b < blocks; ++b) {
    workers.emplace_back([&, b] { fn(bounds(b), bounds(b + 1), b); });
  }
  fn(0, bounds(1), 0);
  for (auto& w : workers) w.join();
}

}  // namespace softals
