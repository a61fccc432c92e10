#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace pvet {

// Static contiguous partition of [0, n) over `threads` workers. Work items
// must write to disjoint locations; the partition is a pure function of
// (n, threads), so any such kernel is deterministic for a fixed thread count.
// Kernels in this codebase additionally write each output location from
// exactly one item, which makes them bitwise thread-count independent.
inline void parallel_chunks(int64_t n, int threads,
                            const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  if (threads < 1) threads = 1;
  const int workers = int(std::min<int64_t>(threads, n));
  if (workers == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int64_t begin = w * chunk;
    const int64_t end = std::min<int64_t>(begin + chunk, n);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  for (auto& t : pool) t.join();
}

// As above, but each worker also knows its slot index (for per-thread
// scratch buffers).
inline void parallel_chunks_indexed(
    int64_t n, int threads, const std::function<void(int, int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  if (threads < 1) threads = 1;
  const int workers = int(std::min<int64_t>(threads, n));
  if (workers == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int64_t begin = w * chunk;
    const int64_t end = std::min<int64_t>(begin + chunk, n);
    if (begin >= end) break;
    pool.emplace_back(fn, w, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace pvet
