#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace eigenflow {

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Dispatches fixed-size chunks over workers. Chunk boundaries depend only on
// chunk_size, so per-chunk results reduced in chunk order are bitwise
// independent of the thread count.
inline void parallel_chunks(std::int64_t n_items, std::int64_t chunk_size, int threads,
                            const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) {
  if (n_items <= 0) return;
  const std::int64_t n_chunks = (n_items + chunk_size - 1) / chunk_size;
  const int n_workers = std::min<std::int64_t>(resolve_threads(threads), n_chunks);

  if (n_workers <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c)
      fn(c, c * chunk_size, std::min(n_items, (c + 1) * chunk_size));
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= n_chunks) break;
      try {
        fn(c, c * chunk_size, std::min(n_items, (c + 1) * chunk_size));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace eigenflow
