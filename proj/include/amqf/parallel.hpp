#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace amqf {

/// Splits [0, n) into `workers` contiguous chunks and runs fn(begin, end,
/// worker) on each, joining before returning. The first exception thrown by
/// any worker is rethrown on the calling thread.
template <class Fn>
void parallel_for(size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n <= 1) {
    fn(size_t{0}, n, 0u);
    return;
  }
  workers = static_cast<unsigned>(std::min<size_t>(workers, n));
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      const size_t begin = n * w / workers;
      const size_t end = n * (w + 1) / workers;
      pool.emplace_back([&, begin, end, w] {
        try {
          fn(begin, end, w);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Runs fn(item, worker) for each item index in [0, n), handing items out
/// dynamically from a shared counter.
template <class Fn>
void parallel_dynamic(size_t n, unsigned workers, Fn&& fn) {
  std::atomic<size_t> next{0};
  parallel_for(std::max<size_t>(1, std::min<size_t>(n, std::max(1u, workers))), workers,
               [&](size_t, size_t, unsigned worker) {
                 for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i, worker);
               });
}

}  // namespace amqf
