#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wgeo {

/// Batch evaluation policy. Rows are split into fixed-size chunks whose
/// partial results are reduced in chunk order, so results depend on
/// chunk_rows but never on the worker count.
struct ExecutionPolicy {
  std::size_t workers = 1;
  std::size_t chunk_rows = 256;
};

/// Calls fn(begin, end) for every chunk of [0, n) and returns the partials in chunk order.
template <class Fn>
auto map_chunks(std::size_t n, const ExecutionPolicy& policy, Fn&& fn) {
  using Partial = decltype(fn(std::size_t{}, std::size_t{}));
  const std::size_t chunk = std::max<std::size_t>(1, policy.chunk_rows);
  const std::size_t count = (n + chunk - 1) / chunk;
  std::vector<Partial> partials(count);
  auto run = [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    partials[c] = fn(begin, std::min(n, begin + chunk));
  };
  const std::size_t workers = std::min(std::max<std::size_t>(1, policy.workers), count);
  if (workers <= 1) {
    for (std::size_t c = 0; c < count; ++c) run(c);
    return partials;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c; (c = next.fetch_add(1)) < count;) {
        try {
          run(c);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
  return partials;
}

}  // namespace wgeo
