#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fbd::detail {

/// Strided static partition of [0, n) over `workers` threads; rethrows the first worker exception.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Contiguous row bands, one per worker.
template <class Fn>
void parallel_bands(std::size_t rows, int workers, Fn fn) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(rows, 1))));
  if (workers == 1) {
    fn(std::size_t{0}, rows);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    const std::size_t lo = rows * w / workers, hi = rows * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        fn(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fbd::detail
