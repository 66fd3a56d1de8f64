// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_PARALLEL_HPP
#define PATCHPROP_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace patchprop {

// Worker count used by parallel_for; 0 selects hardware_concurrency.
void set_worker_threads(unsigned count);
unsigned worker_threads();

/// Runs body(begin_chunk, end_chunk) over disjoint chunks of [begin, end).
/// Ranges shorter than `min_chunk` per worker run inline on the caller.
/// The first exception thrown by any chunk is rethrown after all join.
template <typename Body>
void parallel_for(std::size_t begin, std::size_t end, std::size_t min_chunk, Body&& body) {
  if (end <= begin) return;
  const std::size_t total = end - begin;
  const std::size_t workers = std::min<std::size_t>(
      worker_threads(), std::max<std::size_t>(1, total / std::max<std::size_t>(1, min_chunk)));
  if (workers <= 1) {
    body(begin, end);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  threads.reserve(workers - 1);
  auto chunk_bounds = [&](std::size_t w) {
    return std::pair{begin + total * w / workers, begin + total * (w + 1) / workers};
  };
  for (std::size_t w = 1; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        auto [lo, hi] = chunk_bounds(w);
        body(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  try {
    auto [lo, hi] = chunk_bounds(0);
    body(lo, hi);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace patchprop

#endif  // PATCHPROP_PARALLEL_HPP
