// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_BENCH_HPP
#define PATCHPROP_BENCH_HPP

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "patchprop/propagation.hpp"

namespace patchprop {

struct BenchOptions {
  std::vector<int> sizes{512};         // square disk phantoms
  std::vector<int> patch_sizes{9};
  std::vector<int> branchings{5};
  std::vector<int> layer_counts{4};
  int repeats = 21;                    // timed updates per configuration
  std::size_t subsample = 20000;
  std::uint64_t seed = 1;
  UpdateOptions update;
};

struct BenchRow {
  int size = 0;
  int patch_size = 0;
  int branching = 0;
  int layers = 0;
  std::size_t nodes = 0;
  std::size_t nnz = 0;
  double tree_ms = 0;
  double graph_ms = 0;      // B construction
  double normalize_ms = 0;
  double update_p50_ms = 0;
  double update_p90_ms = 0;
  double update_p99_ms = 0;
};

// Nearest-rank percentile of unsorted samples, q in [0, 100].
double percentile(std::vector<double> samples, double q);

using BenchProgress = std::function<void(const BenchRow&)>;

// One row per (size, patch size, branching, layers) combination.
std::vector<BenchRow> run_bench(const BenchOptions& options, const BenchProgress& progress = {});

void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace patchprop

#endif  // PATCHPROP_BENCH_HPP
