// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "patchprop/engine.hpp"
#include "patchprop/phantom.hpp"
#include "patchprop/strokes.hpp"

namespace patchprop {

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double rank = std::ceil(std::clamp(q, 0.0, 100.0) / 100.0 * samples.size());
  const std::size_t idx = rank < 1 ? 0 : static_cast<std::size_t>(rank) - 1;
  return samples[std::min(idx, samples.size() - 1)];
}

std::vector<BenchRow> run_bench(const BenchOptions& options, const BenchProgress& progress) {
  if (options.repeats < 1) fail(ErrorCode::kConfig, "repeats must be at least 1");
  std::vector<BenchRow> rows;
  for (int size : options.sizes) {
    PhantomParams pp;
    pp.width = size;
    pp.height = size;
    pp.seed = options.seed;
    pp.count = std::max(1, static_cast<int>(300.0 * size * size / (512.0 * 512.0)));
    pp.marked_objects = std::max(1, pp.count / 15);
    const Phantom ph = generate_phantom(pp);
    for (int m : options.patch_sizes) {
      for (int b : options.branchings) {
        for (int t : options.layer_counts) {
          EngineConfig cfg;
          cfg.patch_size = m;
          cfg.tree.branching = b;
          cfg.tree.layers = t;
          cfg.tree.seed = options.seed;
          cfg.subsample = options.subsample;
          cfg.classes = ph.classes;
          const Engine engine = Engine::build(ph.slices[0], cfg);
          const UserMarking marks = marks_from_image(ph.marks, ph.classes);

          std::vector<double> samples;
          for (int r = 0; r < options.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const UpdateResult res = engine.update(marks, options.update);
            samples.push_back(std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count());
            if (res.probabilities.rows() == 0) fail(ErrorCode::kShapeMismatch, "empty update");
          }
          BenchRow row;
          row.size = size;
          row.patch_size = m;
          row.branching = b;
          row.layers = t;
          row.nodes = engine.tree()->node_count();
          row.nnz = engine.graph().nnz();
          row.tree_ms = engine.timings().tree_ms;
          row.graph_ms = engine.timings().graph_ms;
          row.normalize_ms = engine.timings().normalize_ms;
          row.update_p50_ms = percentile(samples, 50);
          row.update_p90_ms = percentile(samples, 90);
          row.update_p99_ms = percentile(samples, 99);
          if (progress) progress(row);
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "size\tM\tb\tt\tK\tnnz\ttree_ms\tgraph_ms\tnormalize_ms\tp50_ms\tp90_ms\tp99_ms\n";
  char line[256];
  for (const BenchRow& r : rows) {
    std::snprintf(line, sizeof line,
                  "%d\t%d\t%d\t%d\t%zu\t%zu\t%.1f\t%.1f\t%.1f\t%.1f\t%.1f\t%.1f\n", r.size,
                  r.patch_size, r.branching, r.layers, r.nodes, r.nnz, r.tree_ms, r.graph_ms,
                  r.normalize_ms, r.update_p50_ms, r.update_p90_ms, r.update_p99_ms);
    out << line;
  }
}

}  // namespace patchprop
