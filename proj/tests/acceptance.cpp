// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

#include "fixture.hpp"
#include "oracle.hpp"
#include "patchprop/bench.hpp"
#include "patchprop/engine.hpp"
#include "patchprop/io.hpp"
#include "patchprop/phantom.hpp"
#include "patchprop/strokes.hpp"
#include "patchprop/transfer.hpp"

#ifndef PATCHPROP_CLI
#error "PATCHPROP_CLI must name the command line binary"
#endif

using namespace patchprop;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-20s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

void guarded(const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(false, name, std::string("exception: ") + e.what());
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Shared by the phantom, structure and transfer checks.
struct PhantomRun {
  Phantom phantom;
  std::unique_ptr<Engine> engine;
  UserMarking marks;
  UpdateResult result;
  UpdateOptions options;
};

EngineConfig phantom_config() {
  EngineConfig cfg;
  cfg.patch_size = 9;
  cfg.tree = {5, 4, 10, 1};
  cfg.classes = 2;
  return cfg;
}

PhantomRun& phantom_run() {
  static PhantomRun run = [] {
    PhantomRun r;
    r.phantom = generate_phantom({});
    r.engine = std::make_unique<Engine>(Engine::build(r.phantom.slices[0], phantom_config()));
    r.marks = marks_from_image(r.phantom.marks, 2);
    r.options = UpdateOptions{2, true, true, 1e-6};
    r.result = r.engine->update(r.marks, r.options);
    return r;
  }();
  return run;
}

void oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20260101);
  const std::pair<int, int> trees[] = {{2, 0}, {2, 1}, {2, 2}, {3, 1}, {4, 1}, {5, 1}, {9, 1}};
  double worst = 0;
  std::size_t comparisons = 0;
  for (int c = 0; c < 50; ++c) {
    const int m = std::uniform_int_distribution<int>(0, 1)(rng) ? 5 : 3;
    const int w = std::uniform_int_distribution<int>(m, 16)(rng);
    const int h = std::uniform_int_distribution<int>(m, 16)(rng);
    const auto [b, t] = trees[std::uniform_int_distribution<std::size_t>(0, 6)(rng)];
    const int classes = std::uniform_int_distribution<int>(2, 3)(rng);
    const auto built =
        fixture::build(oracle::random_grid(w, h, 1, rng), m, b, t, c + 1, 4000);
    if (built.k() > 10) throw std::runtime_error("case exceeds K = 10");
    const auto count = std::uniform_int_distribution<std::size_t>(0, built.n() / 3)(rng);
    const auto marks = fixture::random_marks(built.n(), classes, count, rng);
    const auto marking = fixture::to_marking(marks, built.n(), classes);
    for (int steps : {1, 2})
      for (bool bin : {false, true})
        for (bool ovw : {false, true}) {
          const auto expect = oracle::update(built.assignment, m, built.k(), classes, marks,
                                             steps, bin, ovw, 1e-6);
          for (auto kernel : {ProductKernel::kStencil, ProductKernel::kSparse}) {
            const auto p =
                update(marking, built.transforms, {steps, bin, ovw, 1e-6}, kernel);
            worst = std::max(worst, oracle::max_abs_diff(fixture::values(p), expect));
            ++comparisons;
          }
        }
  }
  const double secs = seconds_since(t0);
  report(worst <= 1e-10 && secs < 30.0, "oracle-equivalence",
         fmt("max |diff| %.2e over 50 cases, %zu option/kernel runs, %.2f s", worst, comparisons,
             secs));
}

void structure_counts() {
  std::mt19937_64 rng(7);
  std::size_t shapes = 0, bad = 0;
  auto check = [&](const AssignmentImage& a, const BiadjacencyGraph& g, int m) {
    const std::size_t s = (m - 1) / 2;
    const std::size_t centres = (a.width() - 2 * s) * (a.height() - 2 * s);
    ++shapes;
    bad += a.nonzero_count() != centres || g.nnz() != centres * m * m;
  };
  for (int m : {1, 3, 5, 7, 9})
    for (auto [w, h] : {std::pair{m, m}, {m + 1, m + 4}, {17, 23}, {40, 31}, {64, 64}}) {
      const auto b = fixture::build(oracle::random_grid(w, h, 1, rng), m, 3, 2, 1, 2000);
      check(b.assignment, *b.transforms.graph(), m);
    }
  auto& run = phantom_run();
  check(run.engine->assignment(), run.engine->graph(), 9);
  report(bad == 0, "structure-counts",
         fmt("%zu shapes incl. 512x512 M=9 (nnz %zu), %zu mismatches", shapes,
             run.engine->graph().nnz(), bad));
}

void stochasticity() {
  double t_worst = 0, u_worst = 0;
  std::size_t masked = 0;
  auto check_transforms = [&](const TransformPair& t) {
    const ValueStack ones_img(t.image_pixels(), 1, 1.0);
    const ValueStack ones_dict(t.dictionary_pixels(), 1, 1.0);
    const auto t1 = apply_image_to_dict(t, ones_img);
    const auto t2 = apply_dict_to_image(t, ones_dict);
    for (std::size_t j = 0; j < t1.rows(); ++j) {
      if (t.t1_zero_rows()[j]) {
        ++masked;
        continue;
      }
      t_worst = std::max(t_worst, std::abs(t1(j, 0) - 1.0));
    }
    for (std::size_t i = 0; i < t2.rows(); ++i) t_worst = std::max(t_worst, std::abs(t2(i, 0) - 1.0));
  };
  auto check_rows = [&](const ProbabilityStack& p) {
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double sum = 0;
      for (double v : p.row(i)) sum += v;
      u_worst = std::max(u_worst, std::abs(sum - 1.0));
    }
  };
  std::mt19937_64 rng(11);
  for (int c = 0; c < 20; ++c) {
    const int m = c % 2 ? 5 : 3;
    const auto b = fixture::build(oracle::random_grid(16 + c, 16, 1, rng), m, 3, 2, c + 1, 2000);
    check_transforms(b.transforms);
    const int classes = 2 + c % 2;
    const auto marking =
        fixture::to_marking(fixture::random_marks(b.n(), classes, 15, rng), b.n(), classes);
    for (int steps : {1, 2})
      for (bool bin : {false, true})
        for (bool ovw : {false, true})
          check_rows(update(marking, b.transforms, {steps, bin, ovw, 1e-6}));
  }
  auto& run = phantom_run();
  check_transforms(run.engine->transforms());
  check_rows(run.result.probabilities);
  report(t_worst <= 1e-12 && u_worst <= 1e-9, "stochasticity",
         fmt("T rows max |sum-1| %.2e (%zu masked T1 rows skipped), update rows %.2e", t_worst,
             masked, u_worst));
}

void tree_count() {
  std::mt19937_64 rng(13);
  const auto g = oracle::random_grid(48, 48, 1, rng);
  IntensityPatchExtractor ex(3);
  const auto train = extract_training_set(g, ex, 2000, 1);
  std::size_t checked = 0, bad = 0;
  for (int b = 2; b <= 5; ++b)
    for (int t = 0; t <= 4; ++t) {
      long long power = 1;
      for (int i = 0; i <= t; ++i) power *= b;
      const auto expected = static_cast<std::size_t>((power - 1) / (b - 1));
      const auto tree = KMeansTree::build(train, {b, t, 3, 1}, ex, 1);
      ++checked;
      bad += tree.node_count() != expected || tree_node_count(b, t) != expected;
    }
  report(bad == 0, "tree-count", fmt("%zu (b, t) pairs, %zu mismatches", checked, bad));
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string("\"") + PATCHPROP_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

void transfer_round_trip() {
  auto& run = phantom_run();
  const auto model =
      run.engine->export_model(run.result, "phantom", run.marks.size(), run.options);
  const auto again = TrainedModel::deserialize(model.serialize());
  const double in_process = oracle::max_abs_diff(
      fixture::values(apply_to_image(run.phantom.slices[0], again)),
      fixture::values(run.result.probabilities));

  const auto dir = oracle::scratch_dir("acceptance");
  write_phantom(run.phantom, (dir / "ph").string());
  const auto log = dir / "cli.log";
  const std::string engine_flags = " --patch-size 9 --branching 5 --layers 4";
  int rc = run_cli("--log-level warning train --image " + (dir / "ph/image.png").string() +
                       " --marks " + (dir / "ph/marks.png").string() + " --model " +
                       (dir / "m.ppd").string() + " --out-dir " + (dir / "train").string() +
                       engine_flags,
                   log);
  if (rc == 0) {
    rc = run_cli("--log-level warning apply --model " + (dir / "m.ppd").string() + " --input " +
                     (dir / "ph/image.png").string() + " --out-dir " + (dir / "apply").string(),
                 log);
  }
  double via_files = INFINITY;
  if (rc == 0) {
    const auto a = read_npy((dir / "train/probabilities.npy").string());
    const auto b = read_npy((dir / "apply/probabilities.npy").string());
    if (a.shape == b.shape) via_files = oracle::max_abs_diff(a.values, b.values);
  }
  fs::remove_all(dir);
  report(in_process <= 1e-12 && via_files <= 1e-12, "transfer-round-trip",
         fmt("in-process max |diff| %.2e, train->apply files %.2e (cli exit %d)", in_process,
             via_files, rc));
}

void fibre_phantom() {
  auto& run = phantom_run();
  const auto& truth = run.phantom.truth.indices;
  const auto seg = segment(run.result.probabilities, run.options.epsilon);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < seg.size(); ++i) correct += seg[i] == truth[i];
  const double accuracy = static_cast<double>(correct) / seg.size();

  const int w = run.phantom.slices[0].width(), h = run.phantom.slices[0].height();
  const auto found = detect_centres(layer_of(run.result.probabilities, 1), w, h, CentreOptions{});
  std::size_t hits = 0;
  for (const auto& c : run.phantom.centres) {
    bool hit = false;
    for (const auto& d : found) hit = hit || std::hypot(d.x - c.x, d.y - c.y) <= 2.0;
    hits += hit;
  }
  const double recall = static_cast<double>(hits) / run.phantom.centres.size();
  const double marked = marked_fraction(run.phantom.marks);
  report(accuracy >= 0.90 && recall >= 0.95 && marked < 0.01, "fibre-phantom",
         fmt("%dx%d, %zu disks, marks %.2f%%, accuracy %.4f, centre recall %.3f (%zu/%zu), "
             "%zu detections",
             w, h, run.phantom.centres.size(), 100 * marked, accuracy, recall, hits,
             run.phantom.centres.size(), found.size()));
}

void realtime_budget() {
  BenchOptions opts;
  opts.sizes = {512};
  opts.patch_sizes = {9};
  opts.branchings = {5};
  opts.layer_counts = {4};
  opts.repeats = 21;
  const auto rows = run_bench(opts);
  const auto& r = rows.at(0);
  const double build = r.graph_ms + r.normalize_ms;
  report(r.update_p50_ms <= 200.0 && build <= 5000.0, "realtime-budget",
         fmt("512x512 M=9 K=%zu: update p50 %.1f ms (p90 %.1f), B + normalize %.1f ms, %u threads",
             r.nodes, r.update_p50_ms, r.update_p90_ms, build, std::thread::hardware_concurrency()));
}

}  // namespace

int main() {
  guarded("oracle-equivalence", oracle_equivalence);
  guarded("structure-counts", structure_counts);
  guarded("stochasticity", stochasticity);
  guarded("tree-count", tree_count);
  guarded("transfer-round-trip", transfer_round_trip);
  guarded("fibre-phantom", fibre_phantom);
  guarded("realtime-budget", realtime_budget);
  std::printf("%s: %d failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
