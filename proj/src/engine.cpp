// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/engine.hpp"

#include <chrono>

#include "patchprop/log.hpp"

namespace patchprop {

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

void EngineConfig::validate(int width, int height, int channels) const {
  require_odd_patch_size(patch_size);
  if (patch_size >= std::min(width, height)) {
    fail(ErrorCode::kConfig, "patch size must be smaller than both image sides");
  }
  tree_node_count(tree.branching, tree.layers);
  if (tree.iterations < 1) fail(ErrorCode::kConfig, "iterations must be at least 1");
  if (classes < 2 || classes > kMaxClasses) fail(ErrorCode::kConfig, "classes must be 2..255");
  if (subsample == 0) fail(ErrorCode::kConfig, "subsample must be positive");
  make_extractor(extractor, patch_size)->feature_length(channels);
}

Engine Engine::build(PixelGrid image, const EngineConfig& config, const BuildProgress& progress) {
  config.validate(image.width(), image.height(), image.channels());
  Engine e;
  e.config_ = config;
  e.image_ = std::make_shared<const PixelGrid>(std::move(image));
  const PixelGrid& grid = *e.image_;
  auto report = [&progress](const char* stage) {
    if (progress) progress(stage);
  };

  const std::size_t k = tree_node_count(config.tree.branching, config.tree.layers);
  if (config.subsample < k) {
    log_warning("subsample of " + std::to_string(config.subsample) +
                " patches is below the dictionary size K=" + std::to_string(k));
  }

  auto t0 = std::chrono::steady_clock::now();
  report("features");
  const auto extractor = make_extractor(config.extractor, config.patch_size);
  const FeatureSet training =
      extract_training_set(grid, *extractor, config.subsample, config.tree.seed);
  e.timings_.features_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  report("tree");
  e.tree_ = std::make_shared<const KMeansTree>(
      KMeansTree::build(training, config.tree, *extractor, grid.channels()));
  e.timings_.tree_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  report("assign");
  e.assignment_ = assign_image(grid, *e.tree_);
  e.timings_.assign_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  report("graph");
  auto graph = std::make_shared<const BiadjacencyGraph>(
      build_biadjacency(e.assignment_, config.patch_size, e.tree_->node_count()));
  e.timings_.graph_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  report("normalize");
  e.transforms_ = normalize(std::move(graph));
  e.timings_.normalize_ms = ms_since(t0);
  log(LogLevel::kDebug, "built " + std::to_string(grid.width()) + "x" +
                            std::to_string(grid.height()) + " K=" + std::to_string(k) +
                            " nnz=" + std::to_string(e.graph().nnz()) + " in " +
                            std::to_string(e.timings_.total_ms()) + " ms");
  return e;
}

TrainedModel Engine::export_model(const UpdateResult& result, const std::string& image_name,
                                  std::size_t marked_pixels, const UpdateOptions& options) const {
  Provenance p;
  p.training_image = image_name;
  p.image_width = image_->width();
  p.image_height = image_->height();
  p.marked_pixels = marked_pixels;
  p.options = options;
  return make_model(tree_, result.final_labels, transforms_, std::move(p));
}

}  // namespace patchprop
