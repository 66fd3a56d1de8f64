// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_ENGINE_HPP
#define PATCHPROP_ENGINE_HPP

#include <functional>
#include <memory>
#include <string>

#include "patchprop/dictionary.hpp"
#include "patchprop/features.hpp"
#include "patchprop/graph.hpp"
#include "patchprop/propagation.hpp"
#include "patchprop/transfer.hpp"

namespace patchprop {

struct EngineConfig {
  int patch_size = 9;
  TreeParams tree;
  ExtractorKind extractor = ExtractorKind::kIntensityPatch;
  std::size_t subsample = 20000;  // training patches for the tree
  int classes = 2;

  // Throws kConfig for values the build cannot use on a width x height image.
  void validate(int width, int height, int channels) const;
};

struct BuildTimings {
  double features_ms = 0;
  double tree_ms = 0;
  double assign_ms = 0;
  double graph_ms = 0;      // B construction
  double normalize_ms = 0;  // T1, T2
  double total_ms() const { return features_ms + tree_ms + assign_ms + graph_ms + normalize_ms; }
};

// Stage names reported while building: "features", "tree", "assign",
// "graph", "normalize".
using BuildProgress = std::function<void(const std::string& stage)>;

/// Everything precomputed for one image: dictionary, assignment, graph and
/// transforms. Immutable once built.
class Engine {
 public:
  static Engine build(PixelGrid image, const EngineConfig& config,
                      const BuildProgress& progress = {});

  const PixelGrid& image() const noexcept { return *image_; }
  const EngineConfig& config() const noexcept { return config_; }
  std::shared_ptr<const KMeansTree> tree() const noexcept { return tree_; }
  const AssignmentImage& assignment() const noexcept { return assignment_; }
  const BiadjacencyGraph& graph() const noexcept { return *transforms_.graph(); }
  const TransformPair& transforms() const noexcept { return transforms_; }
  const BuildTimings& timings() const noexcept { return timings_; }

  UserMarking new_marking() const { return UserMarking(image_->pixel_count(), config_.classes); }
  UpdateResult update(const UserMarking& marks, const UpdateOptions& options) const {
    return update_detailed(marks, transforms_, options);
  }
  TrainedModel export_model(const UpdateResult& result, const std::string& image_name,
                            std::size_t marked_pixels, const UpdateOptions& options) const;

 private:
  std::shared_ptr<const PixelGrid> image_;
  EngineConfig config_;
  std::shared_ptr<const KMeansTree> tree_;
  AssignmentImage assignment_;
  TransformPair transforms_;
  BuildTimings timings_;
};

}  // namespace patchprop

#endif  // PATCHPROP_ENGINE_HPP
