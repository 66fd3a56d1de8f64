// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_DICTIONARY_HPP
#define PATCHPROP_DICTIONARY_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "patchprop/container.hpp"
#include "patchprop/features.hpp"
#include "patchprop/grid.hpp"

namespace patchprop {

struct TreeParams {
  int branching = 5;       // b >= 2
  int layers = 4;          // t >= 0
  int iterations = 10;     // Lloyd iterations per split
  std::uint64_t seed = 1;
};

// K = (b^(t+1) - 1) / (b - 1). Throws kConfig for b < 2, t < 0 or overflow.
std::size_t tree_node_count(int branching, int layers);

/// Hierarchical k-means dictionary.
///
/// Nodes are numbered 1..K breadth first: node 1 is the root (layer 0) and
/// the children of node q are (q-1)b + 2 ... (q-1)b + b + 1. Every node is a
/// dictionary element. Nodes that received no training vectors are empty:
/// their centre is zero and they never win a comparison.
class KMeansTree {
 public:
  KMeansTree() = default;

  // Builds the tree from training features. `extractor` fixes M and the
  // feature kind recorded in the dictionary; `channels` is the source image
  // channel count. Throws kConfig on an empty feature set or bad params.
  static KMeansTree build(const FeatureSet& features, const TreeParams& params,
                          const FeatureExtractor& extractor, int channels);

  std::size_t node_count() const noexcept { return empty_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  int branching() const noexcept { return branching_; }
  int layers() const noexcept { return layers_; }
  int iterations() const noexcept { return iterations_; }
  int patch_size() const noexcept { return patch_size_; }
  int channels() const noexcept { return channels_; }
  ExtractorKind extractor_kind() const noexcept { return kind_; }
  std::uint64_t seed() const noexcept { return seed_; }
  DictionaryShape shape() const noexcept { return {patch_size_, node_count()}; }

  bool is_empty(std::size_t node_id) const { return empty_.at(node_id - 1) != 0; }
  std::span<const double> centre(std::size_t node_id) const {
    return {centres_.data() + (node_id - 1) * dimension_, dimension_};
  }
  // Layer of a node, root = 0.
  int layer_of(std::size_t node_id) const;
  // First child id, or 0 for nodes in the last layer.
  std::size_t first_child(std::size_t node_id) const;

  // Descends from the root through the nearest non-empty child until a leaf
  // or a node without non-empty children, returning the node with the
  // smallest distance seen on the way. Ties go to the lower node id.
  std::size_t assign(std::span<const double> feature) const;

  std::unique_ptr<FeatureExtractor> make_feature_extractor() const {
    return make_extractor(kind_, patch_size_);
  }

  // Container round trip ("CNTR" + "EMPT" sections).
  Container to_container() const;
  static KMeansTree from_container(const Container& container);

  friend bool operator==(const KMeansTree&, const KMeansTree&) = default;

 private:
  int branching_ = 0;
  int layers_ = 0;
  int iterations_ = 0;
  int patch_size_ = 0;
  int channels_ = 0;
  ExtractorKind kind_ = ExtractorKind::kIntensityPatch;
  std::uint64_t seed_ = 0;
  std::size_t dimension_ = 0;
  std::vector<double> centres_;      // node_count * dimension
  std::vector<std::uint8_t> empty_;  // node_count
};

/// Per-pixel node ids: 0 on the boundary band of width s, 1..K elsewhere.
class AssignmentImage {
 public:
  AssignmentImage() = default;
  AssignmentImage(int width, int height, std::vector<std::uint32_t> ids)
      : width_(width), height_(height), ids_(std::move(ids)) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::uint32_t at(int x, int y) const {
    return ids_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const std::uint32_t> ids() const noexcept { return ids_; }
  std::size_t nonzero_count() const noexcept;

  friend bool operator==(const AssignmentImage&, const AssignmentImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> ids_;
};

// Assigns every non-boundary pixel to the tree. Throws kConfig if the image
// is smaller than the patch or its channel layout does not fit the tree.
AssignmentImage assign_image(const PixelGrid& grid, const KMeansTree& tree);

}  // namespace patchprop

#endif  // PATCHPROP_DICTIONARY_HPP
