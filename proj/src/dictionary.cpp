// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/dictionary.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "patchprop/parallel.hpp"

namespace patchprop {

namespace {

double squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct SplitResult {
  std::vector<double> centres;                       // k * dim
  std::vector<std::vector<std::uint32_t>> members;  // k
};

// Nearest centre among k, ties to the lowest index.
int nearest(const double* v, const std::vector<double>& centres, int k, std::size_t dim) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    const double d = squared_distance(v, centres.data() + c * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Flat k-means over `members` with farthest-point seeding and a fixed
// number of Lloyd iterations.
SplitResult kmeans_split(const FeatureSet& features, std::span<const std::uint32_t> members,
                         int k, int iterations, std::uint64_t seed) {
  const std::size_t dim = features.dimension;
  const std::size_t n = members.size();
  SplitResult out;
  out.centres.assign(static_cast<std::size_t>(k) * dim, 0.0);

  std::vector<std::size_t> seeds;
  seeds.push_back(static_cast<std::size_t>(splitmix64(seed) % n));
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  while (seeds.size() < static_cast<std::size_t>(k)) {
    const double* last = features[members[seeds.back()]].data();
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d[i] = std::min(min_d[i], squared_distance(features[members[i]].data(), last, dim));
      if (min_d[i] > far_d) {
        far_d = min_d[i];
        far = i;
      }
    }
    seeds.push_back(far);
  }
  for (int c = 0; c < k; ++c) {
    auto src = features[members[seeds[static_cast<std::size_t>(c)]]];
    std::copy(src.begin(), src.end(), out.centres.begin() + static_cast<std::ptrdiff_t>(c * dim));
  }

  std::vector<int> label(n, 0);
  std::vector<double> sums(static_cast<std::size_t>(k) * dim);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k));
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      label[i] = nearest(features[members[i]].data(), out.centres, k, dim);
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(label[i]);
      const double* v = features[members[i]].data();
      for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] += v[d];
      ++counts[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) continue;  // keep the previous centre
      for (std::size_t d = 0; d < dim; ++d) {
        out.centres[c * dim + d] = sums[c * dim + d] / static_cast<double>(counts[c]);
      }
    }
  }

  out.members.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const int c = nearest(features[members[i]].data(), out.centres, k, dim);
    out.members[static_cast<std::size_t>(c)].push_back(members[i]);
  }
  return out;
}

std::size_t first_id_of_layer(int branching, int layer) {
  // (b^l - 1) / (b - 1) + 1
  std::size_t count = 0, width = 1;
  for (int l = 0; l < layer; ++l) {
    count += width;
    width *= static_cast<std::size_t>(branching);
  }
  return count + 1;
}

}  // namespace

std::size_t tree_node_count(int branching, int layers) {
  if (branching < 2) fail(ErrorCode::kConfig, "branching factor must be at least 2");
  if (layers < 0) fail(ErrorCode::kConfig, "layer count must be non-negative");
  std::size_t total = 0, width = 1;
  constexpr std::size_t kLimit = std::numeric_limits<std::uint32_t>::max();
  for (int l = 0; l <= layers; ++l) {
    total += width;
    if (total > kLimit) fail(ErrorCode::kConfig, "dictionary too large");
    width *= static_cast<std::size_t>(branching);
  }
  return total;
}

int KMeansTree::layer_of(std::size_t node_id) const {
  if (node_id < 1 || node_id > node_count()) fail(ErrorCode::kBounds, "node id out of range");
  int layer = 0;
  std::size_t next_first = 2, width = 1;
  while (node_id >= next_first) {
    width *= static_cast<std::size_t>(branching_);
    next_first += width;
    ++layer;
  }
  return layer;
}

std::size_t KMeansTree::first_child(std::size_t node_id) const {
  if (layer_of(node_id) >= layers_) return 0;
  return (node_id - 1) * static_cast<std::size_t>(branching_) + 2;
}

KMeansTree KMeansTree::build(const FeatureSet& features, const TreeParams& params,
                             const FeatureExtractor& extractor, int channels) {
  const std::size_t k_total = tree_node_count(params.branching, params.layers);
  if (params.iterations < 1) fail(ErrorCode::kConfig, "k-means needs at least one iteration");
  if (features.size() == 0) fail(ErrorCode::kConfig, "no training features");
  if (features.dimension != extractor.feature_length(channels)) {
    fail(ErrorCode::kConfig, "feature length does not match the extractor");
  }
  if (features.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kConfig, "too many training features");
  }

  KMeansTree tree;
  tree.branching_ = params.branching;
  tree.layers_ = params.layers;
  tree.iterations_ = params.iterations;
  tree.patch_size_ = extractor.patch_size();
  tree.channels_ = channels;
  tree.kind_ = extractor.kind();
  tree.seed_ = params.seed;
  tree.dimension_ = features.dimension;
  const std::size_t dim = features.dimension;
  tree.centres_.assign(k_total * dim, 0.0);
  tree.empty_.assign(k_total, 1);

  // Root: mean of all training vectors.
  std::vector<std::vector<std::uint32_t>> layer_members(1);
  layer_members[0].resize(features.size());
  std::iota(layer_members[0].begin(), layer_members[0].end(), 0u);
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto v = features[i];
    for (std::size_t d = 0; d < dim; ++d) tree.centres_[d] += v[d];
  }
  for (std::size_t d = 0; d < dim; ++d) {
    tree.centres_[d] /= static_cast<double>(features.size());
  }
  tree.empty_[0] = 0;

  const auto b = static_cast<std::size_t>(params.branching);
  for (int layer = 0; layer < params.layers; ++layer) {
    const std::size_t first = first_id_of_layer(params.branching, layer);
    const std::size_t width = layer_members.size();
    std::vector<std::vector<std::uint32_t>> next(width * b);
    parallel_for(0, width, 1, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        const std::size_t node = first + q;
        const auto& members = layer_members[q];
        if (tree.empty_[node - 1] || members.size() < b) continue;
        SplitResult split = kmeans_split(features, members, params.branching,
                                         params.iterations, params.seed ^ splitmix64(node));
        const std::size_t child0 = (node - 1) * b + 2;
        for (std::size_t c = 0; c < b; ++c) {
          if (split.members[c].empty()) continue;
          const std::size_t child = child0 + c;
          std::copy_n(split.centres.begin() + static_cast<std::ptrdiff_t>(c * dim), dim,
                      tree.centres_.begin() + static_cast<std::ptrdiff_t>((child - 1) * dim));
          tree.empty_[child - 1] = 0;
          next[q * b + c] = std::move(split.members[c]);
        }
      }
    });
    layer_members = std::move(next);
  }
  return tree;
}

std::size_t KMeansTree::assign(std::span<const double> feature) const {
  const std::size_t dim = dimension_;
  const auto b = static_cast<std::size_t>(branching_);
  std::size_t best = 1;
  double best_d = squared_distance(feature.data(), centres_.data(), dim);
  std::size_t current = 1;
  for (int layer = 0; layer < layers_; ++layer) {
    const std::size_t child0 = (current - 1) * b + 2;
    std::size_t chosen = 0;
    double chosen_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < b; ++c) {
      const std::size_t id = child0 + c;
      if (empty_[id - 1]) continue;
      const double d = squared_distance(feature.data(), centres_.data() + (id - 1) * dim, dim);
      if (d < chosen_d) {
        chosen_d = d;
        chosen = id;
      }
    }
    if (chosen == 0) break;
    if (chosen_d < best_d) {
      best_d = chosen_d;
      best = chosen;
    }
    current = chosen;
  }
  return best;
}

Container KMeansTree::to_container() const {
  Container c;
  c.header.patch_size = static_cast<std::uint32_t>(patch_size_);
  c.header.channels = static_cast<std::uint32_t>(channels_);
  c.header.branching = static_cast<std::uint32_t>(branching_);
  c.header.layers = static_cast<std::uint32_t>(layers_);
  c.header.node_count = node_count();
  c.header.feature_order = kFeatureOrderDyDxChannel;
  c.header.extractor_kind = static_cast<std::uint32_t>(kind_);
  c.header.seed = seed_;
  c.header.feature_length = static_cast<std::uint32_t>(dimension_);
  c.header.iterations = static_cast<std::uint32_t>(iterations_);
  ByteWriter centres;
  for (double v : centres_) centres.f64(v);
  c.sections["CNTR"] = std::move(centres.bytes());
  c.sections["EMPT"] = empty_;
  return c;
}

KMeansTree KMeansTree::from_container(const Container& c) {
  const auto& h = c.header;
  if (h.feature_order != kFeatureOrderDyDxChannel) {
    fail(ErrorCode::kUnsupported, "unknown feature order tag " + std::to_string(h.feature_order));
  }
  KMeansTree tree;
  tree.branching_ = static_cast<int>(h.branching);
  tree.layers_ = static_cast<int>(h.layers);
  tree.iterations_ = static_cast<int>(h.iterations);
  tree.patch_size_ = static_cast<int>(h.patch_size);
  tree.channels_ = static_cast<int>(h.channels);
  tree.kind_ = static_cast<ExtractorKind>(h.extractor_kind);
  tree.seed_ = h.seed;
  tree.dimension_ = h.feature_length;

  std::size_t expected_k = 0;
  try {
    expected_k = tree_node_count(tree.branching_, tree.layers_);
    require_odd_patch_size(tree.patch_size_);
    if (tree.dimension_ != make_extractor(tree.kind_, tree.patch_size_)->feature_length(tree.channels_)) {
      fail(ErrorCode::kCorruption, "feature length inconsistent with patch size");
    }
  } catch (const Error& e) {
    fail(ErrorCode::kCorruption, std::string("invalid dictionary header: ") + e.what());
  }
  if (h.node_count != expected_k) fail(ErrorCode::kCorruption, "node count does not match b and t");

  auto cntr = c.sections.find("CNTR");
  auto empt = c.sections.find("EMPT");
  if (cntr == c.sections.end() || empt == c.sections.end()) {
    fail(ErrorCode::kCorruption, "dictionary sections missing");
  }
  if (cntr->second.size() != expected_k * tree.dimension_ * 8 || empt->second.size() != expected_k) {
    fail(ErrorCode::kCorruption, "dictionary section sizes inconsistent");
  }
  ByteReader r(cntr->second);
  tree.centres_.resize(expected_k * tree.dimension_);
  for (double& v : tree.centres_) v = r.f64();
  tree.empty_ = empt->second;
  if (tree.empty_[0] != 0) fail(ErrorCode::kCorruption, "dictionary root is empty");
  return tree;
}

std::size_t AssignmentImage::nonzero_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(ids_.begin(), ids_.end(), [](std::uint32_t v) { return v != 0; }));
}

AssignmentImage assign_image(const PixelGrid& grid, const KMeansTree& tree) {
  const int m = tree.patch_size();
  if (grid.width() < m || grid.height() < m) {
    fail(ErrorCode::kConfig, "image smaller than the patch size");
  }
  if (grid.channels() != tree.channels()) {
    fail(ErrorCode::kConfig, "image has " + std::to_string(grid.channels()) +
                                 " channels, dictionary expects " +
                                 std::to_string(tree.channels()));
  }
  const auto extractor = tree.make_feature_extractor();
  if (extractor->feature_length(grid.channels()) != tree.dimension()) {
    fail(ErrorCode::kConfig, "feature length mismatch");
  }
  const int s = extractor->half();
  const int width = grid.width();
  const int height = grid.height();
  std::vector<std::uint32_t> ids(grid.pixel_count(), 0);
  parallel_for(static_cast<std::size_t>(s), static_cast<std::size_t>(height - s), 8,
               [&](std::size_t lo, std::size_t hi) {
                 std::vector<double> feature(tree.dimension());
                 for (std::size_t y = lo; y < hi; ++y) {
                   for (int x = s; x < width - s; ++x) {
                     extractor->extract(grid, {x, static_cast<int>(y)}, feature);
                     ids[y * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
                         static_cast<std::uint32_t>(tree.assign(feature));
                   }
                 }
               });
  return AssignmentImage(width, height, std::move(ids));
}

}  // namespace patchprop
