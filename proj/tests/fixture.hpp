// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_TESTS_FIXTURE_HPP
#define PATCHPROP_TESTS_FIXTURE_HPP

#include <map>
#include <memory>
#include <random>

#include "patchprop/dictionary.hpp"
#include "patchprop/graph.hpp"
#include "patchprop/propagation.hpp"

namespace fixture {

struct Built {
  patchprop::PixelGrid image;
  int m = 0;
  std::shared_ptr<const patchprop::KMeansTree> tree;
  patchprop::AssignmentImage assignment;
  patchprop::TransformPair transforms;

  std::size_t k() const { return tree->node_count(); }
  std::size_t n() const { return image.pixel_count(); }
};

inline Built build(patchprop::PixelGrid image, int m, int b, int t, std::uint64_t seed,
                   std::size_t subsample = 4000) {
  using namespace patchprop;
  Built out;
  out.image = std::move(image);
  out.m = m;
  IntensityPatchExtractor ex(m);
  const auto train = extract_training_set(out.image, ex, subsample, seed);
  out.tree = std::make_shared<const KMeansTree>(
      KMeansTree::build(train, {b, t, 10, seed}, ex, out.image.channels()));
  out.assignment = assign_image(out.image, *out.tree);
  out.transforms = normalize(std::make_shared<const BiadjacencyGraph>(
      build_biadjacency(out.assignment, m, out.tree->node_count())));
  return out;
}

// Random marks: `count` pixels with random classes.
inline std::map<std::size_t, int> random_marks(std::size_t n, int classes, std::size_t count,
                                               std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pixel(0, n - 1);
  std::uniform_int_distribution<int> cls(1, classes);
  std::map<std::size_t, int> marks;
  for (std::size_t i = 0; i < count; ++i) marks[pixel(rng)] = cls(rng);
  return marks;
}

inline patchprop::UserMarking to_marking(const std::map<std::size_t, int>& marks, std::size_t n,
                                         int classes) {
  patchprop::UserMarking out(n, classes);
  for (auto [i, c] : marks) out.mark(i, c);
  return out;
}

template <typename Tag>
std::vector<double> values(const patchprop::LayerStack<Tag>& s) {
  return {s.values().begin(), s.values().end()};
}

}  // namespace fixture

#endif  // PATCHPROP_TESTS_FIXTURE_HPP
