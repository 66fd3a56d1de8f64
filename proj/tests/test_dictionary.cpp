// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracle.hpp"
#include "patchprop/dictionary.hpp"

using namespace patchprop;

namespace {

FeatureSet constant_clusters(const std::vector<double>& levels, int per_level, int m) {
  FeatureSet set;
  set.dimension = static_cast<std::size_t>(m) * m;
  for (double v : levels)
    for (int i = 0; i < per_level; ++i) {
      set.values.insert(set.values.end(), set.dimension, v);
      set.centres.push_back({i, 0});
    }
  return set;
}

KMeansTree random_tree(const PixelGrid& g, int m, int b, int t, std::uint64_t seed) {
  IntensityPatchExtractor ex(m);
  const auto train = extract_training_set(g, ex, 400, seed);
  return KMeansTree::build(train, {b, t, 10, seed}, ex, 1);
}

}  // namespace

TEST_SUITE("dictionary") {

TEST_CASE("node count formula sweep") {
  for (int b = 2; b <= 5; ++b) {
    std::size_t expected = 0, layer = 1;
    for (int t = 0; t <= 4; ++t) {
      expected += layer;
      layer *= b;
      CHECK(tree_node_count(b, t) == expected);
    }
  }
  CHECK(tree_node_count(2, 2) == 7);
  CHECK(tree_node_count(3, 0) == 1);
  CHECK_THROWS_AS(tree_node_count(1, 2), Error);
  CHECK_THROWS_AS(tree_node_count(2, -1), Error);
}

TEST_CASE("built trees have the declared node count") {
  std::mt19937_64 rng(5);
  const auto g = oracle::random_grid(24, 24, 1, rng);
  for (int b = 2; b <= 5; ++b)
    for (int t = 0; t <= 4; ++t) {
      const auto tree = random_tree(g, 3, b, t, 1);
      CHECK(tree.node_count() == tree_node_count(b, t));
      CHECK(tree.dimension() == 9);
    }
}

TEST_CASE("separated clusters are recovered by the leaves") {
  const std::vector<double> levels{0.1, 0.4, 0.7, 0.95};
  const auto set = constant_clusters(levels, 25, 3);
  IntensityPatchExtractor ex(3);
  const auto tree = KMeansTree::build(set, {4, 1, 10, 3}, ex, 1);
  REQUIRE(tree.node_count() == 5);
  std::vector<double> found;
  for (std::size_t id = 2; id <= 5; ++id) {
    REQUIRE_FALSE(tree.is_empty(id));
    const auto c = tree.centre(id);
    for (double v : c) CHECK(v == doctest::Approx(c[0]).epsilon(1e-12));
    found.push_back(c[0]);
  }
  std::sort(found.begin(), found.end());
  for (std::size_t i = 0; i < levels.size(); ++i) CHECK(std::abs(found[i] - levels[i]) < 1e-6);
  double mean = 0;
  for (double v : levels) mean += v / levels.size();
  CHECK(std::abs(tree.centre(1)[0] - mean) < 1e-6);
}

TEST_CASE("small splits leave empty children") {
  const auto set = constant_clusters({0.1, 0.4, 0.7, 0.95}, 1, 3);
  IntensityPatchExtractor ex(3);
  const auto tree = KMeansTree::build(set, {3, 2, 10, 1}, ex, 1);
  REQUIRE(tree.node_count() == 13);
  for (std::size_t id = 1; id <= 4; ++id) CHECK_FALSE(tree.is_empty(id));
  for (std::size_t id = 5; id <= 13; ++id) {
    CHECK(tree.is_empty(id));
    for (double v : tree.centre(id)) CHECK(v == 0.0);
  }
  const auto id = tree.assign(std::vector<double>(9, 0.0));
  CHECK(id >= 1);
  CHECK(id <= 4);
}

TEST_CASE("layout helpers") {
  std::mt19937_64 rng(5);
  const auto tree = random_tree(oracle::random_grid(20, 20, 1, rng), 3, 3, 2, 1);
  CHECK(tree.layer_of(1) == 0);
  CHECK(tree.layer_of(2) == 1);
  CHECK(tree.layer_of(4) == 1);
  CHECK(tree.layer_of(5) == 2);
  CHECK(tree.first_child(1) == 2);
  CHECK(tree.first_child(2) == 5);
  CHECK(tree.first_child(4) == 11);
  CHECK(tree.first_child(5) == 0);
}

TEST_CASE("single node tree assigns everything to node 1") {
  const auto g = PixelGrid::filled(8, 7, 1, 0.3);
  IntensityPatchExtractor ex(3);
  const auto tree = KMeansTree::build(extract_training_set(g, ex, 50, 1), {2, 0, 10, 1}, ex, 1);
  const auto a = assign_image(g, tree);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool interior = x >= 1 && y >= 1 && x < 7 && y < 6;
      CHECK(a.at(x, y) == (interior ? 1u : 0u));
    }
}

TEST_CASE("3x3 image has one assigned pixel") {
  std::mt19937_64 rng(1);
  const auto g = oracle::random_grid(3, 3, 1, rng);
  IntensityPatchExtractor ex(3);
  const auto tree = KMeansTree::build(extract_training_set(g, ex, 10, 1), {2, 1, 10, 1}, ex, 1);
  const auto a = assign_image(g, tree);
  CHECK(a.nonzero_count() == 1);
  CHECK(a.at(1, 1) != 0);
}

TEST_CASE("assignment matches the descent replay") {
  std::mt19937_64 rng(17);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto g = oracle::random_grid(32, 32, 1, rng);
    const auto tree = random_tree(g, 3, 2, 3, seed);
    const auto a = assign_image(g, tree);
    std::size_t mismatches = 0;
    for (int y = 1; y < 31; ++y)
      for (int x = 1; x < 31; ++x) {
        const auto id = oracle::descend(tree, oracle::window_copy(g, x, y, 3));
        mismatches += a.at(x, y) != id;
        CHECK_FALSE(tree.is_empty(a.at(x, y)));
      }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("assignment counts, determinism and idempotence") {
  std::mt19937_64 rng(4);
  for (auto [w, h, m] : {std::tuple{16, 16, 3}, {20, 13, 5}, {9, 9, 9}, {12, 7, 1}}) {
    const auto g = oracle::random_grid(w, h, 1, rng);
    const auto tree = random_tree(g, m, 3, 2, 1);
    const auto a = assign_image(g, tree);
    const std::size_t s = (m - 1) / 2;
    CHECK(a.nonzero_count() == (w - 2 * s) * (h - 2 * s));
    CHECK(assign_image(g, tree) == a);
    CHECK(random_tree(g, m, 3, 2, 1) == tree);
  }
}

TEST_CASE("assignment rejects mismatched inputs") {
  std::mt19937_64 rng(4);
  const auto g = oracle::random_grid(16, 16, 1, rng);
  const auto tree = random_tree(g, 5, 2, 1, 1);
  CHECK_THROWS_AS(assign_image(oracle::random_grid(4, 16, 1, rng), tree), Error);
  CHECK_THROWS_AS(assign_image(oracle::random_grid(16, 16, 3, rng), tree), Error);
}

TEST_CASE("container round trip") {
  std::mt19937_64 rng(8);
  const auto g = oracle::random_grid(20, 20, 3, rng);
  MultichannelPatchExtractor ex(3);
  const auto tree =
      KMeansTree::build(extract_training_set(g, ex, 200, 4), {3, 2, 5, 4}, ex, 3);
  const auto bytes = encode_container(tree.to_container());
  const auto back = KMeansTree::from_container(decode_container(bytes));
  CHECK(back == tree);
  CHECK(back.extractor_kind() == ExtractorKind::kMultichannelPatch);
  CHECK(back.channels() == 3);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_container(bad), Error);
  auto cut = bytes;
  cut.resize(cut.size() / 2);
  try {
    KMeansTree::from_container(decode_container(cut));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruption);
  }
}

TEST_CASE("empty training set is a configuration error") {
  FeatureSet empty;
  empty.dimension = 9;
  IntensityPatchExtractor ex(3);
  CHECK_THROWS_AS(KMeansTree::build(empty, {}, ex, 1), Error);
}

}
