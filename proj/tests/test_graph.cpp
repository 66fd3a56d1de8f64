// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>
#include <sstream>

#include "oracle.hpp"
#include "patchprop/graph.hpp"

using namespace patchprop;

namespace {

AssignmentImage random_assignment(int w, int h, int m, std::size_t k, std::mt19937_64& rng) {
  const int s = (m - 1) / 2;
  std::uniform_int_distribution<std::uint32_t> pick(1, static_cast<std::uint32_t>(k));
  std::vector<std::uint32_t> ids(static_cast<std::size_t>(w) * h, 0);
  for (int y = s; y < h - s; ++y)
    for (int x = s; x < w - s; ++x) ids[static_cast<std::size_t>(y) * w + x] = pick(rng);
  return AssignmentImage(w, h, std::move(ids));
}

TransformPair transforms_for(const AssignmentImage& a, int m, std::size_t k) {
  return normalize(std::make_shared<const BiadjacencyGraph>(build_biadjacency(a, m, k)));
}

// T1 and T2 as dense matrices from the stored pattern and weights.
oracle::Dense dense_t1(const TransformPair& t) {
  const auto& bt = t.graph()->transposed();
  oracle::Dense d(bt.rows, bt.cols_count);
  for (std::size_t r = 0; r < bt.rows; ++r)
    for (auto c : bt.row(r)) d(r, c) += t.t1_weights()[r];
  return d;
}

oracle::Dense dense_t2(const TransformPair& t) {
  const auto& b = t.graph()->rows();
  oracle::Dense d(b.rows, b.cols_count);
  for (std::size_t r = 0; r < b.rows; ++r)
    for (auto c : b.row(r)) d(r, c) += t.t2_weights()[r];
  return d;
}

ValueStack random_values(std::size_t rows, std::size_t layers, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ValueStack v(rows, layers);
  for (double& x : v.values()) x = u(rng);
  return v;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("nnz and assignment counts over shapes") {
  std::mt19937_64 rng(1);
  for (int m : {1, 3, 5, 7})
    for (int w = m; w <= m + 9; w += 3)
      for (int h = m; h <= m + 7; h += 2) {
        const int s = (m - 1) / 2;
        const auto a = random_assignment(w, h, m, 6, rng);
        const auto g = build_biadjacency(a, m, 6);
        const std::size_t centres = static_cast<std::size_t>(w - 2 * s) * (h - 2 * s);
        CHECK(a.nonzero_count() == centres);
        CHECK(g.nnz() == centres * m * m);
        CHECK(g.transposed().nnz() == g.nnz());
        CHECK(g.image_pixels() == static_cast<std::size_t>(w) * h);
        CHECK(g.dictionary_pixels() == static_cast<std::size_t>(m) * m * 6);
        for (std::size_t i = 0; i < g.image_pixels(); ++i) {
          CHECK(g.image_degree(i) >= 1);
          CHECK(g.image_degree(i) <= static_cast<std::size_t>(m) * m);
        }
      }
}

TEST_CASE("3x3 image with one patch") {
  const AssignmentImage a(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0});
  const auto g = build_biadjacency(a, 3, 1);
  CHECK(g.nnz() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    REQUIRE(g.image_degree(i) == 1);
    CHECK(g.rows().row(i)[0] == i);
  }
  const auto t = normalize(std::make_shared<const BiadjacencyGraph>(g));
  for (double w : t.t2_weights()) CHECK(w == 1.0);
}

TEST_CASE("single cluster on 5x5") {
  std::vector<std::uint32_t> ids(25, 0);
  for (int y = 1; y < 4; ++y)
    for (int x = 1; x < 4; ++x) ids[y * 5 + x] = 1;
  const auto g = build_biadjacency(AssignmentImage(5, 5, ids), 3, 2);
  CHECK(g.nnz() == 81);
  const auto row = g.rows().row(12);
  REQUIRE(row.size() == 9);
  for (std::size_t q = 0; q < 9; ++q) CHECK(row[q] == q);
  for (std::size_t j = 9; j < 18; ++j) CHECK(g.dictionary_degree(j) == 0);
}

TEST_CASE("structure matches the relation enumeration") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = trial % 2 ? 5 : 3;
    const auto a = random_assignment(7 + trial, 6 + trial / 2, m, 4, rng);
    const auto g = build_biadjacency(a, m, 4);
    const auto dense = oracle::biadjacency(a, m, 4);
    std::size_t ones = 0;
    for (double v : dense.v) {
      CHECK((v == 0.0 || v == 1.0));
      ones += v == 1.0;
    }
    CHECK(ones == g.nnz());
    for (std::size_t i = 0; i < g.image_pixels(); ++i)
      for (auto j : g.rows().row(i)) CHECK(dense(i, j) == 1.0);
    for (std::size_t j = 0; j < g.dictionary_pixels(); ++j)
      for (auto i : g.transposed().row(j)) CHECK(dense(i, j) == 1.0);
  }
}

TEST_CASE("column degree equals the cluster population") {
  std::mt19937_64 rng(3);
  const int m = 3;
  const auto a = random_assignment(11, 9, m, 5, rng);
  const auto g = build_biadjacency(a, m, 5);
  std::vector<std::size_t> population(6, 0);
  for (auto id : a.ids()) ++population[id];
  for (std::size_t j = 0; j < g.dictionary_pixels(); ++j)
    CHECK(g.dictionary_degree(j) == population[j / 9 + 1]);
}

TEST_CASE("corrupt assignments are rejected") {
  std::vector<std::uint32_t> ids(25, 0);
  ids[12] = 4;
  try {
    build_biadjacency(AssignmentImage(5, 5, ids), 3, 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruption);
  }
  ids[12] = 1;
  ids[0] = 1;
  CHECK_THROWS_AS(build_biadjacency(AssignmentImage(5, 5, ids), 3, 3), Error);
  CHECK_THROWS_AS(build_biadjacency(AssignmentImage(5, 5, ids), 4, 3), Error);
}

TEST_CASE("normalization matches dense row normalization") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    const int m = trial % 2 ? 5 : 3;
    const std::size_t k = 3 + trial;
    const auto a = random_assignment(9 + trial, 8, m, k, rng);
    const auto t = transforms_for(a, m, k);
    const auto b = oracle::biadjacency(a, m, k);
    CHECK(oracle::max_abs_diff(dense_t2(t).v, oracle::row_normalize(b).v) <= 1e-14);
    CHECK(oracle::max_abs_diff(dense_t1(t).v, oracle::row_normalize(oracle::transpose(b)).v) <=
          1e-14);
  }
}

TEST_CASE("transform rows are stochastic") {
  std::mt19937_64 rng(5);
  const auto a = random_assignment(16, 14, 5, 10, rng);
  const auto t = transforms_for(a, 5, 10);
  const auto& g = *t.graph();
  for (std::size_t i = 0; i < g.image_pixels(); ++i)
    CHECK(std::abs(t.t2_weights()[i] * g.image_degree(i) - 1.0) <= 1e-12);
  std::size_t masked = 0;
  for (std::size_t j = 0; j < g.dictionary_pixels(); ++j) {
    if (t.t1_zero_rows()[j]) {
      ++masked;
      CHECK(g.dictionary_degree(j) == 0);
      CHECK(t.t1_weights()[j] == 0.0);
    } else {
      CHECK(std::abs(t.t1_weights()[j] * g.dictionary_degree(j) - 1.0) <= 1e-12);
    }
  }
  std::vector<std::uint32_t> ids(49, 0);
  for (int y = 2; y < 5; ++y)
    for (int x = 2; x < 5; ++x) ids[y * 7 + x] = 1;
  const auto sparse = transforms_for(AssignmentImage(7, 7, ids), 5, 3);
  std::size_t sparse_masked = 0;
  for (auto z : sparse.t1_zero_rows()) sparse_masked += z;
  CHECK(sparse_masked == 50);
}

TEST_CASE("dictionary pixel shared by four image pixels") {
  std::vector<std::uint32_t> ids(16, 0);
  for (int y = 1; y < 3; ++y)
    for (int x = 1; x < 3; ++x) ids[y * 4 + x] = 1;
  const auto t = transforms_for(AssignmentImage(4, 4, ids), 3, 1);
  for (std::size_t j = 0; j < 9; ++j) {
    CHECK(t.graph()->dictionary_degree(j) == 4);
    CHECK(t.t1_weights()[j] == 0.25);
  }
}

TEST_CASE("products match dense multiplication") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 8; ++trial) {
    const int m = trial % 2 ? 5 : 3;
    const std::size_t k = 2 + trial;
    const std::size_t layers = 1 + trial % 3;
    const auto a = random_assignment(8 + trial, 10, m, k, rng);
    const auto t = transforms_for(a, m, k);
    const auto v = random_values(t.image_pixels(), layers, rng);
    const auto w = random_values(t.dictionary_pixels(), layers, rng);

    const auto t1v = apply_image_to_dict(t, v);
    const auto expect1 =
        oracle::multiply(dense_t1(t), oracle::from_values(v.rows(), layers, {v.values().begin(),
                                                                             v.values().end()}));
    CHECK(oracle::max_abs_diff({t1v.values().begin(), t1v.values().end()}, expect1.v) <= 1e-12);
    const auto gathered = oracle::gather(a, m, k, {v.values().begin(), v.values().end()}, layers);
    CHECK(oracle::max_abs_diff({t1v.values().begin(), t1v.values().end()}, gathered) <= 1e-12);

    const auto t2w = apply_dict_to_image(t, w);
    const auto expect2 =
        oracle::multiply(dense_t2(t), oracle::from_values(w.rows(), layers, {w.values().begin(),
                                                                             w.values().end()}));
    CHECK(oracle::max_abs_diff({t2w.values().begin(), t2w.values().end()}, expect2.v) <= 1e-12);
    const auto scattered = oracle::scatter(a, m, k, {w.values().begin(), w.values().end()}, layers);
    CHECK(oracle::max_abs_diff({t2w.values().begin(), t2w.values().end()}, scattered) <= 1e-12);
  }
}

TEST_CASE("stencil and sparse kernels agree") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 6; ++trial) {
    const int m = 1 + 2 * (trial % 4);
    const auto a = random_assignment(13 + trial, 11, m, 7, rng);
    const auto t = transforms_for(a, m, 7);
    const auto& g = *t.graph();
    const std::size_t layers = 3;
    const auto v = random_values(t.image_pixels(), layers, rng);
    const auto w = random_values(t.dictionary_pixels(), layers, rng);
    std::vector<double> s1(t.dictionary_pixels() * layers), p1(s1.size());
    std::vector<double> s2(t.image_pixels() * layers), p2(s2.size());
    stencil_image_to_dict(g, t.t1_weights(), v.values(), layers, s1);
    scaled_pattern_product(g.transposed(), t.t1_weights(), v.values(), layers, p1);
    stencil_dict_to_image(g, t.t2_weights(), w.values(), layers, s2);
    scaled_pattern_product(g.rows(), t.t2_weights(), w.values(), layers, p2);
    CHECK(oracle::max_abs_diff(s1, p1) <= 1e-12);
    CHECK(oracle::max_abs_diff(s2, p2) <= 1e-12);
  }
}

TEST_CASE("constants are preserved and masked rows stay zero") {
  std::mt19937_64 rng(8);
  const auto a = random_assignment(12, 12, 3, 40, rng);
  const auto t = transforms_for(a, 3, 40);
  const ValueStack v(t.image_pixels(), 2, 0.7);
  const auto d = apply_image_to_dict(t, v);
  for (std::size_t j = 0; j < d.rows(); ++j)
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(d(j, c) == doctest::Approx(t.t1_zero_rows()[j] ? 0.0 : 0.7).epsilon(1e-12));
  const ValueStack w(t.dictionary_pixels(), 1, -0.3);
  const auto back = apply_dict_to_image(t, w);
  for (double x : back.values()) CHECK(std::abs(x + 0.3) <= 1e-12);
}

TEST_CASE("one-hot inputs stay on related pixels") {
  std::mt19937_64 rng(9);
  const auto a = random_assignment(10, 9, 3, 4, rng);
  const auto t = transforms_for(a, 3, 4);
  const auto& g = *t.graph();
  const std::size_t i = 4 * 10 + 5;
  ValueStack v(t.image_pixels(), 1, 0.0);
  v(i, 0) = 1.0;
  const auto d = apply_image_to_dict(t, v);
  std::set<std::size_t> related(g.rows().row(i).begin(), g.rows().row(i).end());
  CHECK(related.size() <= 9);
  for (std::size_t j = 0; j < d.rows(); ++j) CHECK((d(j, 0) != 0.0) == (related.count(j) == 1));

  const std::size_t j = *related.begin();
  ValueStack w(t.dictionary_pixels(), 1, 0.0);
  w(j, 0) = 1.0;
  const auto img = apply_dict_to_image(t, w);
  std::set<std::size_t> column(g.transposed().row(j).begin(), g.transposed().row(j).end());
  for (std::size_t p = 0; p < img.rows(); ++p) CHECK((img(p, 0) != 0.0) == (column.count(p) == 1));
}

TEST_CASE("shape mismatches") {
  std::mt19937_64 rng(10);
  const auto t = transforms_for(random_assignment(6, 6, 3, 2, rng), 3, 2);
  try {
    apply_image_to_dict(t, ValueStack(t.image_pixels() + 1, 1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }
  CHECK_THROWS_AS(apply_dict_to_image(t, ValueStack(t.image_pixels(), 1)), Error);
}

TEST_CASE("matrix market export") {
  const AssignmentImage a(3, 3, {0, 0, 0, 0, 2, 0, 0, 0, 0});
  const auto g = build_biadjacency(a, 3, 2);
  std::ostringstream out;
  g.write_matrix_market(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("%%MatrixMarket matrix coordinate", 0) == 0);
  while (std::getline(in, line) && line[0] == '%') {
  }
  std::istringstream dims(line);
  std::size_t r, c, nnz;
  dims >> r >> c >> nnz;
  CHECK(r == 9);
  CHECK(c == 18);
  CHECK(nnz == 9);
  std::size_t i, j;
  double v;
  std::size_t rows = 0;
  while (in >> i >> j >> v) {
    CHECK(j == 9 + i);
    CHECK(v == 1.0);
    ++rows;
  }
  CHECK(rows == 9);
}

}
