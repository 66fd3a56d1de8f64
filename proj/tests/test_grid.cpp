// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "patchprop/grid.hpp"

using namespace patchprop;

TEST_SUITE("grid") {

TEST_CASE("image index round trip over small grids") {
  for (int w = 1; w <= 7; ++w)
    for (int h = 1; h <= 5; ++h)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const auto i = image_linear_index({x, y}, w, h);
          CHECK(i == static_cast<std::size_t>(x + y * w));
          CHECK(image_coord(i, w) == PixelCoord{x, y});
        }
}

TEST_CASE("image index examples") {
  CHECK(image_linear_index({0, 0}, 4) == 0);
  CHECK(image_linear_index({3, 0}, 4) == 3);
  CHECK(image_linear_index({0, 1}, 4) == 4);
  CHECK_THROWS_AS(image_linear_index({4, 0}, 4, 4), Error);
  CHECK_THROWS_AS(image_linear_index({0, -1}, 4, 4), Error);
}

TEST_CASE("dictionary index is a bijection") {
  for (int m : {1, 3, 5, 9}) {
    const DictionaryShape shape{m, 7};
    const int s = shape.half();
    std::set<std::size_t> seen;
    for (std::size_t k = 1; k <= 7; ++k)
      for (int dy = -s; dy <= s; ++dy)
        for (int dx = -s; dx <= s; ++dx) {
          const auto j = dict_linear_index(dx, dy, k, shape);
          CHECK(j < shape.pixel_count());
          seen.insert(j);
          CHECK(dict_coord(j, shape) == DictCoord{dx, dy, k});
        }
    CHECK(seen.size() == shape.pixel_count());
  }
}

TEST_CASE("dictionary index examples") {
  const DictionaryShape shape{3, 5};
  CHECK(dict_linear_index(-1, -1, 1, shape) == 0);
  CHECK(dict_linear_index(0, 0, 1, shape) == 4);
  CHECK(dict_linear_index(1, 1, 5, shape) == 9 * 5 - 1);
  CHECK_THROWS_AS(dict_linear_index(2, 0, 1, shape), Error);
  CHECK_THROWS_AS(dict_linear_index(0, 0, 0, shape), Error);
  CHECK_THROWS_AS(dict_linear_index(0, 0, 6, shape), Error);
  CHECK_THROWS_AS(dict_linear_index(0, 0, 1, DictionaryShape{4, 1}), Error);
}

TEST_CASE("pixel grid validation") {
  CHECK_THROWS_AS(PixelGrid(2, 2, 1, std::vector<double>(3, 0.0)), Error);
  CHECK_THROWS_AS(PixelGrid(1, 1, 1, std::vector<double>{1.5}), Error);
  CHECK_THROWS_AS(PixelGrid(1, 1, 1, std::vector<double>{std::nan("")}), Error);
  const PixelGrid g(2, 1, 3, {0, 0.1, 0.2, 0.3, 0.4, 0.5});
  CHECK(g.at(1, 0, 2) == doctest::Approx(0.5));
  CHECK(g.pixel(1, 0)[0] == doctest::Approx(0.3));
  CHECK(g.pixel_count() == 2);
}

TEST_CASE("layer stack shape and retag") {
  CHECK_THROWS_AS(LabelStack(2, 3, std::vector<double>(5)), Error);
  LabelStack l(2, 2, 0.25);
  l(1, 1) = 0.75;
  auto p = retag<ProbabilityTag>(l);
  CHECK(p.rows() == 2);
  CHECK(p(1, 1) == 0.75);
  CHECK(layer_of(p, 1) == std::vector<double>{0.25, 0.75});
}

}
