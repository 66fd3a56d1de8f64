// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "oracle.hpp"
#include "patchprop/postproc.hpp"

using namespace patchprop;

namespace {

// Majority of 4/6-neighbour votes per component, lowest label on ties,
// background only when nothing else touches.
LabelVolume removal_oracle(const LabelVolume& v, std::uint8_t cls, std::size_t min_size) {
  std::vector<std::size_t> sizes;
  const auto comp = oracle::components(v.labels, v.width, v.height, v.depth, cls, sizes);
  std::vector<std::array<std::size_t, 256>> votes(sizes.size());
  for (auto& a : votes) a.fill(0);
  for (int z = 0; z < v.depth; ++z)
    for (int y = 0; y < v.height; ++y)
      for (int x = 0; x < v.width; ++x) {
        const std::size_t p = v.index(x, y, z);
        if (comp[p] < 0) continue;
        const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (auto& o : nb) {
          const int nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (nx < 0 || ny < 0 || nz < 0 || nx >= v.width || ny >= v.height || nz >= v.depth)
            continue;
          const auto label = v.labels[v.index(nx, ny, nz)];
          if (label != cls) ++votes[comp[p]][label];
        }
      }
  LabelVolume out = v;
  for (std::size_t p = 0; p < v.labels.size(); ++p) {
    if (comp[p] < 0 || sizes[comp[p]] >= min_size) continue;
    const auto& vote = votes[comp[p]];
    int best = -1;
    for (int l = 1; l < 256; ++l)
      if (vote[l] > 0 && (best < 0 || vote[l] > vote[best])) best = l;
    if (best < 0 && vote[0] > 0) best = 0;
    if (best >= 0) out.labels[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

std::vector<double> bump(int w, int h, double cx, double cy, double sigma) {
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      v[static_cast<std::size_t>(y) * w + x] =
          std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma));
  return v;
}

}  // namespace

TEST_SUITE("postproc") {

TEST_CASE("large components are kept") {
  LabelVolume v{6, 5, 1, std::vector<std::uint8_t>(30, 1)};
  for (int y = 1; y < 4; ++y)
    for (int x = 1; x < 5; ++x) v.labels[v.index(x, y, 0)] = 2;
  CHECK(remove_small_components(v, 2, 12) == v);
  const auto removed = remove_small_components(v, 2, 13);
  for (auto l : removed.labels) CHECK(l == 1);
}

TEST_CASE("isolated pixel below the volume threshold") {
  LabelVolume v{40, 30, 2, std::vector<std::uint8_t>(2400, 1)};
  v.labels[v.index(7, 9, 1)] = 2;
  const auto out = remove_small_components(v, 2, 10000);
  CHECK(out.at(7, 9, 1) == 1);
}

TEST_CASE("tiny components match the flood fill oracle") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 3;
    LabelVolume v{9 + trial % 4, 7, d, {}};
    v.labels.resize(static_cast<std::size_t>(v.width) * v.height * d);
    for (auto& l : v.labels) l = static_cast<std::uint8_t>(pick(rng));
    for (std::uint8_t cls : {1, 2})
      for (std::size_t min_size : {1, 2, 4, 50}) {
        const auto got = remove_small_components(v, cls, min_size);
        CHECK(got == removal_oracle(v, cls, min_size));
        CHECK(got.labels.size() == v.labels.size());
      }
  }
  LabelVolume checker{8, 8, 1, std::vector<std::uint8_t>(64)};
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) checker.labels[checker.index(x, y, 0)] = (x + y) % 2 ? 2 : 1;
  for (auto l : remove_small_components(checker, 2, 2).labels) CHECK(l == 1);
}

TEST_CASE("removal leaves other pixels alone") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick(0, 3);
  LabelVolume v{20, 20, 1, std::vector<std::uint8_t>(400)};
  for (auto& l : v.labels) l = static_cast<std::uint8_t>(pick(rng));
  const auto out = remove_small_components(v, 3, 5);
  for (std::size_t i = 0; i < 400; ++i)
    if (v.labels[i] != 3) CHECK(out.labels[i] == v.labels[i]);
  CHECK_THROWS_AS(remove_small_components(LabelVolume{3, 3, 1, {1, 2}}, 1, 2), Error);
}

TEST_CASE("gaussian smoothing matches a direct clamped convolution") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  const int w = 13, h = 9;
  std::vector<double> v(w * h);
  for (double& x : v) x = u(rng);
  for (double sigma : {0.7, 1.5, 2.0}) {
    const int r = static_cast<int>(std::ceil(3 * sigma));
    std::vector<double> k(2 * r + 1);
    double sum = 0;
    for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& x : k) x /= sum;
    std::vector<double> expect(w * h, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int sx = std::clamp(x + dx, 0, w - 1), sy = std::clamp(y + dy, 0, h - 1);
            expect[y * w + x] += k[dx + r] * k[dy + r] * v[sy * w + sx];
          }
    CHECK(oracle::max_abs_diff(gaussian_smooth(v, w, h, sigma), expect) <= 1e-12);
  }
  CHECK(gaussian_smooth(v, w, h, 0.0) == v);
}

TEST_CASE("single bump gives its peak") {
  const auto v = bump(31, 25, 12, 17, 3);
  for (double sigma : {0.0, 2.0}) {
    CentreOptions opts;
    opts.sigma = sigma;
    const auto c = detect_centres(v, 31, 25, opts, 2);
    REQUIRE(c.size() == 1);
    CHECK(c[0].x == 12);
    CHECK(c[0].y == 17);
    CHECK(c[0].slice == 2);
  }
}

TEST_CASE("flat and sub-threshold layers have no centres") {
  CHECK(detect_centres(std::vector<double>(100, 0.8), 10, 10, {}).empty());
  auto low = bump(20, 20, 10, 10, 2);
  for (double& x : low) x *= 0.4;
  CHECK(detect_centres(low, 20, 20, {}).empty());
}

TEST_CASE("plateaus yield one centre and suppression keeps spacing") {
  std::vector<double> v(15 * 15, 0.0);
  for (int y = 5; y < 8; ++y)
    for (int x = 5; x < 8; ++x) v[y * 15 + x] = 1.0;
  CentreOptions raw;
  raw.sigma = 0;
  CHECK(detect_centres(v, 15, 15, raw).size() == 1);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.5, 1);
  std::vector<double> noisy(40 * 40);
  for (double& x : noisy) x = u(rng);
  for (double dist : {2.0, 4.0, 7.5}) {
    CentreOptions o;
    o.sigma = 0;
    o.min_distance = dist;
    const auto c = detect_centres(noisy, 40, 40, o);
    REQUIRE_FALSE(c.empty());
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i > 0) CHECK(c[i - 1].score >= c[i].score);
      for (std::size_t j = i + 1; j < c.size(); ++j)
        CHECK(std::hypot(c[i].x - c[j].x, c[i].y - c[j].y) >= dist);
    }
  }
}

TEST_CASE("many bumps are all found") {
  std::vector<double> v(64 * 64, 0.0);
  std::vector<std::pair<int, int>> peaks;
  for (int y = 8; y < 64; y += 16)
    for (int x = 8; x < 64; x += 16) {
      peaks.push_back({x, y});
      const auto b = bump(64, 64, x, y, 3);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(v[i], b[i]);
    }
  const auto c = detect_centres(v, 64, 64, {});
  CHECK(c.size() == peaks.size());
  for (auto [x, y] : peaks) {
    bool hit = false;
    for (const auto& d : c) hit = hit || (std::abs(d.x - x) <= 1 && std::abs(d.y - y) <= 1);
    CHECK(hit);
  }
}

TEST_CASE("cell extent assigns pixels to the nearest centre") {
  const int w = 20, h = 10;
  std::vector<double> centre(w * h, 0.8), boundary(w * h, 0.1);
  for (int y = 0; y < h; ++y) {
    centre[y * w + 10] = 0.1;
    boundary[y * w + 10] = 0.9;
  }
  const std::vector<Centre> cs{{4, 5, 0, 1.0}, {15, 4, 0, 1.0}};
  const auto ids = estimate_cell_extent(centre, boundary, w, h, cs);
  REQUIRE(ids.size() == static_cast<std::size_t>(w * h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto id = ids[y * w + x];
      if (x == 10) {
        CHECK(id == 0);
        continue;
      }
      const double d1 = std::hypot(x - 4, y - 5), d2 = std::hypot(x - 15, y - 4);
      CHECK(id == (d1 <= d2 ? 1u : 2u));
    }
}

TEST_CASE("centre csv") {
  std::ostringstream out;
  const std::vector<Centre> cs{{3, 4, 0, 0.5}, {10, 2, 1, 0.25}};
  write_centres_csv(out, cs);
  CHECK(out.str() == "x,y,slice,score\n3,4,0,0.5\n10,2,1,0.25\n");
}

}
