// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/postproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace patchprop {

LabelVolume remove_small_components(LabelVolume volume, std::uint8_t cls, std::size_t min_size) {
  const std::size_t total = volume.labels.size();
  if (total != static_cast<std::size_t>(volume.width) * volume.height * volume.depth) {
    fail(ErrorCode::kShapeMismatch, "label volume size does not match its dimensions");
  }
  const std::vector<std::uint8_t> original = volume.labels;
  std::vector<std::uint8_t> visited(total, 0);
  std::vector<std::size_t> component;
  std::vector<std::size_t> queue;

  auto for_each_neighbour = [&volume](std::size_t v, auto&& fn) {
    const auto w = static_cast<std::size_t>(volume.width);
    const auto plane = w * static_cast<std::size_t>(volume.height);
    const std::size_t z = v / plane;
    const std::size_t y = (v % plane) / w;
    const std::size_t x = v % w;
    if (x > 0) fn(v - 1);
    if (x + 1 < w) fn(v + 1);
    if (y > 0) fn(v - w);
    if (y + 1 < static_cast<std::size_t>(volume.height)) fn(v + w);
    if (z > 0) fn(v - plane);
    if (z + 1 < static_cast<std::size_t>(volume.depth)) fn(v + plane);
  };

  for (std::size_t seed = 0; seed < total; ++seed) {
    if (original[seed] != cls || visited[seed]) continue;
    component.clear();
    queue.assign(1, seed);
    visited[seed] = 1;
    std::array<std::size_t, 256> votes{};
    while (!queue.empty()) {
      const std::size_t v = queue.back();
      queue.pop_back();
      component.push_back(v);
      for_each_neighbour(v, [&](std::size_t u) {
        if (original[u] == cls) {
          if (!visited[u]) {
            visited[u] = 1;
            queue.push_back(u);
          }
        } else {
          ++votes[original[u]];
        }
      });
    }
    if (component.size() >= min_size) continue;

    std::size_t best = 256;
    for (std::size_t label = 1; label < votes.size(); ++label) {
      if (votes[label] > 0 && (best == 256 || votes[label] > votes[best])) best = label;
    }
    if (best == 256 && votes[0] > 0) best = 0;
    if (best == 256) continue;
    for (std::size_t v : component) volume.labels[v] = static_cast<std::uint8_t>(best);
  }
  return volume;
}

std::vector<double> gaussian_smooth(std::span<const double> layer, int width, int height,
                                    double sigma) {
  if (layer.size() != static_cast<std::size_t>(width) * height) {
    fail(ErrorCode::kShapeMismatch, "probability layer size does not match the grid");
  }
  std::vector<double> out(layer.begin(), layer.end());
  if (!(sigma > 0)) return out;
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    sum += kernel[k + radius];
  }
  for (double& k : kernel) k /= sum;

  std::vector<double> tmp(out.size());
  for (int y = 0; y < height; ++y) {
    const double* row = out.data() + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * row[std::clamp(x + k, 0, width - 1)];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] *
               tmp[static_cast<std::size_t>(std::clamp(y + k, 0, height - 1)) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

std::vector<Centre> detect_centres(std::span<const double> input, int width, int height,
                                   const CentreOptions& options, int slice) {
  if (options.window_radius < 1) fail(ErrorCode::kConfig, "window radius must be at least 1");
  const std::vector<double> smoothed = gaussian_smooth(input, width, height, options.sigma);
  const std::span<const double> layer(smoothed);
  const int r = options.window_radius;
  std::vector<Centre> candidates;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      const double v = layer[i];
      if (!(v > options.threshold)) continue;
      bool is_peak = true;
      bool any_lower = false;
      for (int dy = -r; dy <= r && is_peak; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= height) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= width || (dx == 0 && dy == 0)) continue;
          const std::size_t j = static_cast<std::size_t>(yy) * width + xx;
          const double u = layer[j];
          if (u > v || (u == v && j < i)) {
            is_peak = false;
            break;
          }
          if (u < v) any_lower = true;
        }
      }
      if (is_peak && any_lower) candidates.push_back({x, y, slice, v});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Centre& a, const Centre& b) { return a.score > b.score; });

  const double min_d2 = options.min_distance * options.min_distance;
  std::vector<Centre> accepted;
  for (const Centre& c : candidates) {
    bool clear = true;
    for (const Centre& a : accepted) {
      const double dx = c.x - a.x;
      const double dy = c.y - a.y;
      if (dx * dx + dy * dy < min_d2) {
        clear = false;
        break;
      }
    }
    if (clear) accepted.push_back(c);
  }
  return accepted;
}

std::vector<std::uint32_t> estimate_cell_extent(std::span<const double> centre_layer,
                                                std::span<const double> boundary_layer,
                                                int width, int height,
                                                std::span<const Centre> centres) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (centre_layer.size() != n || boundary_layer.size() != n) {
    fail(ErrorCode::kShapeMismatch, "probability layers do not match the grid");
  }
  std::vector<std::uint32_t> instances(n, 0);
  if (centres.empty()) return instances;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (!(boundary_layer[i] < centre_layer[i])) continue;
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t id = 0;
      for (std::size_t c = 0; c < centres.size(); ++c) {
        const double dx = x - centres[c].x;
        const double dy = y - centres[c].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
          best = d2;
          id = static_cast<std::uint32_t>(c + 1);
        }
      }
      instances[i] = id;
    }
  }
  return instances;
}

void write_centres_csv(std::ostream& out, std::span<const Centre> centres) {
  out << "x,y,slice,score\n";
  char buf[96];
  for (const Centre& c : centres) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.9g\n", c.x, c.y, c.slice, c.score);
    out << buf;
  }
}

}  // namespace patchprop
