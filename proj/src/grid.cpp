// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/grid.hpp"

#include <cmath>
#include <string>

namespace patchprop {

PixelGrid::PixelGrid(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    fail(ErrorCode::kConfig, "pixel grid dimensions must be positive");
  }
  const std::size_t expected = static_cast<std::size_t>(width) * height * channels;
  if (data_.size() != expected) {
    fail(ErrorCode::kConfig, "pixel grid expects " + std::to_string(expected) +
                                 " samples, got " + std::to_string(data_.size()));
  }
  for (double v : data_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      fail(ErrorCode::kConfig, "pixel values must be finite and within [0,1]");
    }
  }
}

PixelGrid PixelGrid::filled(int width, int height, int channels, double value) {
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  return PixelGrid(width, height, channels, std::vector<double>(count, value));
}

double PixelGrid::at(int x, int y, int channel) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_ || channel < 0 ||
      channel >= channels_) {
    fail(ErrorCode::kBounds, "pixel access out of range");
  }
  return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + channel];
}

std::size_t image_linear_index(PixelCoord p, int width) {
  return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width) +
         static_cast<std::size_t>(p.x);
}

std::size_t image_linear_index(PixelCoord p, int width, int height) {
  if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) {
    fail(ErrorCode::kBounds, "pixel (" + std::to_string(p.x) + "," +
                                 std::to_string(p.y) + ") outside " +
                                 std::to_string(width) + "x" + std::to_string(height));
  }
  return image_linear_index(p, width);
}

PixelCoord image_coord(std::size_t index, int width) {
  const auto w = static_cast<std::size_t>(width);
  return {static_cast<int>(index % w), static_cast<int>(index / w)};
}

void require_odd_patch_size(int patch_size) {
  if (patch_size <= 0 || patch_size % 2 == 0) {
    fail(ErrorCode::kConfig,
         "patch size must be a positive odd number, got " + std::to_string(patch_size));
  }
}

std::size_t dict_linear_index(int dx, int dy, std::size_t node_id,
                              const DictionaryShape& shape) {
  require_odd_patch_size(shape.patch_size);
  const int s = shape.half();
  if (dx < -s || dx > s || dy < -s || dy > s) {
    fail(ErrorCode::kBounds, "displacement outside the patch");
  }
  if (node_id < 1 || node_id > shape.node_count) {
    fail(ErrorCode::kBounds, "node id " + std::to_string(node_id) + " outside 1.." +
                                 std::to_string(shape.node_count));
  }
  const auto m = static_cast<std::size_t>(shape.patch_size);
  return static_cast<std::size_t>(dx + s) + static_cast<std::size_t>(dy + s) * m +
         (node_id - 1) * m * m;
}

DictCoord dict_coord(std::size_t index, const DictionaryShape& shape) {
  require_odd_patch_size(shape.patch_size);
  if (index >= shape.pixel_count()) {
    fail(ErrorCode::kBounds, "dictionary index out of range");
  }
  const auto m = static_cast<std::size_t>(shape.patch_size);
  const std::size_t area = m * m;
  const std::size_t within = index % area;
  const int s = shape.half();
  return {static_cast<int>(within % m) - s, static_cast<int>(within / m) - s,
          index / area + 1};
}

}  // namespace patchprop
