// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_GRID_HPP
#define PATCHPROP_GRID_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "patchprop/error.hpp"

namespace patchprop {

// 0-based pixel coordinate; x runs along the width, y along the height.
struct PixelCoord {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Row-major raster with one or more channels, values normalized to [0,1].
///
/// The sample for pixel (x, y), channel ch lives at
/// `(y * width + x) * channels + ch`. Instances are immutable after
/// construction.
class PixelGrid {
 public:
  PixelGrid() = default;
  // Throws kConfig when the data length does not match or a value is
  // outside [0,1] or non-finite.
  PixelGrid(int width, int height, int channels, std::vector<double> data);

  // Uniform-valued grid.
  static PixelGrid filled(int width, int height, int channels, double value);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  double at(int x, int y, int channel = 0) const;
  std::span<const double> pixel(int x, int y) const {
    const std::size_t base =
        (static_cast<std::size_t>(y) * width_ + x) * channels_;
    return {data_.data() + base, static_cast<std::size_t>(channels_)};
  }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const PixelGrid&, const PixelGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Linear image index, 0-based: x + y * width. This equals the 1-based
// convention x' + (y' - 1) * width minus one, with x' = x + 1, y' = y + 1.
std::size_t image_linear_index(PixelCoord p, int width);
// Checked variant: throws kBounds when p lies outside width x height.
std::size_t image_linear_index(PixelCoord p, int width, int height);
PixelCoord image_coord(std::size_t index, int width);

// Geometry of the dictionary grid: M x M pixels per element, K elements.
struct DictionaryShape {
  int patch_size = 0;            // M, odd
  std::size_t node_count = 0;    // K

  int half() const noexcept { return (patch_size - 1) / 2; }  // s
  std::size_t patch_area() const noexcept {
    return static_cast<std::size_t>(patch_size) * patch_size;
  }
  std::size_t pixel_count() const noexcept { return patch_area() * node_count; }  // m
};

// Throws kConfig for even or non-positive M.
void require_odd_patch_size(int patch_size);

/// Dictionary pixel index for displacement (dx, dy) within element k.
///
/// k is the 1-based node id; the result is 0-based and ranges over
/// [0, M^2 K). Throws kConfig for an even M and kBounds when a displacement
/// exceeds s or k is outside 1..K.
std::size_t dict_linear_index(int dx, int dy, std::size_t node_id,
                              const DictionaryShape& shape);

struct DictCoord {
  int dx = 0;
  int dy = 0;
  std::size_t node_id = 0;  // 1-based

  friend bool operator==(const DictCoord&, const DictCoord&) = default;
};

DictCoord dict_coord(std::size_t index, const DictionaryShape& shape);

struct LabelTag {};
struct ProbabilityTag {};
struct ValueTag {};

/// Dense rows x layers matrix stored row-major. The tag separates user label
/// stacks from probability outputs and from generic value stacks at the type
/// level; `retag` moves storage between them.
template <typename Tag>
class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(std::size_t rows, std::size_t layers, double fill = 0.0)
      : rows_(rows), layers_(layers), values_(rows * layers, fill) {}
  LayerStack(std::size_t rows, std::size_t layers, std::vector<double> values)
      : rows_(rows), layers_(layers), values_(std::move(values)) {
    if (values_.size() != rows_ * layers_) {
      fail(ErrorCode::kShapeMismatch, "stack value count does not match rows x layers");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t layers() const noexcept { return layers_; }

  std::span<double> row(std::size_t r) noexcept {
    return {values_.data() + r * layers_, layers_};
  }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * layers_, layers_};
  }
  double& operator()(std::size_t r, std::size_t c) noexcept {
    return values_[r * layers_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return values_[r * layers_ + c];
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double> release() && { return std::move(values_); }

  friend bool operator==(const LayerStack&, const LayerStack&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t layers_ = 0;
  std::vector<double> values_;
};

using LabelStack = LayerStack<LabelTag>;
using ProbabilityStack = LayerStack<ProbabilityTag>;
using ValueStack = LayerStack<ValueTag>;

template <typename To, typename From>
LayerStack<To> retag(LayerStack<From> stack) {
  const std::size_t rows = stack.rows();
  const std::size_t layers = stack.layers();
  return LayerStack<To>(rows, layers, std::move(stack).release());
}

// Extracts one layer of a stack as a contiguous vector.
template <typename Tag>
std::vector<double> layer_of(const LayerStack<Tag>& stack, std::size_t layer) {
  std::vector<double> out(stack.rows());
  for (std::size_t r = 0; r < stack.rows(); ++r) out[r] = stack(r, layer);
  return out;
}

}  // namespace patchprop

#endif  // PATCHPROP_GRID_HPP
