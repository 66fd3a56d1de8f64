// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_STROKES_HPP
#define PATCHPROP_STROKES_HPP

#include <cstdint>
#include <vector>

#include "patchprop/io.hpp"
#include "patchprop/propagation.hpp"

namespace patchprop {

struct StrokePoint {
  double x = 0;
  double y = 0;
};

/// Round-brush polyline in pixel coordinates (pixel centres at integers).
/// Class 0 is the eraser.
struct Stroke {
  std::vector<StrokePoint> points;
  double radius = 1.0;
  int cls = 0;
};

// Pixels whose centre lies within `radius` of the polyline, ascending.
std::vector<std::size_t> rasterize_stroke(const Stroke& stroke, int width, int height);

// Applies strokes in order (later strokes win). Throws kUnknownClass before
// touching the marking if any class is outside 0..C.
void apply_strokes(UserMarking& marks, const std::vector<Stroke>& strokes, int width, int height);

// Marks <-> palette-index image (index = class, 0 = unmarked).
IndexedImage marks_to_image(const UserMarking& marks, int width, int height);
// Throws kShapeMismatch on a size mismatch and kUnknownClass for an index
// above C.
UserMarking marks_from_image(const IndexedImage& image, int classes);

}  // namespace patchprop

#endif  // PATCHPROP_STROKES_HPP
