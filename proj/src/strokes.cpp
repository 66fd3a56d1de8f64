// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/strokes.hpp"

#include <algorithm>
#include <cmath>

namespace patchprop {

namespace {

double segment_distance_sq(double px, double py, StrokePoint a, StrokePoint b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = 0.0;
  if (len2 > 0) t = std::clamp(((px - a.x) * vx + (py - a.y) * vy) / len2, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return dx * dx + dy * dy;
}

}  // namespace

std::vector<std::size_t> rasterize_stroke(const Stroke& stroke, int width, int height) {
  std::vector<std::size_t> pixels;
  if (stroke.points.empty() || !(stroke.radius >= 0)) return pixels;
  const double r = stroke.radius;
  const double r2 = r * r;
  double min_x = stroke.points[0].x, max_x = min_x;
  double min_y = stroke.points[0].y, max_y = min_y;
  for (const auto& p : stroke.points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x - r)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(max_x + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y - r)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(max_y + r)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      bool hit = false;
      if (stroke.points.size() == 1) {
        hit = segment_distance_sq(x, y, stroke.points[0], stroke.points[0]) <= r2;
      }
      for (std::size_t s = 0; !hit && s + 1 < stroke.points.size(); ++s) {
        hit = segment_distance_sq(x, y, stroke.points[s], stroke.points[s + 1]) <= r2;
      }
      if (hit) pixels.push_back(static_cast<std::size_t>(y) * width + x);
    }
  }
  return pixels;
}

void apply_strokes(UserMarking& marks, const std::vector<Stroke>& strokes, int width,
                   int height) {
  if (marks.pixel_count() != static_cast<std::size_t>(width) * height) {
    fail(ErrorCode::kShapeMismatch, "marking does not match the stroke canvas");
  }
  for (const auto& s : strokes) {
    if (s.cls < 0 || s.cls > marks.classes()) {
      fail(ErrorCode::kUnknownClass, "stroke class " + std::to_string(s.cls) + " outside 0.." +
                                         std::to_string(marks.classes()));
    }
  }
  for (const auto& s : strokes) {
    for (std::size_t p : rasterize_stroke(s, width, height)) {
      if (s.cls == 0) {
        marks.erase(p);
      } else {
        marks.mark(p, s.cls);
      }
    }
  }
}

IndexedImage marks_to_image(const UserMarking& marks, int width, int height) {
  if (marks.pixel_count() != static_cast<std::size_t>(width) * height) {
    fail(ErrorCode::kShapeMismatch, "marking does not match the image size");
  }
  IndexedImage img{width, height, std::vector<std::uint8_t>(marks.pixel_count(), 0)};
  for (const auto& [pixel, cls] : marks.entries()) {
    img.indices[pixel] = static_cast<std::uint8_t>(cls);
  }
  return img;
}

UserMarking marks_from_image(const IndexedImage& image, int classes) {
  UserMarking marks(image.indices.size(), classes);
  if (image.indices.size() != static_cast<std::size_t>(image.width) * image.height) {
    fail(ErrorCode::kShapeMismatch, "marks image buffer does not match its size");
  }
  for (std::size_t i = 0; i < image.indices.size(); ++i) {
    if (image.indices[i] != 0) marks.mark(i, image.indices[i]);
  }
  return marks;
}

}  // namespace patchprop
