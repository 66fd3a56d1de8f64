// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "patchprop/container.hpp"
#include "patchprop/strokes.hpp"

namespace patchprop {

namespace {

class Noise {
 public:
  explicit Noise(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  // Box-Muller; keeps the sequence independent of the standard library.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0;
    while (u <= 0) u = uniform();
    const double v = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u));
    spare_ = mag * std::sin(2 * std::numbers::pi * v);
    has_spare_ = true;
    return mag * std::cos(2 * std::numbers::pi * v);
  }

  int range(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  bool has_spare_ = false;
  double spare_ = 0;
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<Centre> pack_disks(Noise& rng, int width, int height, int count, double radius,
                               double gap) {
  std::vector<Centre> centres;
  const int margin = static_cast<int>(std::ceil(radius)) + 1;
  if (width <= 2 * margin || height <= 2 * margin) return centres;
  const double min_d = 2 * radius + gap;
  const long attempts = static_cast<long>(count) * 5000;
  for (long a = 0; a < attempts && static_cast<int>(centres.size()) < count; ++a) {
    const Centre c{rng.range(margin, width - 1 - margin), rng.range(margin, height - 1 - margin),
                   0, 1.0};
    bool ok = true;
    for (const auto& o : centres) {
      const double dx = c.x - o.x, dy = c.y - o.y;
      if (dx * dx + dy * dy < min_d * min_d) {
        ok = false;
        break;
      }
    }
    if (ok) centres.push_back(c);
  }
  return centres;
}

// Distance from each pixel to its nearest centre and that centre's index.
struct NearestMap {
  std::vector<double> distance;
  std::vector<int> owner;
};

NearestMap nearest_centres(const std::vector<Centre>& centres, int width, int height,
                           double reach) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  NearestMap map{std::vector<double>(n, std::numeric_limits<double>::infinity()),
                 std::vector<int>(n, -1)};
  const int r = static_cast<int>(std::ceil(reach));
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (int y = std::max(0, centres[c].y - r); y <= std::min(height - 1, centres[c].y + r); ++y) {
      for (int x = std::max(0, centres[c].x - r); x <= std::min(width - 1, centres[c].x + r); ++x) {
        const double d = std::hypot(x - centres[c].x, y - centres[c].y);
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        if (d < map.distance[i]) {
          map.distance[i] = d;
          map.owner[i] = static_cast<int>(c);
        }
      }
    }
  }
  return map;
}

void paint(IndexedImage& marks, const Stroke& stroke, const IndexedImage& truth,
           bool require_truth_match) {
  for (std::size_t p : rasterize_stroke(stroke, marks.width, marks.height)) {
    if (require_truth_match && truth.indices[p] != stroke.cls) continue;
    marks.indices[p] = static_cast<std::uint8_t>(stroke.cls);
  }
}

// Horizontal background scribbles kept clear of objects by `clearance`.
void scribble_background(IndexedImage& marks, const NearestMap& near, double clearance,
                         Noise& rng, int strokes, double brush) {
  const int w = marks.width, h = marks.height;
  for (int s = 0; s < strokes; ++s) {
    const int y = rng.range(h / 10, h - 1 - h / 10);
    const int x0 = rng.range(0, w / 2);
    const Stroke stroke{{{static_cast<double>(x0), static_cast<double>(y)},
                         {static_cast<double>(x0 + w / 3), static_cast<double>(y)}},
                        brush, 1};
    for (std::size_t p : rasterize_stroke(stroke, w, h)) {
      if (near.distance[p] > clearance) marks.indices[p] = 1;
    }
  }
}

std::vector<std::size_t> chosen_objects(Noise& rng, std::size_t total, int wanted) {
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng.engine());
  order.resize(std::min<std::size_t>(total, static_cast<std::size_t>(std::max(0, wanted))));
  return order;
}

Phantom make_disks(const PhantomParams& p) {
  Noise rng(p.seed);
  Phantom out;
  out.classes = 2;
  out.centres = pack_disks(rng, p.width, p.height, p.count, p.radius, p.min_gap);
  const NearestMap near = nearest_centres(out.centres, p.width, p.height, p.radius + 4);
  const std::size_t n = static_cast<std::size_t>(p.width) * p.height;

  out.truth = {p.width, p.height, std::vector<std::uint8_t>(n, 1)};
  std::vector<double> clean(n);
  constexpr double kBackground = 0.2, kStep = 0.4, kBump = 0.25;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = near.distance[i];
    const double coverage = clamp01(p.radius + 0.5 - d);
    const double profile = std::max(0.0, 1.0 - (d * d) / (p.radius * p.radius));
    clean[i] = kBackground + coverage * (kStep + kBump * profile);
    if (d <= p.radius) out.truth.indices[i] = 2;
  }
  for (int z = 0; z < std::max(1, p.slices); ++z) {
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = clamp01(clean[i] + p.noise * rng.gaussian());
    out.slices.emplace_back(p.width, p.height, 1, std::move(data));
  }

  out.marks = {p.width, p.height, std::vector<std::uint8_t>(n, 0)};
  for (std::size_t c : chosen_objects(rng, out.centres.size(), p.marked_objects)) {
    const auto& cc = out.centres[c];
    paint(out.marks,
          {{{static_cast<double>(cc.x), static_cast<double>(cc.y)}}, p.dot_radius, 2},
          out.truth, true);
  }
  scribble_background(out.marks, near, p.radius + 2, rng, 6, p.scribble_radius);
  return out;
}

Phantom make_two_texture(const PhantomParams& p) {
  Noise rng(p.seed);
  Phantom out;
  out.classes = 2;
  const std::size_t n = static_cast<std::size_t>(p.width) * p.height;
  const double cx = (p.width - 1) / 2.0, cy = (p.height - 1) / 2.0;
  const double inset = std::min(p.width, p.height) / 4.0;
  out.truth = {p.width, p.height, std::vector<std::uint8_t>(n, 1)};
  std::vector<double> data(n);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * p.width + x;
      const bool inside = std::hypot(x - cx, y - cy) <= inset;
      const bool high = inside ? ((x / 3 + y / 3) % 2 == 0) : ((x / 3) % 2 == 0);
      data[i] = clamp01((high ? 0.75 : 0.25) + p.noise * rng.gaussian());
      if (inside) out.truth.indices[i] = 2;
    }
  }
  out.slices.emplace_back(p.width, p.height, 1, std::move(data));
  out.centres.push_back({static_cast<int>(std::lround(cx)), static_cast<int>(std::lround(cy)), 0, 1.0});

  out.marks = {p.width, p.height, std::vector<std::uint8_t>(n, 0)};
  const double y_out = std::max(2.0, cy - inset - std::max(3.0, (cy - inset) / 2));
  paint(out.marks, {{{cx - inset, y_out}, {cx + inset, y_out}}, p.scribble_radius, 1}, out.truth,
        true);
  paint(out.marks, {{{cx - inset / 2, cy}, {cx + inset / 2, cy}}, p.scribble_radius, 2},
        out.truth, true);
  return out;
}

Phantom make_cells(const PhantomParams& p) {
  Noise rng(p.seed);
  Phantom out;
  out.classes = 3;
  out.centres = pack_disks(rng, p.width, p.height, p.count, p.radius, p.min_gap);
  const NearestMap near = nearest_centres(out.centres, p.width, p.height, p.radius + 4);
  const std::size_t n = static_cast<std::size_t>(p.width) * p.height;
  const double membrane = std::max(1.5, p.radius / 5);
  const double nucleus = p.radius / 2.5;

  constexpr double kBg[3] = {0.95, 0.92, 0.95};
  constexpr double kMembrane[3] = {0.45, 0.20, 0.50};
  constexpr double kCytoplasm[3] = {0.90, 0.60, 0.75};
  constexpr double kNucleus[3] = {0.30, 0.30, 0.70};

  out.truth = {p.width, p.height, std::vector<std::uint8_t>(n, 1)};
  std::vector<double> data(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = near.distance[i];
    const double* colour = kBg;
    if (d <= nucleus) {
      colour = kNucleus;
    } else if (d <= p.radius - membrane) {
      colour = kCytoplasm;
    } else if (d <= p.radius) {
      colour = kMembrane;
    }
    if (d <= p.radius) out.truth.indices[i] = d <= p.radius - membrane ? 3 : 2;
    for (int c = 0; c < 3; ++c) data[i * 3 + c] = clamp01(colour[c] + p.noise * rng.gaussian());
  }
  out.slices.emplace_back(p.width, p.height, 3, std::move(data));

  out.marks = {p.width, p.height, std::vector<std::uint8_t>(n, 0)};
  for (std::size_t c : chosen_objects(rng, out.centres.size(), p.marked_objects)) {
    const auto& cc = out.centres[c];
    const double x = cc.x, y = cc.y;
    paint(out.marks, {{{x, y}}, p.dot_radius, 3}, out.truth, true);
    const double ring = p.radius - membrane / 2;
    paint(out.marks, {{{x - ring, y}, {x - ring * 0.7, y - ring * 0.7}, {x, y - ring}}, 0.8, 2},
          out.truth, true);
  }
  scribble_background(out.marks, near, p.radius + 2, rng, 6, p.scribble_radius);
  return out;
}

}  // namespace

PhantomKind parse_phantom_kind(const std::string& name) {
  if (name == "disks") return PhantomKind::kDisks;
  if (name == "two-texture") return PhantomKind::kTwoTexture;
  if (name == "cells") return PhantomKind::kCells;
  fail(ErrorCode::kConfig, "unknown phantom kind '" + name + "'");
}

const char* phantom_kind_name(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::kDisks: return "disks";
    case PhantomKind::kTwoTexture: return "two-texture";
    case PhantomKind::kCells: return "cells";
  }
  return "unknown";
}

Phantom generate_phantom(const PhantomParams& params) {
  if (params.width < 8 || params.height < 8) fail(ErrorCode::kConfig, "phantom too small");
  if (!(params.noise >= 0)) fail(ErrorCode::kConfig, "noise must be non-negative");
  if (params.kind != PhantomKind::kTwoTexture && !(params.radius >= 1)) {
    fail(ErrorCode::kConfig, "object radius must be at least 1");
  }
  switch (params.kind) {
    case PhantomKind::kDisks: return make_disks(params);
    case PhantomKind::kTwoTexture: return make_two_texture(params);
    case PhantomKind::kCells: return make_cells(params);
  }
  fail(ErrorCode::kConfig, "unknown phantom kind");
}

void write_phantom(const Phantom& phantom, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  const PixelGrid& first = phantom.slices.at(0);
  const int w = first.width();
  const int h = first.height();
  if (phantom.slices.size() > 1) {
    std::vector<std::vector<std::uint16_t>> pages;
    for (const PixelGrid& s : phantom.slices) {
      std::vector<std::uint16_t> page(s.pixel_count());
      for (std::size_t i = 0; i < page.size(); ++i) page[i] = quantize_u16(s.data()[i]);
      pages.push_back(std::move(page));
    }
    write_tiff_stack_u16((root / "image.tif").string(), w, h, pages);
  } else if (first.channels() == 3) {
    std::vector<std::uint8_t> rgb(first.data().size());
    for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = quantize_u8(first.data()[i]);
    write_file_bytes((root / "image.png").string(), encode_rgb8_png(rgb, w, h));
  } else {
    std::vector<std::uint16_t> gray(first.pixel_count());
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = quantize_u16(first.data()[i]);
    write_file_bytes((root / "image.png").string(), encode_gray16_png(gray, w, h));
  }
  const auto palette = class_palette(phantom.classes);
  write_file_bytes((root / "truth.png").string(), encode_indexed_png(phantom.truth, palette));
  write_file_bytes((root / "marks.png").string(), encode_indexed_png(phantom.marks, palette));
  std::ofstream csv(root / "centres.csv");
  if (!csv) fail(ErrorCode::kIo, "cannot write centres.csv");
  write_centres_csv(csv, phantom.centres);
}

double marked_fraction(const IndexedImage& marks) {
  if (marks.indices.empty()) return 0.0;
  const auto marked = std::count_if(marks.indices.begin(), marks.indices.end(),
                                    [](std::uint8_t v) { return v != 0; });
  return static_cast<double>(marked) / static_cast<double>(marks.indices.size());
}

}  // namespace patchprop
