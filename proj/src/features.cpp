// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/features.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace patchprop {

const char* extractor_kind_name(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::kIntensityPatch: return "intensity";
    case ExtractorKind::kMultichannelPatch: return "multichannel";
  }
  return "unknown";
}

ExtractorKind parse_extractor_kind(const std::string& name) {
  if (name == "intensity" || name == "intensity-patch") return ExtractorKind::kIntensityPatch;
  if (name == "multichannel" || name == "multichannel-patch" || name == "rgb") {
    return ExtractorKind::kMultichannelPatch;
  }
  fail(ErrorCode::kConfig, "unknown extractor kind '" + name + "'");
}

FeatureExtractor::FeatureExtractor(int patch_size) : patch_size_(patch_size) {
  require_odd_patch_size(patch_size);
}

bool FeatureExtractor::has_patch(const PixelGrid& grid, PixelCoord centre) const noexcept {
  const int s = half();
  return centre.x >= s && centre.y >= s && centre.x < grid.width() - s &&
         centre.y < grid.height() - s;
}

std::size_t IntensityPatchExtractor::feature_length(int channels) const {
  if (channels != 1) {
    fail(ErrorCode::kConfig,
         "intensity extractor needs a single-channel image; use the multichannel extractor");
  }
  return static_cast<std::size_t>(patch_size()) * patch_size();
}

void IntensityPatchExtractor::extract(const PixelGrid& grid, PixelCoord centre,
                                      std::span<double> out) const {
  const int s = half();
  const auto data = grid.data();
  const auto width = static_cast<std::size_t>(grid.width());
  std::size_t k = 0;
  for (int dy = -s; dy <= s; ++dy) {
    const double* row = data.data() + (centre.y + dy) * width + (centre.x - s);
    for (int dx = 0; dx < patch_size(); ++dx) out[k++] = row[dx];
  }
}

std::size_t MultichannelPatchExtractor::feature_length(int channels) const {
  if (channels < 1) fail(ErrorCode::kConfig, "image has no channels");
  return static_cast<std::size_t>(patch_size()) * patch_size() * channels;
}

void MultichannelPatchExtractor::extract(const PixelGrid& grid, PixelCoord centre,
                                         std::span<double> out) const {
  const int s = half();
  const auto data = grid.data();
  const auto width = static_cast<std::size_t>(grid.width());
  const auto ch = static_cast<std::size_t>(grid.channels());
  const std::size_t span_len = static_cast<std::size_t>(patch_size()) * ch;
  std::size_t k = 0;
  for (int dy = -s; dy <= s; ++dy) {
    const double* row = data.data() + ((centre.y + dy) * width + (centre.x - s)) * ch;
    std::copy(row, row + span_len, out.begin() + static_cast<std::ptrdiff_t>(k));
    k += span_len;
  }
}

std::unique_ptr<FeatureExtractor> make_extractor(ExtractorKind kind, int patch_size) {
  switch (kind) {
    case ExtractorKind::kIntensityPatch:
      return std::make_unique<IntensityPatchExtractor>(patch_size);
    case ExtractorKind::kMultichannelPatch:
      return std::make_unique<MultichannelPatchExtractor>(patch_size);
  }
  fail(ErrorCode::kConfig, "unknown extractor kind");
}

std::vector<double> extract_patch(const PixelGrid& grid, PixelCoord centre,
                                  const FeatureExtractor& extractor) {
  if (!extractor.has_patch(grid, centre)) {
    fail(ErrorCode::kNoPatch, "no full patch around (" + std::to_string(centre.x) + "," +
                                  std::to_string(centre.y) + ")");
  }
  std::vector<double> out(extractor.feature_length(grid.channels()));
  extractor.extract(grid, centre, out);
  return out;
}

std::size_t valid_centre_count(int width, int height, int patch_size) {
  const int s = (patch_size - 1) / 2;
  if (width < patch_size || height < patch_size) return 0;
  return static_cast<std::size_t>(width - 2 * s) * static_cast<std::size_t>(height - 2 * s);
}

namespace {

std::vector<PixelCoord> stratified_centres(int inner_w, int inner_h, int s,
                                           std::size_t target, std::uint64_t seed) {
  // Smallest gx * gy >= target cell grid roughly matching the aspect ratio;
  // every cell is non-empty because gx <= inner_w and gy <= inner_h.
  const double aspect = static_cast<double>(inner_w) / inner_h;
  auto gx = static_cast<std::size_t>(
      std::clamp(std::lround(std::sqrt(static_cast<double>(target) * aspect)), 1L,
                 static_cast<long>(inner_w)));
  std::size_t gy = std::clamp<std::size_t>((target + gx - 1) / gx, 1,
                                           static_cast<std::size_t>(inner_h));
  while (gx * gy < target) {
    if (gx < static_cast<std::size_t>(inner_w)) {
      ++gx;
    } else {
      ++gy;
    }
  }
  const std::size_t cells = gx * gy;

  std::mt19937_64 rng(seed);
  auto jitter = [&rng](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo));
  };

  std::vector<PixelCoord> centres;
  centres.reserve(target);
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t cell = i * cells / target;  // evenly spread subset of cells
    const std::size_t cx = cell % gx;
    const std::size_t cy = cell / gx;
    const std::size_t x0 = cx * inner_w / gx, x1 = (cx + 1) * inner_w / gx;
    const std::size_t y0 = cy * inner_h / gy, y1 = (cy + 1) * inner_h / gy;
    centres.push_back({static_cast<int>(jitter(x0, x1)) + s,
                       static_cast<int>(jitter(y0, y1)) + s});
  }
  return centres;
}

}  // namespace

FeatureSet extract_training_set(const PixelGrid& grid, const FeatureExtractor& extractor,
                                std::size_t target, std::uint64_t seed) {
  const int m = extractor.patch_size();
  const int s = extractor.half();
  if (grid.width() < m || grid.height() < m) {
    fail(ErrorCode::kConfig, "image smaller than the patch size");
  }
  const int inner_w = grid.width() - 2 * s;
  const int inner_h = grid.height() - 2 * s;
  const std::size_t population = valid_centre_count(grid.width(), grid.height(), m);

  FeatureSet set;
  set.dimension = extractor.feature_length(grid.channels());
  if (target >= population) {
    set.centres.reserve(population);
    for (int y = 0; y < inner_h; ++y)
      for (int x = 0; x < inner_w; ++x) set.centres.push_back({x + s, y + s});
  } else if (target > 0) {
    set.centres = stratified_centres(inner_w, inner_h, s, target, seed);
  }

  set.values.resize(set.centres.size() * set.dimension);
  for (std::size_t i = 0; i < set.centres.size(); ++i) {
    extractor.extract(grid, set.centres[i],
                      {set.values.data() + i * set.dimension, set.dimension});
  }
  return set;
}

}  // namespace patchprop
