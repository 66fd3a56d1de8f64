// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_FEATURES_HPP
#define PATCHPROP_FEATURES_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "patchprop/grid.hpp"

namespace patchprop {

enum class ExtractorKind : std::uint32_t {
  kIntensityPatch = 1,
  kMultichannelPatch = 2,
};

const char* extractor_kind_name(ExtractorKind kind);
ExtractorKind parse_extractor_kind(const std::string& name);

// Feature values are laid out dy-major, then dx, then channel. Persisted
// dictionaries record this tag; bump it if the layout ever changes.
inline constexpr std::uint32_t kFeatureOrderDyDxChannel = 1;

/// Computes a feature vector for a pixel from its M x M neighbourhood.
///
/// Extraction is only defined at centres whose window lies inside the grid;
/// the patch side M also fixes the footprint linking image pixels to
/// dictionary pixels.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;

  virtual ExtractorKind kind() const = 0;
  int patch_size() const noexcept { return patch_size_; }
  int half() const noexcept { return (patch_size_ - 1) / 2; }

  // Throws kConfig if the extractor cannot handle `channels`.
  virtual std::size_t feature_length(int channels) const = 0;
  // Writes feature_length(grid.channels()) values into `out`. The centre is
  // assumed valid; use extract_patch for a checked call.
  virtual void extract(const PixelGrid& grid, PixelCoord centre,
                       std::span<double> out) const = 0;

  // True when the M x M window around `centre` lies inside the grid.
  bool has_patch(const PixelGrid& grid, PixelCoord centre) const noexcept;

 protected:
  explicit FeatureExtractor(int patch_size);

 private:
  int patch_size_;
};

// Grayscale intensities of the window. Rejects multi-channel grids.
class IntensityPatchExtractor final : public FeatureExtractor {
 public:
  explicit IntensityPatchExtractor(int patch_size) : FeatureExtractor(patch_size) {}
  ExtractorKind kind() const override { return ExtractorKind::kIntensityPatch; }
  std::size_t feature_length(int channels) const override;
  void extract(const PixelGrid& grid, PixelCoord centre,
               std::span<double> out) const override;
};

// All channels of the window concatenated per pixel (3 M^2 values on RGB).
class MultichannelPatchExtractor final : public FeatureExtractor {
 public:
  explicit MultichannelPatchExtractor(int patch_size) : FeatureExtractor(patch_size) {}
  ExtractorKind kind() const override { return ExtractorKind::kMultichannelPatch; }
  std::size_t feature_length(int channels) const override;
  void extract(const PixelGrid& grid, PixelCoord centre,
               std::span<double> out) const override;
};

std::unique_ptr<FeatureExtractor> make_extractor(ExtractorKind kind, int patch_size);

// Checked single-patch extraction. Throws kNoPatch for a boundary centre.
std::vector<double> extract_patch(const PixelGrid& grid, PixelCoord centre,
                                  const FeatureExtractor& extractor);

/// A flat list of equally sized feature vectors with their source centres.
struct FeatureSet {
  std::size_t dimension = 0;
  std::vector<double> values;        // size() * dimension
  std::vector<PixelCoord> centres;

  std::size_t size() const noexcept { return centres.size(); }
  std::span<const double> operator[](std::size_t i) const noexcept {
    return {values.data() + i * dimension, dimension};
  }
};

/// Extracts features at up to `target` valid centres chosen by stratified
/// grid sampling with seeded jitter. A target at or above the number of valid
/// centres returns every valid centre in raster order.
///
/// Throws kConfig if the grid is smaller than the patch.
FeatureSet extract_training_set(const PixelGrid& grid, const FeatureExtractor& extractor,
                                std::size_t target, std::uint64_t seed);

// Number of centres with a full window: (X - 2s)(Y - 2s), or 0.
std::size_t valid_centre_count(int width, int height, int patch_size);

}  // namespace patchprop

#endif  // PATCHPROP_FEATURES_HPP
