// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_POSTPROC_HPP
#define PATCHPROP_POSTPROC_HPP

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "patchprop/grid.hpp"

namespace patchprop {

/// Class labels on a width x height x depth lattice, x fastest. A 2D label
/// map is a volume of depth 1. Label 0 means unresolved.
struct LabelVolume {
  int width = 0;
  int height = 0;
  int depth = 1;
  std::vector<std::uint8_t> labels;

  std::size_t index(int x, int y, int z) const noexcept {
    return (static_cast<std::size_t>(z) * height + y) * width + x;
  }
  std::uint8_t at(int x, int y, int z = 0) const { return labels[index(x, y, z)]; }

  friend bool operator==(const LabelVolume&, const LabelVolume&) = default;
};

/// Reassigns face-connected components of class `cls` (4-connectivity in 2D,
/// 6 in 3D) with fewer than `min_size` voxels to the most frequent label
/// among their face neighbours. Nonzero neighbour labels win over 0; ties go
/// to the smaller label. A component without neighbours is kept.
LabelVolume remove_small_components(LabelVolume volume, std::uint8_t cls, std::size_t min_size);

struct Centre {
  int x = 0;
  int y = 0;
  int slice = 0;
  double score = 0.0;

  friend bool operator==(const Centre&, const Centre&) = default;
};

struct CentreOptions {
  int window_radius = 1;      // local maximum window is (2r+1)^2
  double min_distance = 3.0;  // minimum spacing between accepted centres
  double threshold = 0.5;     // minimum probability
  double sigma = 2.0;         // Gaussian pre-smoothing, 0 disables
};

// Separable Gaussian blur truncated at ceil(3 sigma), edge-clamped,
// kernel normalized to 1. sigma <= 0 returns the input unchanged.
std::vector<double> gaussian_smooth(std::span<const double> layer, int width, int height,
                                    double sigma);

/// Local maxima of a (smoothed) probability layer, greedily thinned to `min_distance`,
/// sorted by descending score.
///
/// A pixel qualifies when it is above the threshold, no value in its window
/// exceeds it, at least one is strictly lower, and no equal-valued window
/// pixel precedes it in raster order (so a flat plateau yields one peak and a
/// flat image none). Threshold and score refer to the smoothed layer.
std::vector<Centre> detect_centres(std::span<const double> layer, int width, int height,
                                   const CentreOptions& options, int slice = 0);

/// Instance map from centres: every pixel whose centre-class probability
/// exceeds its boundary-class probability joins its nearest centre
/// (instance id = index + 1); other pixels get 0.
std::vector<std::uint32_t> estimate_cell_extent(std::span<const double> centre_layer,
                                                std::span<const double> boundary_layer,
                                                int width, int height,
                                                std::span<const Centre> centres);

// CSV with header "x,y,slice,score".
void write_centres_csv(std::ostream& out, std::span<const Centre> centres);

}  // namespace patchprop

#endif  // PATCHPROP_POSTPROC_HPP
