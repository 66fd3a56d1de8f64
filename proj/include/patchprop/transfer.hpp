// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_TRANSFER_HPP
#define PATCHPROP_TRANSFER_HPP

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "patchprop/dictionary.hpp"
#include "patchprop/graph.hpp"
#include "patchprop/postproc.hpp"
#include "patchprop/propagation.hpp"

namespace patchprop {

struct Provenance {
  std::string training_image;
  int image_width = 0;
  int image_height = 0;
  std::size_t marked_pixels = 0;
  UpdateOptions options;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Dictionary plus learned per-dictionary-pixel class probabilities D (m x C).
///
/// Persisted in the dictionary container with extra "DPRB", "DMSK" and
/// "META" sections.
struct TrainedModel {
  std::shared_ptr<const KMeansTree> tree;
  int classes = 0;
  ValueStack dictionary_probabilities;
  std::vector<std::uint8_t> masked;  // 1 for dictionary pixels with no data
  Provenance provenance;

  std::vector<std::uint8_t> serialize() const;
  // Throws kCorruption on inconsistent sections.
  static TrainedModel deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static TrainedModel load(const std::string& path);
};

// D = T1 L; masked rows are zero.
ValueStack dictionary_probabilities(const LabelStack& labels, const TransformPair& transforms);

TrainedModel make_model(std::shared_ptr<const KMeansTree> tree, const LabelStack& final_labels,
                        const TransformPair& transforms, Provenance provenance);

// P^ = T2^ D for a new image assigned to the model's dictionary. Throws
// kConfig when the image is smaller than the patch or channels differ.
ProbabilityStack apply_to_image(const PixelGrid& image, const TrainedModel& model);

struct StackOptions {
  double epsilon = 1e-6;           // ties in the label volume
  std::size_t min_component = 0;   // 0 disables small-component removal
  std::vector<int> component_classes;  // empty = every class
  bool detect_centres = false;
  int centre_class = 0;            // 0 = last class
  CentreOptions centre_options;
  unsigned workers = 0;            // 0 = hardware concurrency
};

struct StackResult {
  int width = 0;
  int height = 0;
  int classes = 0;
  std::vector<ProbabilityStack> probabilities;  // one per slice
  LabelVolume labels;
  std::vector<Centre> centres;
};

// Called after each finished slice with (done, total); may be invoked from
// worker threads, one call at a time.
using ProgressCallback = std::function<void(std::size_t, std::size_t)>;

// Applies the model slice by slice. Throws kConfig naming the first
// mismatched slice index.
StackResult apply_to_stack(std::span<const PixelGrid> slices, const TrainedModel& model,
                           const StackOptions& options, const ProgressCallback& progress = {});

/// Writes a stack result into `dir`:
///   prob_class<c>.tif  one 16-bit page per slice, value = round(65535 p)
///   labels.tif         one 8-bit page per slice, class id or 0
///   probabilities.npy  float64, shape (slices, height, width, classes)
///   centres.csv        when centres were requested
void write_stack_outputs(const StackResult& result, const std::string& dir,
                         bool with_centres);

}  // namespace patchprop

#endif  // PATCHPROP_TRANSFER_HPP
