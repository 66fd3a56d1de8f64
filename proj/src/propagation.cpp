// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/propagation.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace patchprop {

UserMarking::UserMarking(std::size_t pixel_count, int classes)
    : pixel_count_(pixel_count), classes_(classes) {
  if (classes < 2 || classes > kMaxClasses) {
    fail(ErrorCode::kConfig, "class count must be within 2.." + std::to_string(kMaxClasses));
  }
  if (pixel_count >= std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kConfig, "marking grid too large");
  }
}

void UserMarking::mark(std::size_t pixel, int cls) {
  if (pixel >= pixel_count_) fail(ErrorCode::kBounds, "marked pixel outside the image");
  if (cls < 1 || cls > classes_) {
    fail(ErrorCode::kUnknownClass, "class " + std::to_string(cls) + " outside 1.." +
                                       std::to_string(classes_));
  }
  entries_[static_cast<std::uint32_t>(pixel)] = cls;
}

void UserMarking::erase(std::size_t pixel) { entries_.erase(static_cast<std::uint32_t>(pixel)); }

std::optional<int> UserMarking::class_at(std::size_t pixel) const {
  auto it = entries_.find(static_cast<std::uint32_t>(pixel));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void UpdateOptions::validate() const {
  if (steps != 1 && steps != 2) fail(ErrorCode::kConfig, "steps must be 1 or 2");
  if (!(epsilon >= 0.0)) fail(ErrorCode::kConfig, "epsilon must be non-negative");
}

LabelStack fill_unlabeled(const UserMarking& marks) {
  const auto classes = static_cast<std::size_t>(marks.classes());
  LabelStack labels(marks.pixel_count(), classes, 1.0 / static_cast<double>(classes));
  return overwrite(std::move(labels), marks);
}

ProbabilityStack propagate_once(const LabelStack& labels, const TransformPair& transforms,
                                ProductKernel kernel) {
  if (labels.rows() != transforms.image_pixels()) {
    fail(ErrorCode::kShapeMismatch, "label stack rows do not match the image");
  }
  const auto& graph = *transforms.graph();
  ValueStack dict(transforms.dictionary_pixels(), labels.layers());
  ProbabilityStack out(labels.rows(), labels.layers());
  if (kernel == ProductKernel::kSparse) {
    scaled_pattern_product(graph.transposed(), transforms.t1_weights(), labels.values(),
                           labels.layers(), dict.values());
    scaled_pattern_product(graph.rows(), transforms.t2_weights(), dict.values(),
                           labels.layers(), out.values());
  } else {
    stencil_image_to_dict(graph, transforms.t1_weights(), labels.values(), labels.layers(),
                          dict.values());
    stencil_dict_to_image(graph, transforms.t2_weights(), dict.values(), labels.layers(),
                          out.values());
  }
  return out;
}

namespace {

struct RowPeak {
  std::size_t argmax = 0;
  bool unique = false;
};

RowPeak row_peak(std::span<const double> row, double epsilon) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < row.size(); ++c)
    if (c != best) runner_up = std::max(runner_up, row[c]);
  return {best, row[best] - runner_up > epsilon};
}

}  // namespace

LabelStack binarise(const ProbabilityStack& probabilities, double epsilon) {
  LabelStack out(probabilities.rows(), probabilities.layers());
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    const auto in = probabilities.row(r);
    auto dst = out.row(r);
    const RowPeak peak = row_peak(in, epsilon);
    if (peak.unique) {
      dst[peak.argmax] = 1.0;
    } else {
      std::copy(in.begin(), in.end(), dst.begin());
    }
  }
  return out;
}

UpdateResult update_detailed(const UserMarking& marks, const TransformPair& transforms,
                             const UpdateOptions& options, ProductKernel kernel) {
  options.validate();
  if (marks.pixel_count() != transforms.image_pixels()) {
    fail(ErrorCode::kShapeMismatch, "marking does not match the image size");
  }
  UpdateResult result;
  result.final_labels = fill_unlabeled(marks);
  if (options.steps == 2) {
    ProbabilityStack first = propagate_once(result.final_labels, transforms, kernel);
    LabelStack mid = options.binarise ? binarise(first, options.epsilon)
                                      : retag<LabelTag>(std::move(first));
    if (options.overwrite) mid = overwrite(std::move(mid), marks);
    result.final_labels = std::move(mid);
  }
  result.probabilities = propagate_once(result.final_labels, transforms, kernel);
  return result;
}

ProbabilityStack update(const UserMarking& marks, const TransformPair& transforms,
                        const UpdateOptions& options, ProductKernel kernel) {
  return update_detailed(marks, transforms, options, kernel).probabilities;
}

std::vector<std::uint8_t> segment(const ProbabilityStack& probabilities, double epsilon) {
  if (probabilities.layers() > static_cast<std::size_t>(kMaxClasses)) {
    fail(ErrorCode::kConfig, "too many classes for a label map");
  }
  std::vector<std::uint8_t> labels(probabilities.rows(), 0);
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    const RowPeak peak = row_peak(probabilities.row(r), epsilon);
    if (peak.unique) labels[r] = static_cast<std::uint8_t>(peak.argmax + 1);
  }
  return labels;
}

}  // namespace patchprop
