// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_PROPAGATION_HPP
#define PATCHPROP_PROPAGATION_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "patchprop/graph.hpp"
#include "patchprop/grid.hpp"

namespace patchprop {

inline constexpr int kMaxClasses = 255;

/// Sparse user labels: at most one class (1..C) per pixel, latest write wins.
class UserMarking {
 public:
  UserMarking() = default;
  // Throws kConfig unless 2 <= classes <= kMaxClasses.
  UserMarking(std::size_t pixel_count, int classes);

  // Throws kBounds for a pixel outside the grid, kUnknownClass for a class
  // outside 1..C.
  void mark(std::size_t pixel, int cls);
  void erase(std::size_t pixel);
  void clear() { entries_.clear(); }

  std::optional<int> class_at(std::size_t pixel) const;
  std::size_t pixel_count() const noexcept { return pixel_count_; }
  int classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::map<std::uint32_t, int>& entries() const noexcept { return entries_; }

  friend bool operator==(const UserMarking&, const UserMarking&) = default;

 private:
  std::size_t pixel_count_ = 0;
  int classes_ = 0;
  std::map<std::uint32_t, int> entries_;
};

struct UpdateOptions {
  int steps = 2;           // 1 or 2 diffusion steps
  bool binarise = true;    // two-step only
  bool overwrite = true;   // two-step only
  double epsilon = 1e-6;   // tie tolerance for binarise and segment

  // Throws kConfig for steps outside {1,2} or a negative epsilon.
  void validate() const;
  friend bool operator==(const UpdateOptions&, const UpdateOptions&) = default;
};

// Marked pixels become one-hot rows, everything else 1/C.
LabelStack fill_unlabeled(const UserMarking& marks);

// Stencil walks the centre-id image; sparse multiplies the stored B / B^T.
enum class ProductKernel { kStencil, kSparse };

// P = T2 (T1 L).
ProbabilityStack propagate_once(const LabelStack& labels, const TransformPair& transforms,
                                ProductKernel kernel = ProductKernel::kStencil);

// Rows whose maximum beats the runner-up by more than epsilon become one-hot;
// ambiguous rows are copied unchanged.
LabelStack binarise(const ProbabilityStack& probabilities, double epsilon);

// Replaces the rows of marked pixels by their one-hot labels.
template <typename Tag>
LayerStack<Tag> overwrite(LayerStack<Tag> stack, const UserMarking& marks) {
  if (stack.rows() != marks.pixel_count() ||
      stack.layers() != static_cast<std::size_t>(marks.classes())) {
    fail(ErrorCode::kShapeMismatch, "stack shape does not match the marking");
  }
  for (const auto& [pixel, cls] : marks.entries()) {
    auto row = stack.row(pixel);
    std::fill(row.begin(), row.end(), 0.0);
    row[static_cast<std::size_t>(cls - 1)] = 1.0;
  }
  return stack;
}

struct UpdateResult {
  ProbabilityStack probabilities;
  // The label stack fed into the last diffusion step; T1 of it gives the
  // dictionary probabilities that reproduce `probabilities` through T2.
  LabelStack final_labels;
};

/// One interactive update. With one step: P = T2 T1 fill(marks). With two:
/// L1 = T2 T1 fill(marks), optionally binarised, then optionally overwritten
/// with the marks (in that order), and P = T2 T1 L1.
UpdateResult update_detailed(const UserMarking& marks, const TransformPair& transforms,
                             const UpdateOptions& options,
                             ProductKernel kernel = ProductKernel::kStencil);
ProbabilityStack update(const UserMarking& marks, const TransformPair& transforms,
                        const UpdateOptions& options,
                        ProductKernel kernel = ProductKernel::kStencil);

// Per-pixel class 1..C of the unique maximum, 0 when the top two are within
// epsilon.
std::vector<std::uint8_t> segment(const ProbabilityStack& probabilities, double epsilon);

}  // namespace patchprop

#endif  // PATCHPROP_PROPAGATION_HPP
