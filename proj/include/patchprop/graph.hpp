// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_GRAPH_HPP
#define PATCHPROP_GRAPH_HPP

#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "patchprop/dictionary.hpp"
#include "patchprop/grid.hpp"

namespace patchprop {

/// Compressed-row 0/1 matrix: row r holds columns cols[offsets[r]..offsets[r+1]),
/// sorted ascending.
struct SparsePattern {
  std::size_t rows = 0;
  std::size_t cols_count = 0;
  std::vector<std::uint64_t> offsets;  // rows + 1
  std::vector<std::uint32_t> cols;

  std::size_t nnz() const noexcept { return cols.size(); }
  std::size_t row_length(std::size_t r) const noexcept {
    return static_cast<std::size_t>(offsets[r + 1] - offsets[r]);
  }
  std::span<const std::uint32_t> row(std::size_t r) const noexcept {
    return {cols.data() + offsets[r], row_length(r)};
  }
};

/// The n x m image/dictionary biadjacency matrix B together with B^T.
///
/// Image pixel i relates to dictionary pixel j = (dx, dy, k) when the patch
/// centred at i - (dx, dy) is assigned to node k. A fixed image pixel and
/// displacement identify a single patch centre, so no (i, j) pair is produced
/// twice and every stored entry is exactly 1.
class BiadjacencyGraph {
 public:
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int patch_size() const noexcept { return patch_size_; }
  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t image_pixels() const noexcept { return forward_.rows; }        // n
  std::size_t dictionary_pixels() const noexcept { return backward_.rows; }  // m
  std::size_t nnz() const noexcept { return forward_.nnz(); }

  const SparsePattern& rows() const noexcept { return forward_; }         // B
  const SparsePattern& transposed() const noexcept { return backward_; }  // B^T

  // B 1 (length n) and B^T 1 (length m).
  std::size_t image_degree(std::size_t i) const noexcept { return forward_.row_length(i); }
  std::size_t dictionary_degree(std::size_t j) const noexcept {
    return backward_.row_length(j);
  }

  // Node id of the patch centred at each image pixel, 0 on the boundary band.
  std::span<const std::uint32_t> centre_ids() const noexcept { return centre_ids_; }

  // Matrix Market coordinate export, 1-based, value = multiplicity.
  void write_matrix_market(std::ostream& out) const;

 private:
  friend BiadjacencyGraph build_biadjacency(const AssignmentImage&, int, std::size_t);

  int width_ = 0;
  int height_ = 0;
  int patch_size_ = 0;
  std::size_t node_count_ = 0;
  SparsePattern forward_;
  SparsePattern backward_;
  std::vector<std::uint32_t> centre_ids_;
};

// Throws kCorruption if `assignment` holds ids above K or a boundary/interior
// layout inconsistent with M, kConfig on an even M.
BiadjacencyGraph build_biadjacency(const AssignmentImage& assignment, int patch_size,
                                   std::size_t node_count);

/// Row-normalized transforms sharing the structure of a BiadjacencyGraph:
/// T1 = diag(B^T 1)^-1 B^T (m x n) and T2 = diag(B 1)^-1 B (n x m).
///
/// Each row is stored as its pattern plus one weight, the reciprocal of the
/// row length. Rows of zero length (empty dictionary pixels for T1) have
/// weight 0 and are flagged in the mask.
class TransformPair {
 public:
  std::shared_ptr<const BiadjacencyGraph> graph() const noexcept { return graph_; }
  std::span<const double> t1_weights() const noexcept { return t1_weights_; }
  std::span<const double> t2_weights() const noexcept { return t2_weights_; }
  // 1 where a T1 row (dictionary pixel) has no related image pixel.
  std::span<const std::uint8_t> t1_zero_rows() const noexcept { return t1_zero_rows_; }

  std::size_t image_pixels() const noexcept { return graph_->image_pixels(); }
  std::size_t dictionary_pixels() const noexcept { return graph_->dictionary_pixels(); }

 private:
  friend TransformPair normalize(std::shared_ptr<const BiadjacencyGraph>);

  std::shared_ptr<const BiadjacencyGraph> graph_;
  std::vector<double> t1_weights_;
  std::vector<double> t2_weights_;
  std::vector<std::uint8_t> t1_zero_rows_;
};

TransformPair normalize(std::shared_ptr<const BiadjacencyGraph> graph);

// T1 V: averages image values onto dictionary pixels (n x C -> m x C).
ValueStack apply_image_to_dict(const TransformPair& transforms, const ValueStack& values);
// T2 W: averages dictionary values back onto the image (m x C -> n x C).
ValueStack apply_dict_to_image(const TransformPair& transforms, const ValueStack& values);

// Stencil kernels: the same products computed from the centre ids, one
// patch window per interior pixel.
void stencil_image_to_dict(const BiadjacencyGraph& graph, std::span<const double> weights,
                           std::span<const double> values, std::size_t layers,
                           std::span<double> out);
void stencil_dict_to_image(const BiadjacencyGraph& graph, std::span<const double> weights,
                           std::span<const double> values, std::size_t layers,
                           std::span<double> out);

// Row-scaled sparse product out = diag(weights) P V over the stored pattern.
void scaled_pattern_product(const SparsePattern& pattern, std::span<const double> weights,
                            std::span<const double> values, std::size_t layers,
                            std::span<double> out);

}  // namespace patchprop

#endif  // PATCHPROP_GRAPH_HPP
