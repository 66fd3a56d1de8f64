// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/graph.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <string>

#include "patchprop/parallel.hpp"

namespace patchprop {

namespace {

void validate_assignment(const AssignmentImage& a, int s, std::size_t node_count) {
  const int w = a.width();
  const int h = a.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint32_t k = a.at(x, y);
      const bool interior = x >= s && y >= s && x < w - s && y < h - s;
      if (k > node_count) {
        fail(ErrorCode::kCorruption, "assignment id " + std::to_string(k) + " exceeds K=" +
                                         std::to_string(node_count));
      }
      if (interior != (k != 0)) {
        fail(ErrorCode::kCorruption, "assignment boundary band inconsistent with patch size");
      }
    }
  }
}

template <std::size_t Layers>
void product_fixed(const SparsePattern& p, std::span<const double> weights,
                   const double* values, double* out, std::size_t lo, std::size_t hi) {
  for (std::size_t r = lo; r < hi; ++r) {
    std::array<double, Layers> acc{};
    const std::uint32_t* c = p.cols.data() + p.offsets[r];
    const std::uint32_t* end = p.cols.data() + p.offsets[r + 1];
    for (; c != end; ++c) {
      const double* v = values + static_cast<std::size_t>(*c) * Layers;
      for (std::size_t l = 0; l < Layers; ++l) acc[l] += v[l];
    }
    const double wgt = weights[r];
    for (std::size_t l = 0; l < Layers; ++l) out[r * Layers + l] = acc[l] * wgt;
  }
}

void product_generic(const SparsePattern& p, std::span<const double> weights,
                     const double* values, std::size_t layers, double* out, std::size_t lo,
                     std::size_t hi) {
  for (std::size_t r = lo; r < hi; ++r) {
    double* o = out + r * layers;
    std::fill(o, o + layers, 0.0);
    for (std::uint32_t c : p.row(r)) {
      const double* v = values + static_cast<std::size_t>(c) * layers;
      for (std::size_t l = 0; l < layers; ++l) o[l] += v[l];
    }
    for (std::size_t l = 0; l < layers; ++l) o[l] *= weights[r];
  }
}

}  // namespace

BiadjacencyGraph build_biadjacency(const AssignmentImage& assignment, int patch_size,
                                   std::size_t node_count) {
  require_odd_patch_size(patch_size);
  const int w = assignment.width();
  const int h = assignment.height();
  const int s = (patch_size - 1) / 2;
  if (w < patch_size || h < patch_size) {
    fail(ErrorCode::kConfig, "image smaller than the patch size");
  }
  const DictionaryShape shape{patch_size, node_count};
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const std::size_t m = shape.pixel_count();
  if (n >= std::numeric_limits<std::uint32_t>::max() ||
      m >= std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kConfig, "graph too large for 32-bit indices");
  }
  validate_assignment(assignment, s, node_count);

  BiadjacencyGraph g;
  g.width_ = w;
  g.height_ = h;
  g.patch_size_ = patch_size;
  g.node_count_ = node_count;

  // Row i = (x, y) relates to (dx, dy, A(x - dx, y - dy)) for every
  // displacement whose patch centre lies in the interior.
  auto centre_span = [s](int coord, int extent) {
    const int lo = std::max(coord - s, s);
    const int hi = std::min(coord + s, extent - 1 - s);
    return std::max(0, hi - lo + 1);
  };
  SparsePattern& fwd = g.forward_;
  fwd.rows = n;
  fwd.cols_count = m;
  fwd.offsets.assign(n + 1, 0);
  for (int y = 0; y < h; ++y) {
    const int ny = centre_span(y, h);
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      fwd.offsets[i + 1] = fwd.offsets[i] + static_cast<std::uint64_t>(ny * centre_span(x, w));
    }
  }
  fwd.cols.resize(fwd.offsets[n]);
  const auto ids = assignment.ids();
  const auto area = static_cast<std::uint32_t>(shape.patch_area());
  parallel_for(0, static_cast<std::size_t>(h), 16, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t yy = lo; yy < hi; ++yy) {
      const int y = static_cast<int>(yy);
      for (int x = 0; x < w; ++x) {
        const std::size_t i = yy * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
        std::uint32_t* out = fwd.cols.data() + fwd.offsets[i];
        std::uint32_t* cursor = out;
        for (int dy = -s; dy <= s; ++dy) {
          const int cy = y - dy;
          if (cy < s || cy >= h - s) continue;
          for (int dx = -s; dx <= s; ++dx) {
            const int cx = x - dx;
            if (cx < s || cx >= w - s) continue;
            const std::uint32_t k = ids[static_cast<std::size_t>(cy) * w + cx];
            *cursor++ = static_cast<std::uint32_t>((dx + s) + (dy + s) * patch_size) +
                        (k - 1) * area;
          }
        }
        std::sort(out, cursor);
        if (std::adjacent_find(out, cursor) != cursor) {
          fail(ErrorCode::kCorruption, "duplicate relation in biadjacency row");
        }
      }
    }
  });

  g.centre_ids_.assign(ids.begin(), ids.end());

  // B^T by counting sort; scanning rows in order leaves each column sorted.
  SparsePattern& bwd = g.backward_;
  bwd.rows = m;
  bwd.cols_count = n;
  bwd.offsets.assign(m + 1, 0);
  for (std::uint32_t j : fwd.cols) ++bwd.offsets[j + 1];
  for (std::size_t j = 0; j < m; ++j) bwd.offsets[j + 1] += bwd.offsets[j];
  bwd.cols.resize(fwd.cols.size());
  std::vector<std::uint64_t> cursor(bwd.offsets.begin(), bwd.offsets.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t j : fwd.row(i)) bwd.cols[cursor[j]++] = static_cast<std::uint32_t>(i);
  }
  return g;
}

void BiadjacencyGraph::write_matrix_market(std::ostream& out) const {
  out << "%%MatrixMarket matrix coordinate integer general\n";
  out << "% image/dictionary biadjacency, width=" << width_ << " height=" << height_
      << " patch_size=" << patch_size_ << " nodes=" << node_count_ << "\n";
  out << image_pixels() << ' ' << dictionary_pixels() << ' ' << nnz() << '\n';
  for (std::size_t i = 0; i < image_pixels(); ++i) {
    for (std::uint32_t j : forward_.row(i)) out << (i + 1) << ' ' << (j + 1) << " 1\n";
  }
}

TransformPair normalize(std::shared_ptr<const BiadjacencyGraph> graph) {
  TransformPair t;
  const auto& fwd = graph->rows();
  const auto& bwd = graph->transposed();
  t.t2_weights_.resize(fwd.rows);
  for (std::size_t i = 0; i < fwd.rows; ++i) {
    const std::size_t deg = fwd.row_length(i);
    t.t2_weights_[i] = deg == 0 ? 0.0 : 1.0 / static_cast<double>(deg);
  }
  t.t1_weights_.resize(bwd.rows);
  t.t1_zero_rows_.assign(bwd.rows, 0);
  for (std::size_t j = 0; j < bwd.rows; ++j) {
    const std::size_t deg = bwd.row_length(j);
    if (deg == 0) {
      t.t1_zero_rows_[j] = 1;
      t.t1_weights_[j] = 0.0;
    } else {
      t.t1_weights_[j] = 1.0 / static_cast<double>(deg);
    }
  }
  t.graph_ = std::move(graph);
  return t;
}

void scaled_pattern_product(const SparsePattern& pattern, std::span<const double> weights,
                            std::span<const double> values, std::size_t layers,
                            std::span<double> out) {
  if (values.size() != pattern.cols_count * layers || out.size() != pattern.rows * layers ||
      weights.size() != pattern.rows) {
    fail(ErrorCode::kShapeMismatch, "sparse product operand shapes disagree");
  }
  const double* v = values.data();
  double* o = out.data();
  parallel_for(0, pattern.rows, 4096, [&](std::size_t lo, std::size_t hi) {
    switch (layers) {
      case 1: product_fixed<1>(pattern, weights, v, o, lo, hi); break;
      case 2: product_fixed<2>(pattern, weights, v, o, lo, hi); break;
      case 3: product_fixed<3>(pattern, weights, v, o, lo, hi); break;
      case 4: product_fixed<4>(pattern, weights, v, o, lo, hi); break;
      default: product_generic(pattern, weights, v, layers, o, lo, hi); break;
    }
  });
}

void stencil_image_to_dict(const BiadjacencyGraph& graph, std::span<const double> weights,
                           std::span<const double> values, std::size_t layers,
                           std::span<double> out) {
  const std::size_t m = graph.dictionary_pixels();
  if (values.size() != graph.image_pixels() * layers || out.size() != m * layers ||
      weights.size() != m) {
    fail(ErrorCode::kShapeMismatch, "stencil operand shapes disagree");
  }
  const int w = graph.width();
  const int h = graph.height();
  const int mp = graph.patch_size();
  const int s = (mp - 1) / 2;
  const std::size_t block = static_cast<std::size_t>(mp) * mp * layers;
  const std::size_t run = static_cast<std::size_t>(mp) * layers;
  const auto ids = graph.centre_ids();
  const std::size_t interior = h > 2 * s ? static_cast<std::size_t>(h - 2 * s) : 0;

  const unsigned workers = std::max<unsigned>(
      1, std::min<unsigned>(worker_threads(), static_cast<unsigned>(interior / 32)));
  std::vector<std::vector<double>> partial(workers > 1 ? workers - 1 : 0);
  std::fill(out.begin(), out.end(), 0.0);
  auto accumulate = [&](double* acc, std::size_t lo, std::size_t hi) {
    for (std::size_t row = lo; row < hi; ++row) {
      const int cy = static_cast<int>(row) + s;
      for (int cx = s; cx < w - s; ++cx) {
        const std::uint32_t k = ids[static_cast<std::size_t>(cy) * w + cx];
        double* dst = acc + (k - 1) * block;
        for (int dy = -s; dy <= s; ++dy) {
          const double* src =
              values.data() + (static_cast<std::size_t>(cy + dy) * w + (cx - s)) * layers;
          double* d = dst + static_cast<std::size_t>(dy + s) * run;
          for (std::size_t q = 0; q < run; ++q) d[q] += src[q];
        }
      }
    }
  };
  parallel_for(0, workers, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t part = lo; part < hi; ++part) {
      double* acc = out.data();
      if (part > 0) {
        partial[part - 1].assign(out.size(), 0.0);
        acc = partial[part - 1].data();
      }
      accumulate(acc, interior * part / workers, interior * (part + 1) / workers);
    }
  });
  for (const auto& p : partial) {
    for (std::size_t q = 0; q < out.size(); ++q) out[q] += p[q];
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t l = 0; l < layers; ++l) out[j * layers + l] *= weights[j];
  }
}

void stencil_dict_to_image(const BiadjacencyGraph& graph, std::span<const double> weights,
                           std::span<const double> values, std::size_t layers,
                           std::span<double> out) {
  const std::size_t n = graph.image_pixels();
  if (values.size() != graph.dictionary_pixels() * layers || out.size() != n * layers ||
      weights.size() != n) {
    fail(ErrorCode::kShapeMismatch, "stencil operand shapes disagree");
  }
  const int w = graph.width();
  const int h = graph.height();
  const int mp = graph.patch_size();
  const int s = (mp - 1) / 2;
  const std::size_t block = static_cast<std::size_t>(mp) * mp * layers;
  const std::size_t run = static_cast<std::size_t>(mp) * layers;
  const auto ids = graph.centre_ids();

  // Each chunk owns output rows [lo, hi) and visits every centre whose
  // window reaches them.
  parallel_for(0, static_cast<std::size_t>(h), 32, [&](std::size_t lo, std::size_t hi) {
    const int y0 = static_cast<int>(lo);
    const int y1 = static_cast<int>(hi);
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(lo * w * layers),
              out.begin() + static_cast<std::ptrdiff_t>(hi * w * layers), 0.0);
    for (int cy = std::max(s, y0 - s); cy < std::min(h - s, y1 + s); ++cy) {
      for (int cx = s; cx < w - s; ++cx) {
        const std::uint32_t k = ids[static_cast<std::size_t>(cy) * w + cx];
        const double* src = values.data() + (k - 1) * block;
        for (int dy = std::max(-s, y0 - cy); dy <= std::min(s, y1 - 1 - cy); ++dy) {
          double* d = out.data() + (static_cast<std::size_t>(cy + dy) * w + (cx - s)) * layers;
          const double* v = src + static_cast<std::size_t>(dy + s) * run;
          for (std::size_t q = 0; q < run; ++q) d[q] += v[q];
        }
      }
    }
    for (std::size_t i = lo * w; i < hi * w; ++i) {
      for (std::size_t l = 0; l < layers; ++l) out[i * layers + l] *= weights[i];
    }
  });
}

ValueStack apply_image_to_dict(const TransformPair& transforms, const ValueStack& values) {
  const auto& pattern = transforms.graph()->transposed();
  if (values.rows() != pattern.cols_count) {
    fail(ErrorCode::kShapeMismatch, "expected " + std::to_string(pattern.cols_count) +
                                        " image rows, got " + std::to_string(values.rows()));
  }
  ValueStack out(pattern.rows, values.layers());
  stencil_image_to_dict(*transforms.graph(), transforms.t1_weights(), values.values(),
                        values.layers(), out.values());
  return out;
}

ValueStack apply_dict_to_image(const TransformPair& transforms, const ValueStack& values) {
  const auto& pattern = transforms.graph()->rows();
  if (values.rows() != pattern.cols_count) {
    fail(ErrorCode::kShapeMismatch, "expected " + std::to_string(pattern.cols_count) +
                                        " dictionary rows, got " + std::to_string(values.rows()));
  }
  ValueStack out(pattern.rows, values.layers());
  stencil_dict_to_image(*transforms.graph(), transforms.t2_weights(), values.values(),
                        values.layers(), out.values());
  return out;
}

}  // namespace patchprop
