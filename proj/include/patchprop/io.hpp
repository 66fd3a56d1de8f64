// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_IO_HPP
#define PATCHPROP_IO_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "patchprop/grid.hpp"

namespace patchprop {

// PNG: 1/2/4/8/16-bit gray and 8/16-bit RGB, alpha dropped. Samples are
// normalized by 2^depth - 1. Palette images are rejected (kUnsupported);
// read them with decode_indexed_png.
PixelGrid decode_png(std::span<const std::uint8_t> bytes);
PixelGrid read_png(const std::string& path);

/// Palette-index raster, one byte per pixel.
struct IndexedImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> indices;

  friend bool operator==(const IndexedImage&, const IndexedImage&) = default;
};

using Rgb = std::array<std::uint8_t, 3>;

// Class colours: 0 black, then cyan, magenta, purple and a fixed sequence.
std::vector<Rgb> class_palette(int classes);

// Palette PNG (or 8-bit gray, where the value is the index).
IndexedImage decode_indexed_png(std::span<const std::uint8_t> bytes);
IndexedImage read_indexed_png(const std::string& path);
std::vector<std::uint8_t> encode_indexed_png(const IndexedImage& image,
                                             std::span<const Rgb> palette);

std::vector<std::uint8_t> encode_gray8_png(std::span<const std::uint8_t> values, int width,
                                           int height);
std::vector<std::uint8_t> encode_gray16_png(std::span<const std::uint16_t> values, int width,
                                            int height);
// Interleaved RGB, 3 bytes per pixel.
std::vector<std::uint8_t> encode_rgb8_png(std::span<const std::uint8_t> values, int width,
                                          int height);

// Multi-page TIFF: 8/16-bit unsigned, 1 or 3 samples (extra samples dropped),
// stripped, any codec libtiff decodes.
std::vector<PixelGrid> decode_tiff_stack(std::span<const std::uint8_t> bytes);
std::vector<PixelGrid> read_tiff_stack(const std::string& path);

// Writes grayscale pages of equal size, one per entry, uncompressed.
void write_tiff_stack_u8(const std::string& path, int width, int height,
                         std::span<const std::vector<std::uint8_t>> pages);
void write_tiff_stack_u16(const std::string& path, int width, int height,
                          std::span<const std::vector<std::uint16_t>> pages);

// PNG or TIFF by magic bytes; a PNG yields one slice.
std::vector<PixelGrid> decode_image_stack(std::span<const std::uint8_t> bytes);
std::vector<PixelGrid> read_image_stack(const std::string& path);

// Probability quantization used by the file outputs.
std::uint8_t quantize_u8(double p);    // round(255 p)
std::uint16_t quantize_u16(double p);  // round(65535 p)

// NumPy .npy (format 1.0, little-endian float64, C order).
void write_npy(const std::string& path, std::span<const std::size_t> shape,
               std::span<const double> values);
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};
NpyArray read_npy(const std::string& path);

}  // namespace patchprop

#endif  // PATCHPROP_IO_HPP
