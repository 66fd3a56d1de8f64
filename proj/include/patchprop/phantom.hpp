// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_PHANTOM_HPP
#define PATCHPROP_PHANTOM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "patchprop/io.hpp"
#include "patchprop/postproc.hpp"

namespace patchprop {

enum class PhantomKind { kDisks, kTwoTexture, kCells };

PhantomKind parse_phantom_kind(const std::string& name);
const char* phantom_kind_name(PhantomKind kind);

struct PhantomParams {
  PhantomKind kind = PhantomKind::kDisks;
  int width = 512;
  int height = 512;
  int slices = 1;          // disks only: straight fibres, fresh noise per slice
  std::uint64_t seed = 1;
  double noise = 0.05;     // Gaussian sigma on [0,1] intensities

  // disks / cells
  int count = 300;
  double radius = 8.0;
  double min_gap = 1.0;    // minimum free space between neighbouring disks

  // scripted marks
  int marked_objects = 20;    // objects receiving a centre dot
  double dot_radius = 3.0;
  double scribble_radius = 1.0;
};

/// Synthetic image with exact ground truth.
///
///   disks:       bright fibre cross-sections (radially peaked profile) on a
///                dark background. Classes: 1 background, 2 fibre.
///   two-texture: vertical-stripe texture with a disk-shaped inset of
///                checkerboard texture at equal mean. Classes: 1 stripes,
///                2 checkerboard.
///   cells:       RGB cells with a dark membrane ring and a nucleus.
///                Classes: 1 background, 2 membrane, 3 cell interior.
struct Phantom {
  int classes = 2;
  std::vector<PixelGrid> slices;
  IndexedImage truth;          // per pixel class, identical for every slice
  std::vector<Centre> centres; // object centres (slice 0)
  IndexedImage marks;          // scripted user marks, 0 = unmarked
};

Phantom generate_phantom(const PhantomParams& params);

// Writes into `dir`: image.png (16-bit gray, or 8-bit RGB for cells) or
// image.tif for multi-slice phantoms, truth.png and marks.png (indexed),
// centres.csv.
void write_phantom(const Phantom& phantom, const std::string& dir);

// Fraction of marked pixels in a marks image.
double marked_fraction(const IndexedImage& marks);

}  // namespace patchprop

#endif  // PATCHPROP_PHANTOM_HPP
