// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_CONTAINER_HPP
#define PATCHPROP_CONTAINER_HPP

// Little-endian binary container shared by dictionary and model files.
//
// Layout:
//   char[4]  magic "PPDC"
//   u32      format version (kContainerVersion)
//   u32      header byte count H (48 for version 1)
//   H bytes  fixed header:
//              u32 patch_size, u32 channels, u32 branching, u32 layers,
//              u64 node_count, u32 feature_order, u32 extractor_kind,
//              u64 seed, u32 feature_length, u32 iterations
//   sections until end of file, each:
//              char[4] tag, u64 payload byte count, payload
//
// Known sections:
//   "CNTR"  node_count * feature_length f64, node-id order
//   "EMPT"  node_count u8, 1 for empty nodes
//   "DPRB"  u32 classes, u64 rows, rows * classes f64 (row-major)
//   "DMSK"  rows u8, 1 for masked (empty) dictionary pixels
//   "META"  UTF-8 JSON provenance
// Readers skip unknown tags.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace patchprop {

inline constexpr std::array<char, 4> kContainerMagic{'P', 'P', 'D', 'C'};
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::uint32_t kContainerHeaderBytes = 48;

struct ContainerHeader {
  std::uint32_t patch_size = 0;
  std::uint32_t channels = 0;
  std::uint32_t branching = 0;
  std::uint32_t layers = 0;
  std::uint64_t node_count = 0;
  std::uint32_t feature_order = 0;
  std::uint32_t extractor_kind = 0;
  std::uint64_t seed = 0;
  std::uint32_t feature_length = 0;
  std::uint32_t iterations = 0;

  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  void tag(const char (&t)[5]) { raw({reinterpret_cast<const std::uint8_t*>(t), 4}); }

  std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::span<const std::uint8_t> take(std::size_t count);
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

struct Container {
  ContainerHeader header;
  std::map<std::string, std::vector<std::uint8_t>> sections;
};

std::vector<std::uint8_t> encode_container(const Container& container);
// Throws kCorruption on malformed input.
Container decode_container(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace patchprop

#endif  // PATCHPROP_CONTAINER_HPP
