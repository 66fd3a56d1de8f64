// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "patchprop/error.hpp"

namespace patchprop {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

std::span<const std::uint8_t> ByteReader::take(std::size_t count) {
  if (count > remaining()) fail(ErrorCode::kCorruption, "unexpected end of container data");
  auto out = data_.subspan(pos_, count);
  pos_ += count;
  return out;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint32_t ByteReader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<std::uint8_t> encode_container(const Container& container) {
  ByteWriter w;
  w.raw({reinterpret_cast<const std::uint8_t*>(kContainerMagic.data()), 4});
  w.u32(kContainerVersion);
  w.u32(kContainerHeaderBytes);
  const auto& h = container.header;
  w.u32(h.patch_size);
  w.u32(h.channels);
  w.u32(h.branching);
  w.u32(h.layers);
  w.u64(h.node_count);
  w.u32(h.feature_order);
  w.u32(h.extractor_kind);
  w.u64(h.seed);
  w.u32(h.feature_length);
  w.u32(h.iterations);
  // Fixed order keeps encoding deterministic: dictionary sections first.
  static const char* const kOrder[] = {"CNTR", "EMPT", "DPRB", "DMSK", "META"};
  auto emit = [&w](const std::string& tag, const std::vector<std::uint8_t>& payload) {
    w.raw({reinterpret_cast<const std::uint8_t*>(tag.data()), 4});
    w.u64(payload.size());
    w.raw(payload);
  };
  for (const char* tag : kOrder) {
    auto it = container.sections.find(tag);
    if (it != container.sections.end()) emit(it->first, it->second);
  }
  for (const auto& [tag, payload] : container.sections) {
    bool known = false;
    for (const char* k : kOrder) known = known || tag == k;
    if (!known) emit(tag, payload);
  }
  return std::move(w.bytes());
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.take(4);
  if (std::memcmp(magic.data(), kContainerMagic.data(), 4) != 0) {
    fail(ErrorCode::kCorruption, "not a patchprop container (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kContainerVersion) {
    fail(ErrorCode::kUnsupported, "unsupported container version " + std::to_string(version));
  }
  const std::uint32_t header_bytes = r.u32();
  if (header_bytes < kContainerHeaderBytes) {
    fail(ErrorCode::kCorruption, "container header too short");
  }
  ByteReader h(r.take(header_bytes));
  Container c;
  c.header.patch_size = h.u32();
  c.header.channels = h.u32();
  c.header.branching = h.u32();
  c.header.layers = h.u32();
  c.header.node_count = h.u64();
  c.header.feature_order = h.u32();
  c.header.extractor_kind = h.u32();
  c.header.seed = h.u64();
  c.header.feature_length = h.u32();
  c.header.iterations = h.u32();
  while (r.remaining() > 0) {
    auto tag = r.take(4);
    const std::uint64_t size = r.u64();
    if (size > r.remaining()) fail(ErrorCode::kCorruption, "section runs past end of data");
    auto payload = r.take(static_cast<std::size_t>(size));
    c.sections[std::string(reinterpret_cast<const char*>(tag.data()), 4)] =
        std::vector<std::uint8_t>(payload.begin(), payload.end());
  }
  return c;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write to '" + path + "'");
}

}  // namespace patchprop
