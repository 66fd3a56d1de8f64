// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/io.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "patchprop/container.hpp"
#include "patchprop/error.hpp"

namespace patchprop {

namespace {

// ---------------------------------------------------------------- PNG

struct PngReadSource {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->pos + count > src->bytes.size()) png_error(png, "truncated PNG data");
  std::memcpy(out, src->bytes.data() + src->pos, count);
  src->pos += count;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw(png_structp, png_const_charp message) {
  throw Error(ErrorCode::kIo, std::string("PNG: ") + message);
}

void png_warn(png_structp, png_const_charp) {}

class PngReader {
 public:
  explicit PngReader(std::span<const std::uint8_t> bytes) : source_{bytes} {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
      fail(ErrorCode::kUnsupported, "not a PNG stream");
    }
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn);
    info_ = png_create_info_struct(png_);
    png_set_read_fn(png_, &source_, png_read_from_memory);
    try {
      png_read_info(png_, info_);
    } catch (...) {
      png_destroy_read_struct(&png_, &info_, nullptr);
      throw;
    }
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png() const { return png_; }
  png_infop info() const { return info_; }

  std::vector<std::uint8_t> read_rows() {
    png_read_update_info(png_, info_);
    const png_uint_32 h = png_get_image_height(png_, info_);
    const std::size_t stride = png_get_rowbytes(png_, info_);
    std::vector<std::uint8_t> data(stride * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + y * stride;
    png_read_image(png_, rows.data());
    png_read_end(png_, nullptr);
    return data;
  }

 private:
  PngReadSource source_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

class PngWriter {
 public:
  PngWriter() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn);
    info_ = png_create_info_struct(png_);
    png_set_write_fn(png_, &out_, png_write_to_vector, png_flush_noop);
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  png_structp png() const { return png_; }
  png_infop info() const { return info_; }

  std::vector<std::uint8_t> finish(const std::uint8_t* data, std::size_t stride, int height) {
    png_write_info(png_, info_);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
      rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(data + y * stride);
    }
    png_write_image(png_, rows.data());
    png_write_end(png_, nullptr);
    return std::move(out_);
  }

 private:
  std::vector<std::uint8_t> out_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

void check_dims(int width, int height, std::size_t count, std::size_t per_pixel) {
  if (width <= 0 || height <= 0 ||
      count != static_cast<std::size_t>(width) * height * per_pixel) {
    fail(ErrorCode::kShapeMismatch, "image buffer does not match its dimensions");
  }
}

// ---------------------------------------------------------------- TIFF

struct TiffMemory {
  std::span<const std::uint8_t> bytes;
  toff_t pos = 0;
};

tsize_t tiff_read(thandle_t h, tdata_t buf, tsize_t size) {
  auto* m = static_cast<TiffMemory*>(h);
  const toff_t avail = m->pos < m->bytes.size() ? m->bytes.size() - m->pos : 0;
  const auto n = static_cast<toff_t>(std::min<toff_t>(avail, static_cast<toff_t>(size)));
  std::memcpy(buf, m->bytes.data() + m->pos, n);
  m->pos += n;
  return static_cast<tsize_t>(n);
}
tsize_t tiff_write(thandle_t, tdata_t, tsize_t) { return 0; }
toff_t tiff_seek(thandle_t h, toff_t off, int whence) {
  auto* m = static_cast<TiffMemory*>(h);
  switch (whence) {
    case SEEK_SET: m->pos = off; break;
    case SEEK_CUR: m->pos += off; break;
    case SEEK_END: m->pos = m->bytes.size() + off; break;
    default: break;
  }
  return m->pos;
}
int tiff_close(thandle_t) { return 0; }
toff_t tiff_size(thandle_t h) { return static_cast<TiffMemory*>(h)->bytes.size(); }
int tiff_map(thandle_t, tdata_t*, toff_t*) { return 0; }
void tiff_unmap(thandle_t, tdata_t, toff_t) {}

struct TiffCloser {
  void operator()(TIFF* t) const { TIFFClose(t); }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

void silence_tiff_warnings() {
  static const bool once = [] {
    TIFFSetWarningHandler(nullptr);
    TIFFSetErrorHandler(nullptr);
    return true;
  }();
  (void)once;
}

PixelGrid read_tiff_page(TIFF* tif) {
  std::uint32_t width = 0, height = 0;
  std::uint16_t bits = 8, spp = 1, planar = PLANARCONFIG_CONTIG, format = SAMPLEFORMAT_UINT;
  TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &width);
  TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &height);
  TIFFGetFieldDefaulted(tif, TIFFTAG_BITSPERSAMPLE, &bits);
  TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif, TIFFTAG_PLANARCONFIG, &planar);
  TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLEFORMAT, &format);
  if (TIFFIsTiled(tif)) fail(ErrorCode::kUnsupported, "tiled TIFF not supported");
  if ((bits != 8 && bits != 16) || format != SAMPLEFORMAT_UINT) {
    fail(ErrorCode::kUnsupported, "TIFF must hold 8- or 16-bit unsigned samples");
  }
  if (spp != 1 && spp < 3) fail(ErrorCode::kUnsupported, "TIFF sample layout not supported");
  if (spp > 1 && planar != PLANARCONFIG_CONTIG) {
    fail(ErrorCode::kUnsupported, "planar TIFF not supported");
  }
  const int channels = spp == 1 ? 1 : 3;
  const double scale = bits == 8 ? 255.0 : 65535.0;
  std::vector<double> data(static_cast<std::size_t>(width) * height * channels);
  std::vector<std::uint8_t> line(static_cast<std::size_t>(TIFFScanlineSize(tif)));
  for (std::uint32_t y = 0; y < height; ++y) {
    if (TIFFReadScanline(tif, line.data(), y, 0) < 0) {
      fail(ErrorCode::kIo, "failed to decode TIFF scanline");
    }
    for (std::uint32_t x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t s = static_cast<std::size_t>(x) * spp + c;
        double v = 0;
        if (bits == 8) {
          v = line[s];
        } else {
          std::uint16_t w;
          std::memcpy(&w, line.data() + 2 * s, 2);
          v = w;
        }
        data[(static_cast<std::size_t>(y) * width + x) * channels + c] = v / scale;
      }
    }
  }
  return PixelGrid(static_cast<int>(width), static_cast<int>(height), channels, std::move(data));
}

template <typename Sample>
void write_tiff_pages(const std::string& path, int width, int height,
                      std::span<const std::vector<Sample>> pages) {
  silence_tiff_warnings();
  TiffHandle tif(TIFFOpen(path.c_str(), "w"));
  if (!tif) fail(ErrorCode::kIo, "cannot write TIFF '" + path + "'");
  const std::size_t page_size = static_cast<std::size_t>(width) * height;
  for (std::size_t p = 0; p < pages.size(); ++p) {
    if (pages[p].size() != page_size) fail(ErrorCode::kShapeMismatch, "TIFF page size mismatch");
    TIFF* t = tif.get();
    TIFFSetField(t, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(width));
    TIFFSetField(t, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(height));
    TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(8 * sizeof(Sample)));
    TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(1));
    TIFFSetField(t, TIFFTAG_SAMPLEFORMAT, static_cast<std::uint16_t>(SAMPLEFORMAT_UINT));
    TIFFSetField(t, TIFFTAG_PHOTOMETRIC, static_cast<std::uint16_t>(PHOTOMETRIC_MINISBLACK));
    TIFFSetField(t, TIFFTAG_PLANARCONFIG, static_cast<std::uint16_t>(PLANARCONFIG_CONTIG));
    TIFFSetField(t, TIFFTAG_COMPRESSION, static_cast<std::uint16_t>(COMPRESSION_NONE));
    TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(height));
    TIFFSetField(t, TIFFTAG_SUBFILETYPE, static_cast<std::uint32_t>(FILETYPE_PAGE));
    TIFFSetField(t, TIFFTAG_PAGENUMBER, static_cast<std::uint16_t>(p),
                 static_cast<std::uint16_t>(pages.size()));
    for (int y = 0; y < height; ++y) {
      auto* row = const_cast<Sample*>(pages[p].data() + static_cast<std::size_t>(y) * width);
      if (TIFFWriteScanline(t, row, static_cast<std::uint32_t>(y), 0) < 0) {
        fail(ErrorCode::kIo, "failed writing TIFF '" + path + "'");
      }
    }
    if (!TIFFWriteDirectory(t)) fail(ErrorCode::kIo, "failed writing TIFF directory");
  }
}

bool has_png_magic(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

bool has_tiff_magic(std::span<const std::uint8_t> b) {
  return b.size() >= 4 && ((b[0] == 'I' && b[1] == 'I' && b[2] == 42 && b[3] == 0) ||
                           (b[0] == 'M' && b[1] == 'M' && b[2] == 0 && b[3] == 42));
}

}  // namespace

PixelGrid decode_png(std::span<const std::uint8_t> bytes) {
  PngReader reader(bytes);
  png_structp png = reader.png();
  png_infop info = reader.info();
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    fail(ErrorCode::kUnsupported, "palette PNG is not an intensity image");
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_swap(png);  // host-order little-endian samples
  const int channels = (color & PNG_COLOR_MASK_COLOR) ? 3 : 1;
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  std::vector<std::uint8_t> raw = reader.read_rows();

  const std::size_t samples = static_cast<std::size_t>(width) * height * channels;
  std::vector<double> data(samples);
  if (depth == 16) {
    for (std::size_t i = 0; i < samples; ++i) {
      std::uint16_t v;
      std::memcpy(&v, raw.data() + 2 * i, 2);
      data[i] = v / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < samples; ++i) data[i] = raw[i] / 255.0;
  }
  return PixelGrid(width, height, channels, std::move(data));
}

PixelGrid read_png(const std::string& path) { return decode_png(read_file_bytes(path)); }

std::vector<Rgb> class_palette(int classes) {
  static const Rgb kBase[] = {{0, 0, 0},       {0, 255, 255},   {255, 0, 255},
                              {128, 0, 255},   {255, 255, 0},   {0, 160, 0},
                              {255, 128, 0},   {0, 64, 255},    {255, 255, 255}};
  std::vector<Rgb> palette;
  for (int i = 0; i <= classes; ++i) {
    if (i < static_cast<int>(std::size(kBase))) {
      palette.push_back(kBase[i]);
    } else {
      const auto v = static_cast<std::uint8_t>((i * 97) % 256);
      palette.push_back({v, static_cast<std::uint8_t>(255 - v),
                         static_cast<std::uint8_t>((i * 53) % 256)});
    }
  }
  return palette;
}

IndexedImage decode_indexed_png(std::span<const std::uint8_t> bytes) {
  PngReader reader(bytes);
  png_structp png = reader.png();
  png_infop info = reader.info();
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (!(color == PNG_COLOR_TYPE_PALETTE || (color == PNG_COLOR_TYPE_GRAY && depth <= 8))) {
    fail(ErrorCode::kUnsupported, "label PNG must be palette or 8-bit gray");
  }
  if (depth < 8) png_set_packing(png);
  IndexedImage out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.indices = reader.read_rows();
  return out;
}

IndexedImage read_indexed_png(const std::string& path) {
  return decode_indexed_png(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_indexed_png(const IndexedImage& image,
                                             std::span<const Rgb> palette) {
  check_dims(image.width, image.height, image.indices.size(), 1);
  if (palette.empty() || palette.size() > 256) {
    fail(ErrorCode::kConfig, "palette must hold 1..256 entries");
  }
  for (std::uint8_t v : image.indices) {
    if (v >= palette.size()) fail(ErrorCode::kConfig, "index outside the palette");
  }
  PngWriter w;
  png_set_IHDR(w.png(), w.info(), static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_PALETTE,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> colors;
  for (const Rgb& c : palette) colors.push_back({c[0], c[1], c[2]});
  png_set_PLTE(w.png(), w.info(), colors.data(), static_cast<int>(colors.size()));
  return w.finish(image.indices.data(), static_cast<std::size_t>(image.width), image.height);
}

std::vector<std::uint8_t> encode_gray8_png(std::span<const std::uint8_t> values, int width,
                                           int height) {
  check_dims(width, height, values.size(), 1);
  PngWriter w;
  png_set_IHDR(w.png(), w.info(), static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  return w.finish(values.data(), static_cast<std::size_t>(width), height);
}

std::vector<std::uint8_t> encode_gray16_png(std::span<const std::uint16_t> values, int width,
                                            int height) {
  check_dims(width, height, values.size(), 1);
  std::vector<std::uint8_t> be(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    be[2 * i] = static_cast<std::uint8_t>(values[i] >> 8);
    be[2 * i + 1] = static_cast<std::uint8_t>(values[i] & 0xff);
  }
  PngWriter w;
  png_set_IHDR(w.png(), w.info(), static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  return w.finish(be.data(), static_cast<std::size_t>(width) * 2, height);
}

std::vector<std::uint8_t> encode_rgb8_png(std::span<const std::uint8_t> values, int width,
                                          int height) {
  check_dims(width, height, values.size(), 3);
  PngWriter w;
  png_set_IHDR(w.png(), w.info(), static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  return w.finish(values.data(), static_cast<std::size_t>(width) * 3, height);
}

std::vector<PixelGrid> decode_tiff_stack(std::span<const std::uint8_t> bytes) {
  silence_tiff_warnings();
  TiffMemory mem{bytes, 0};
  TiffHandle tif(TIFFClientOpen("memory", "rm", &mem, tiff_read, tiff_write, tiff_seek,
                                tiff_close, tiff_size, tiff_map, tiff_unmap));
  if (!tif) fail(ErrorCode::kUnsupported, "not a readable TIFF stream");
  std::vector<PixelGrid> slices;
  do {
    slices.push_back(read_tiff_page(tif.get()));
  } while (TIFFReadDirectory(tif.get()));
  return slices;
}

std::vector<PixelGrid> read_tiff_stack(const std::string& path) {
  return decode_tiff_stack(read_file_bytes(path));
}

void write_tiff_stack_u8(const std::string& path, int width, int height,
                         std::span<const std::vector<std::uint8_t>> pages) {
  write_tiff_pages<std::uint8_t>(path, width, height, pages);
}

void write_tiff_stack_u16(const std::string& path, int width, int height,
                          std::span<const std::vector<std::uint16_t>> pages) {
  write_tiff_pages<std::uint16_t>(path, width, height, pages);
}

std::vector<PixelGrid> decode_image_stack(std::span<const std::uint8_t> bytes) {
  if (has_png_magic(bytes)) return {decode_png(bytes)};
  if (has_tiff_magic(bytes)) return decode_tiff_stack(bytes);
  fail(ErrorCode::kUnsupported, "unsupported image format (expected PNG or TIFF)");
}

std::vector<PixelGrid> read_image_stack(const std::string& path) {
  return decode_image_stack(read_file_bytes(path));
}

std::uint8_t quantize_u8(double p) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
}

std::uint16_t quantize_u16(double p) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(p, 0.0, 1.0) * 65535.0));
}

void write_npy(const std::string& path, std::span<const std::size_t> shape,
               std::span<const double> values) {
  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  if (count != values.size()) fail(ErrorCode::kShapeMismatch, "npy shape does not match data");
  std::ostringstream dict;
  dict << "{'descr': '<f8', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict << shape[i] << (shape.size() == 1 || i + 1 < shape.size() ? "," : "");
    if (i + 1 < shape.size()) dict << ' ';
  }
  dict << "), }";
  std::string header = dict.str();
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  ByteWriter w;
  const std::uint8_t magic[] = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  w.raw(magic);
  w.u8(static_cast<std::uint8_t>(header.size() & 0xff));
  w.u8(static_cast<std::uint8_t>(header.size() >> 8));
  w.raw({reinterpret_cast<const std::uint8_t*>(header.data()), header.size()});
  for (double v : values) w.f64(v);
  write_file_bytes(path, w.bytes());
}

NpyArray read_npy(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  auto magic = r.take(8);
  if (magic[0] != 0x93 || std::memcmp(magic.data() + 1, "NUMPY", 5) != 0 || magic[6] != 1) {
    fail(ErrorCode::kUnsupported, "not an npy v1 file");
  }
  const std::size_t header_len = r.u8() | (static_cast<std::size_t>(r.u8()) << 8);
  auto header_bytes = r.take(header_len);
  const std::string header(header_bytes.begin(), header_bytes.end());
  if (header.find("'<f8'") == std::string::npos ||
      header.find("'fortran_order': False") == std::string::npos) {
    fail(ErrorCode::kUnsupported, "npy must be little-endian float64 in C order");
  }
  NpyArray out;
  const auto open = header.find('(');
  const auto close = header.find(')');
  std::string dims = header.substr(open + 1, close - open - 1);
  std::replace(dims.begin(), dims.end(), ',', ' ');
  std::istringstream in(dims);
  std::size_t d;
  std::size_t count = 1;
  while (in >> d) {
    out.shape.push_back(d);
    count *= d;
  }
  out.values.resize(count);
  for (double& v : out.values) v = r.f64();
  return out;
}

}  // namespace patchprop
