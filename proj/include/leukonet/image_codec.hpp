#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "leukonet/errors.hpp"
#include "leukonet/image.hpp"

namespace leukonet {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::uint8_t* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoFailure("short write: " + path.string());
}

// ---------------------------------------------------------------- PNG

// Buffers live on the heap so the locals the setjmp frame restores after a
// libpng longjmp are plain pointers that were set before setjmp.
struct PngScratch {
  ImageU8 img;
  std::vector<png_bytep> rows;
};

// keep libpng from chattering on stderr; errors surface as exceptions
inline void png_quiet_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }
inline void png_quiet_warning(png_structp, png_const_charp) {}

inline ImageU8 decode_png(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw IoFailure("cannot open " + path.string());

  auto scratch = std::make_unique<PngScratch>();
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_quiet_error, png_quiet_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoFailure("libpng initialization failed");
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw CorruptImage("failed to decode PNG: " + path.string());
  }

  png_init_io(png, fp);
  png_read_info(png, info);

  png_uint_32 w = 0, h = 0;
  int bit_depth = 0, color_type = 0;
  png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (w == 0 || h == 0) longjmp(png_jmpbuf(png), 1);

  // Normalize everything to 8-bit RGB. Gray promotion replicates the
  // single channel, matching the pipeline's grayscale rule.
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if ((color_type & PNG_COLOR_MASK_ALPHA) != 0 ||
      png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3)
    longjmp(png_jmpbuf(png), 1);

  scratch->img = ImageU8(static_cast<int>(w), static_cast<int>(h));
  scratch->rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    scratch->rows[y] = scratch->img.data.data() + static_cast<std::size_t>(y) * w * 3;

  png_read_image(png, scratch->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return std::move(scratch->img);
}

inline void encode_png(const ImageU8& img, const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoFailure("cannot open for writing: " + path.string());

  auto rows = std::make_unique<std::vector<png_bytep>>(img.height);
  for (int y = 0; y < img.height; ++y)
    (*rows)[y] = const_cast<png_bytep>(img.data.data() +
                                       static_cast<std::size_t>(y) * img.width * 3);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_quiet_error, png_quiet_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoFailure("libpng initialization failed");
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoFailure("failed to encode PNG: " + path.string());
  }

  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows->data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoFailure("close failed: " + path.string());
}

// ---------------------------------------------------------------- BMP
// 24-bit uncompressed BI_RGB only.

inline std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void put16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(static_cast<std::uint8_t>(x & 0xff));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
}
inline void put32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xff));
}

inline ImageU8 decode_bmp(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < 54) throw CorruptImage("BMP too short: " + name);
  const std::uint32_t pixel_offset = le32(&bytes[10]);
  const std::uint32_t dib_size = le32(&bytes[14]);
  if (dib_size < 40) throw CorruptImage("BMP header too small: " + name);

  const auto width = static_cast<std::int32_t>(le32(&bytes[18]));
  const auto height_raw = static_cast<std::int32_t>(le32(&bytes[22]));
  const std::uint16_t planes = le16(&bytes[26]);
  const std::uint16_t bpp = le16(&bytes[28]);
  const std::uint32_t compression = le32(&bytes[30]);

  if (planes != 1) throw CorruptImage("BMP planes != 1: " + name);
  if (bpp != 24 || compression != 0)
    throw UnsupportedFormat("only 24-bit uncompressed BMP is supported: " + name);

  const bool top_down = height_raw < 0;
  const std::int32_t height = top_down ? -height_raw : height_raw;
  if (width <= 0 || height <= 0) throw CorruptImage("BMP has empty dimensions: " + name);

  const std::size_t stride = (static_cast<std::size_t>(width) * 3 + 3) / 4 * 4;
  if (pixel_offset > bytes.size() ||
      bytes.size() - pixel_offset < stride * static_cast<std::size_t>(height))
    throw CorruptImage("BMP pixel data truncated: " + name);

  ImageU8 img(width, height);
  for (std::int32_t y = 0; y < height; ++y) {
    const std::int32_t src_row = top_down ? y : height - 1 - y;
    const std::uint8_t* src = bytes.data() + pixel_offset + stride * static_cast<std::size_t>(src_row);
    for (std::int32_t x = 0; x < width; ++x) {
      img.at(x, y, 0) = src[x * 3 + 2];
      img.at(x, y, 1) = src[x * 3 + 1];
      img.at(x, y, 2) = src[x * 3 + 0];
    }
  }
  return img;
}

inline void encode_bmp(const ImageU8& img, const std::filesystem::path& path) {
  const std::size_t stride = (static_cast<std::size_t>(img.width) * 3 + 3) / 4 * 4;
  const std::size_t pixel_bytes = stride * static_cast<std::size_t>(img.height);
  const std::uint32_t file_size = static_cast<std::uint32_t>(54 + pixel_bytes);

  std::vector<std::uint8_t> out;
  out.reserve(file_size);
  out.push_back('B');
  out.push_back('M');
  put32(out, file_size);
  put32(out, 0);
  put32(out, 54);             // pixel data offset
  put32(out, 40);             // BITMAPINFOHEADER
  put32(out, static_cast<std::uint32_t>(img.width));
  put32(out, static_cast<std::uint32_t>(img.height));  // positive: bottom-up
  put16(out, 1);
  put16(out, 24);
  put32(out, 0);              // BI_RGB
  put32(out, static_cast<std::uint32_t>(pixel_bytes));
  put32(out, 2835);           // 72 dpi
  put32(out, 2835);
  put32(out, 0);
  put32(out, 0);

  for (int y = img.height - 1; y >= 0; --y) {
    const std::size_t row_start = out.size();
    for (int x = 0; x < img.width; ++x) {
      out.push_back(img.at(x, y, 2));
      out.push_back(img.at(x, y, 1));
      out.push_back(img.at(x, y, 0));
    }
    while (out.size() - row_start < stride) out.push_back(0);
  }
  write_file_bytes(path, out.data(), out.size());
}

// ---------------------------------------------------------------- PPM (P6)

// Skips whitespace and '#' comment lines, then parses a decimal integer.
inline long ppm_next_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                         const std::string& name) {
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
    throw CorruptImage("bad PPM header: " + name);
  long v = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    v = v * 10 + (bytes[pos] - '0');
    if (v > 1'000'000'000L) throw CorruptImage("PPM header value out of range: " + name);
    ++pos;
  }
  return v;
}

inline ImageU8 decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw UnsupportedFormat("not a P6 PPM: " + name);
  std::size_t pos = 2;
  const long w = ppm_next_int(bytes, pos, name);
  const long h = ppm_next_int(bytes, pos, name);
  const long maxval = ppm_next_int(bytes, pos, name);
  if (w <= 0 || h <= 0) throw CorruptImage("PPM has empty dimensions: " + name);
  if (maxval != 255) throw UnsupportedFormat("PPM maxval must be 255: " + name);
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw CorruptImage("bad PPM header: " + name);
  ++pos;  // single whitespace separating header and raster

  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() - pos < need) throw CorruptImage("PPM pixel data truncated: " + name);

  ImageU8 img(static_cast<int>(w), static_cast<int>(h));
  std::memcpy(img.data.data(), bytes.data() + pos, need);
  return img;
}

inline void encode_ppm(const ImageU8& img, const std::filesystem::path& path) {
  std::string header = "P6\n" + std::to_string(img.width) + " " +
                       std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  write_file_bytes(path, out.data(), out.size());
}

inline std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace detail

inline constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

/// Decodes a PNG, BMP, or binary PPM file to RGB. Dispatch is on magic
/// bytes, not the file extension.
inline ImageU8 load_image(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0)
    return detail::decode_png(path);
  if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M')
    return detail::decode_bmp(bytes, path.string());
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
    return detail::decode_ppm(bytes, path.string());
  throw UnsupportedFormat("unknown image magic bytes: " + path.string());
}

/// Encodes losslessly; the format comes from the extension
/// (.png / .bmp / .ppm, case-insensitive).
inline void save_image(const ImageU8& img, const std::filesystem::path& path) {
  if (img.width <= 0 || img.height <= 0 ||
      img.data.size() != img.pixel_count() * ImageU8::channels)
    throw ShapeMismatch("image buffer does not match its dimensions");
  const std::string ext = detail::lower_extension(path);
  if (ext == ".png")
    detail::encode_png(img, path);
  else if (ext == ".bmp")
    detail::encode_bmp(img, path);
  else if (ext == ".ppm")
    detail::encode_ppm(img, path);
  else
    throw UnsupportedFormat("cannot encode extension '" + ext + "': " + path.string());
}

}  // namespace leukonet
