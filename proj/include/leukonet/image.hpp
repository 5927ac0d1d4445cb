#pragma once

#include <cstdint>
#include <vector>

namespace leukonet {

/// Decoded 8-bit RGB raster, the unit of all preprocessing and augmentation.
/// Row-major, interleaved R,G,B. Grayscale sources are promoted to RGB at
/// decode, so channels is always 3.
struct ImageU8 {
  static constexpr int channels = 3;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // width * height * 3 bytes

  ImageU8() = default;
  ImageU8(int w, int h)
      : width(w),
        height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels, 0) {}

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  std::uint8_t& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const ImageU8&) const = default;
};

}  // namespace leukonet
