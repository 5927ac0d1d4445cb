#pragma once

#include <algorithm>
#include <array>
#include <cstdint>

#include "leukonet/errors.hpp"
#include "leukonet/image.hpp"
#include "leukonet/tensor.hpp"

namespace leukonet {

struct PreprocessConfig {
  int target_size = 256;       // corpus-level square resize
  bool apply_median = true;
  bool apply_sharpen = true;
  int model_input_size = 128;  // 128 or 227 depending on architecture
};

/// Nearest-neighbor resample: output pixel (x, y) copies input pixel
/// (floor((x+0.5)*W/w), floor((y+0.5)*H/h)), clamped to bounds.
inline ImageU8 resize_nearest(const ImageU8& img, int w, int h) {
  if (w < 1 || h < 1) throw ShapeMismatch("resize target must be at least 1x1");
  if (w == img.width && h == img.height) return img;

  ImageU8 out(w, h);
  for (int y = 0; y < h; ++y) {
    int sy = static_cast<int>((y + 0.5) * img.height / h);
    sy = std::clamp(sy, 0, img.height - 1);
    for (int x = 0; x < w; ++x) {
      int sx = static_cast<int>((x + 0.5) * img.width / w);
      sx = std::clamp(sx, 0, img.width - 1);
      for (int c = 0; c < ImageU8::channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

namespace detail {

inline std::uint8_t clamped_pixel(const ImageU8& img, int x, int y, int c) {
  x = std::clamp(x, 0, img.width - 1);
  y = std::clamp(y, 0, img.height - 1);
  return img.at(x, y, c);
}

}  // namespace detail

/// 3x3 median per channel, replicate padding at the borders.
inline ImageU8 median3(const ImageU8& img) {
  ImageU8 out(img.width, img.height);
  std::array<std::uint8_t, 9> window;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < ImageU8::channels; ++c) {
        int k = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            window[k++] = detail::clamped_pixel(img, x + dx, y + dy, c);
        std::nth_element(window.begin(), window.begin() + 4, window.end());
        out.at(x, y, c) = window[4];
      }
    }
  }
  return out;
}

/// 3x3 Laplacian sharpen [[0,-1,0],[-1,5,-1],[0,-1,0]] per channel,
/// replicate padding, clamped to [0, 255]. Kernel sums to 1, so constant
/// regions pass through unchanged.
inline ImageU8 sharpen3(const ImageU8& img) {
  ImageU8 out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < ImageU8::channels; ++c) {
        const int center = img.at(x, y, c);
        const int sum = 5 * center - detail::clamped_pixel(img, x - 1, y, c) -
                        detail::clamped_pixel(img, x + 1, y, c) -
                        detail::clamped_pixel(img, x, y - 1, c) -
                        detail::clamped_pixel(img, x, y + 1, c);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(sum, 0, 255));
      }
    }
  }
  return out;
}

/// Converts to a [1, 3, H, W] tensor of byte/255 values, channel order R,G,B.
template <typename T>
Tensor<T> to_tensor(const ImageU8& img) {
  const auto h = static_cast<std::size_t>(img.height);
  const auto w = static_cast<std::size_t>(img.width);
  Tensor<T> t({1, 3, h, w});
  const T scale = T(1) / T(255);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        t.at4(0, c, y, x) = static_cast<T>(img.data[(y * w + x) * 3 + c]) * scale;
  return t;
}

/// The corpus conditioning chain: resize to target, then median denoise,
/// then sharpen (the filters run after the resize).
inline ImageU8 prepare_image(const ImageU8& img, const PreprocessConfig& cfg) {
  ImageU8 out = resize_nearest(img, cfg.target_size, cfg.target_size);
  if (cfg.apply_median) out = median3(out);
  if (cfg.apply_sharpen) out = sharpen3(out);
  return out;
}

}  // namespace leukonet
