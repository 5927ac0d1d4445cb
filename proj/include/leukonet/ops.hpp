#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "leukonet/errors.hpp"
#include "leukonet/matmul.hpp"
#include "leukonet/parallel.hpp"
#include "leukonet/tensor.hpp"

namespace leukonet {

// --------------------------------------------------------------- conv2d

namespace detail {

struct ConvDims {
  std::size_t n, cin, h, w;
  std::size_t cout, k, stride, pad;
  std::size_t ho, wo;

  std::size_t patch() const { return cin * k * k; }
  std::size_t spatial_out() const { return ho * wo; }
};

inline ConvDims conv_dims(const std::vector<std::size_t>& xs,
                          const std::vector<std::size_t>& ws,
                          const std::vector<std::size_t>& bs, std::size_t stride,
                          std::size_t pad) {
  if (xs.size() != 4 || ws.size() != 4)
    throw ShapeMismatch("conv2d expects 4-d input and weights");
  ConvDims d{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], stride, pad, 0, 0};
  if (ws[1] != d.cin) throw ShapeMismatch("conv2d channel counts disagree");
  if (ws[2] != ws[3]) throw ShapeMismatch("conv2d kernels must be square");
  if (bs.size() != 1 || bs[0] != d.cout) throw ShapeMismatch("conv2d bias must be [out_channels]");
  if (stride < 1) throw ShapeMismatch("conv2d stride must be >= 1");
  if (d.h + 2 * pad < d.k || d.w + 2 * pad < d.k)
    throw ShapeMismatch("conv2d kernel larger than padded input");
  d.ho = (d.h + 2 * pad - d.k) / stride + 1;
  d.wo = (d.w + 2 * pad - d.k) / stride + 1;
  return d;
}

/// Unrolls one sample into patch rows: cols[(ci*K+kh)*K+kw][ho*Wo+wo] =
/// x[ci][ho*s-p+kh][wo*s-p+kw], zero where the padded window leaves the
/// raster.
template <typename T>
void im2col(const T* x, const ConvDims& d, T* cols) {
  const std::size_t spatial = d.spatial_out();
  for (std::size_t ci = 0; ci < d.cin; ++ci) {
    const T* plane = x + ci * d.h * d.w;
    for (std::size_t kh = 0; kh < d.k; ++kh) {
      for (std::size_t kw = 0; kw < d.k; ++kw) {
        T* row = cols + ((ci * d.k + kh) * d.k + kw) * spatial;
        for (std::size_t ho = 0; ho < d.ho; ++ho) {
          T* out = row + ho * d.wo;
          const std::ptrdiff_t ih =
              static_cast<std::ptrdiff_t>(ho * d.stride + kh) - static_cast<std::ptrdiff_t>(d.pad);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) {
            std::fill(out, out + d.wo, T{});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(ih) * d.w;
          if (d.stride == 1) {
            // contiguous run: iw = wo + kw - pad
            const std::ptrdiff_t shiftw = static_cast<std::ptrdiff_t>(kw) -
                                          static_cast<std::ptrdiff_t>(d.pad);
            const std::size_t lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -shiftw));
            const std::size_t hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
                static_cast<std::ptrdiff_t>(d.w) - shiftw, 0,
                static_cast<std::ptrdiff_t>(d.wo)));
            std::fill(out, out + lo, T{});
            if (hi > lo) std::copy(src + lo + shiftw, src + hi + shiftw, out + lo);
            std::fill(out + std::max(lo, hi), out + d.wo, T{});
          } else {
            for (std::size_t wo = 0; wo < d.wo; ++wo) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(wo * d.stride + kw) -
                                        static_cast<std::ptrdiff_t>(d.pad);
              out[wo] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w))
                            ? T{}
                            : src[iw];
            }
          }
        }
      }
    }
  }
}

/// Transpose of im2col: scatter-adds patch-row gradients back onto the
/// input plane. Parallel over input channels (their planes are disjoint).
template <typename T>
void col2im_add(const T* cols, const ConvDims& d, T* grad_x) {
  const std::size_t spatial = d.spatial_out();
  parallel_for(d.cin, [&](std::size_t cbegin, std::size_t cend) {
    for (std::size_t ci = cbegin; ci < cend; ++ci) {
      T* plane = grad_x + ci * d.h * d.w;
      for (std::size_t kh = 0; kh < d.k; ++kh) {
        for (std::size_t kw = 0; kw < d.k; ++kw) {
          const T* row = cols + ((ci * d.k + kh) * d.k + kw) * spatial;
          for (std::size_t ho = 0; ho < d.ho; ++ho) {
            const std::ptrdiff_t ih =
                static_cast<std::ptrdiff_t>(ho * d.stride + kh) - static_cast<std::ptrdiff_t>(d.pad);
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
            T* dst = plane + static_cast<std::size_t>(ih) * d.w;
            const T* src = row + ho * d.wo;
            for (std::size_t wo = 0; wo < d.wo; ++wo) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(wo * d.stride + kw) -
                                        static_cast<std::ptrdiff_t>(d.pad);
              if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(d.w)) dst[iw] += src[wo];
            }
          }
        }
      }
    }
  });
}

}  // namespace detail

/// y[n,co,ho,wo] = b[co] + sum over (ci,kh,kw) of x * w, zero padding.
/// Ho = floor((H + 2p - K)/s) + 1.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         std::size_t stride, std::size_t pad) {
  const auto d = detail::conv_dims(x.shape, w.shape, b.shape, stride, pad);
  Tensor<T> y({d.n, d.cout, d.ho, d.wo});
  std::vector<T> cols(d.patch() * d.spatial_out());
  const std::size_t spatial = d.spatial_out();
  for (std::size_t n = 0; n < d.n; ++n) {
    detail::im2col(x.ptr() + n * d.cin * d.h * d.w, d, cols.data());
    T* yn = y.ptr() + n * d.cout * spatial;
    for (std::size_t co = 0; co < d.cout; ++co)
      std::fill(yn + co * spatial, yn + (co + 1) * spatial, b[co]);
    matmul_accum(w.ptr(), cols.data(), yn, d.cout, d.patch(), spatial);
  }
  return y;
}

template <typename T>
struct ConvGrads {
  Tensor<T> x, w, b;
};

/// Exact reverse-mode gradients of conv2d_forward.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                             const Tensor<T>& w, const Tensor<T>& b,
                             std::size_t stride, std::size_t pad) {
  const auto d = detail::conv_dims(x.shape, w.shape, b.shape, stride, pad);
  if (grad_out.shape != std::vector<std::size_t>{d.n, d.cout, d.ho, d.wo})
    throw ShapeMismatch("conv2d_backward: grad_out shape mismatch");

  ConvGrads<T> g{Tensor<T>(x.shape), Tensor<T>(w.shape), Tensor<T>(b.shape)};
  const std::size_t spatial = d.spatial_out();
  std::vector<T> cols(d.patch() * spatial);
  std::vector<T> grad_cols(d.patch() * spatial);

  for (std::size_t n = 0; n < d.n; ++n) {
    const T* gn = grad_out.ptr() + n * d.cout * spatial;
    for (std::size_t co = 0; co < d.cout; ++co) {
      T acc{};
      const T* row = gn + co * spatial;
      for (std::size_t i = 0; i < spatial; ++i) acc += row[i];
      g.b[co] += acc;
    }

    detail::im2col(x.ptr() + n * d.cin * d.h * d.w, d, cols.data());
    matmul_abt_accum(gn, cols.data(), g.w.ptr(), d.cout, spatial, d.patch());

    std::fill(grad_cols.begin(), grad_cols.end(), T{});
    matmul_atb_accum(w.ptr(), gn, grad_cols.data(), d.cout, d.patch(), spatial);
    detail::col2im_add(grad_cols.data(), d, g.x.ptr() + n * d.cin * d.h * d.w);
  }
  return g;
}

// --------------------------------------------------------------- maxpool

template <typename T>
struct PoolResult {
  Tensor<T> y;
  std::vector<std::size_t> argmax;  // flat index into the input, per output cell
};

/// Window max with Ho = floor((H - k)/s) + 1; first occurrence in row-major
/// window order wins ties, and backward routes gradient only to the
/// recorded indices.
template <typename T>
PoolResult<T> maxpool2d_forward(const Tensor<T>& x, std::size_t k, std::size_t s) {
  if (x.rank() != 4) throw ShapeMismatch("maxpool2d expects a 4-d input");
  const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  if (k < 1 || s < 1) throw ShapeMismatch("maxpool2d kernel and stride must be >= 1");
  if (H < k || W < k) throw ShapeMismatch("maxpool2d window larger than input");
  const std::size_t Ho = (H - k) / s + 1;
  const std::size_t Wo = (W - k) / s + 1;

  PoolResult<T> r{Tensor<T>({N, C, Ho, Wo}), {}};
  r.argmax.resize(r.y.size());
  std::size_t out = 0;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const T* plane = x.ptr() + (n * C + c) * H * W;
      const std::size_t plane_base = (n * C + c) * H * W;
      for (std::size_t ho = 0; ho < Ho; ++ho) {
        for (std::size_t wo = 0; wo < Wo; ++wo) {
          std::size_t best = plane_base + (ho * s) * W + wo * s;
          T best_v = plane[(ho * s) * W + wo * s];
          for (std::size_t kh = 0; kh < k; ++kh) {
            for (std::size_t kw = 0; kw < k; ++kw) {
              const std::size_t idx = (ho * s + kh) * W + (wo * s + kw);
              if (plane[idx] > best_v) {
                best_v = plane[idx];
                best = plane_base + idx;
              }
            }
          }
          r.y[out] = best_v;
          r.argmax[out] = best;
          ++out;
        }
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2d_backward(const Tensor<T>& grad_y,
                             const std::vector<std::size_t>& argmax,
                             const std::vector<std::size_t>& input_shape) {
  if (grad_y.size() != argmax.size())
    throw ShapeMismatch("maxpool2d_backward: gradient/argmax length mismatch");
  Tensor<T> grad_x(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad_x[argmax[i]] += grad_y[i];
  return grad_x;
}

// --------------------------------------------------------------- dense

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() != 2 || w.rank() != 2) throw ShapeMismatch("dense expects 2-d input and weights");
  const std::size_t N = x.shape[0], F = x.shape[1], G = w.shape[1];
  if (w.shape[0] != F) throw ShapeMismatch("dense inner dimensions disagree");
  if (b.size() != G) throw ShapeMismatch("dense bias must be [out_features]");
  Tensor<T> y({N, G});
  for (std::size_t n = 0; n < N; ++n)
    std::copy(b.ptr(), b.ptr() + G, y.ptr() + n * G);
  matmul_accum(x.ptr(), w.ptr(), y.ptr(), N, F, G);
  return y;
}

template <typename T>
struct DenseGrads {
  Tensor<T> x, w, b;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_y, const Tensor<T>& x,
                             const Tensor<T>& w) {
  const std::size_t N = x.shape[0], F = x.shape[1], G = w.shape[1];
  if (grad_y.shape != std::vector<std::size_t>{N, G})
    throw ShapeMismatch("dense_backward: grad shape mismatch");
  DenseGrads<T> g{Tensor<T>({N, F}), Tensor<T>({F, G}), Tensor<T>({G})};
  matmul_abt_accum(grad_y.ptr(), w.ptr(), g.x.ptr(), N, G, F);
  matmul_atb_accum(x.ptr(), grad_y.ptr(), g.w.ptr(), N, F, G);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t j = 0; j < G; ++j) g.b[j] += grad_y[n * G + j];
  return g;
}

// --------------------------------------------------------------- activations

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  // NaN passes through so a poisoned activation reaches the divergence check
  for (auto& v : y.data) v = (v > T{} || v != v) ? v : T{};
  return y;
}

/// Subgradient at 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_y, const Tensor<T>& x) {
  if (!grad_y.same_shape(x)) throw ShapeMismatch("relu_backward shape mismatch");
  Tensor<T> g = grad_y;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(x[i] > T{})) g[i] = T{};
  return g;
}

template <typename T>
T sigmoid_scalar(T v) {
  if (v >= T{}) return T(1) / (T(1) + std::exp(-v));
  const T e = std::exp(v);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = sigmoid_scalar(v);
  return y;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_y, const Tensor<T>& y) {
  if (!grad_y.same_shape(y)) throw ShapeMismatch("sigmoid_backward shape mismatch");
  Tensor<T> g = grad_y;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (T(1) - y[i]);
  return g;
}

/// Row softmax with max subtraction for stability. Input shape [N, classes].
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  if (x.rank() != 2) throw ShapeMismatch("softmax expects shape [batch, classes]");
  const std::size_t N = x.shape[0], C = x.shape[1];
  Tensor<T> y = x;
  for (std::size_t n = 0; n < N; ++n) {
    T* row = y.ptr() + n * C;
    const T m = *std::max_element(row, row + C);
    T sum{};
    for (std::size_t c = 0; c < C; ++c) {
      row[c] = std::exp(row[c] - m);
      sum += row[c];
    }
    for (std::size_t c = 0; c < C; ++c) row[c] /= sum;
  }
  return y;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& grad_y, const Tensor<T>& y) {
  if (!grad_y.same_shape(y)) throw ShapeMismatch("softmax_backward shape mismatch");
  const std::size_t N = y.shape[0], C = y.shape[1];
  Tensor<T> g({N, C});
  for (std::size_t n = 0; n < N; ++n) {
    const T* yr = y.ptr() + n * C;
    const T* gr = grad_y.ptr() + n * C;
    T inner{};
    for (std::size_t c = 0; c < C; ++c) inner += gr[c] * yr[c];
    for (std::size_t c = 0; c < C; ++c) g[n * C + c] = yr[c] * (gr[c] - inner);
  }
  return g;
}

}  // namespace leukonet
