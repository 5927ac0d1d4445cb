#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

#include "leukonet/errors.hpp"

namespace leukonet {

/// Dense row-major N-d array. Activations use [batch, channel, height, width],
/// dense activations [batch, features]. T is float (training default) or
/// double (gradient checking).
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> s, T value = T{})
      : shape(std::move(s)), data(element_count(shape), value) {}

  Tensor(std::vector<std::size_t> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != element_count(shape))
      throw ShapeMismatch("tensor data length does not match shape");
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t extent(std::size_t i) const { return shape[i]; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  // [batch, channel, height, width] access
  T& at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
  const T& at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }

  // [rows, cols] access
  T& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const T& at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  Tensor reshaped(std::vector<std::size_t> s) const {
    if (element_count(s) != data.size())
      throw ShapeMismatch("reshape changes element count");
    Tensor out;
    out.shape = std::move(s);
    out.data = data;
    return out;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool operator==(const Tensor& o) const = default;
};

}  // namespace leukonet
