#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "leukonet/errors.hpp"
#include "leukonet/model.hpp"

namespace leukonet {

inline constexpr std::array<const char*, 3> kArchNames = {"basic_cnn", "alexnet_sigmoid",
                                                          "thanh_net"};

/// Three same-padded 3x3/128-filter conv blocks with 2x2 pooling, then a
/// 64-unit hidden layer and a single sigmoid output. 128x128 RGB input;
/// spatial chain 128 -> 64 -> 32 -> 16.
template <typename T>
ModelGraph<T> build_basic_cnn(std::uint64_t seed) {
  std::vector<LayerSpec> layers;
  for (int block = 0; block < 3; ++block) {
    layers.push_back(LayerSpec::conv(128, 3, 1, 1));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::pool(2, 2));
  }
  layers.push_back(LayerSpec::flatten());
  layers.push_back(LayerSpec::dense(64));
  layers.push_back(LayerSpec::relu());
  layers.push_back(LayerSpec::dense(1));
  layers.push_back(LayerSpec::sigmoid());
  return ModelGraph<T>("basic_cnn", 128, HeadKind::sigmoid_1, std::move(layers), seed);
}

/// Single-stream AlexNet (Krizhevsky 2012) with the classifier replaced by
/// one sigmoid unit for binary output. 227x227 RGB input; overlapping 3x3
/// stride-2 pooling; no local response normalization or dropout.
template <typename T>
ModelGraph<T> build_alexnet_sigmoid(std::uint64_t seed) {
  std::vector<LayerSpec> layers{
      LayerSpec::conv(96, 11, 4, 0),  LayerSpec::relu(), LayerSpec::pool(3, 2),
      LayerSpec::conv(256, 5, 1, 2),  LayerSpec::relu(), LayerSpec::pool(3, 2),
      LayerSpec::conv(384, 3, 1, 1),  LayerSpec::relu(),
      LayerSpec::conv(384, 3, 1, 1),  LayerSpec::relu(),
      LayerSpec::conv(256, 3, 1, 1),  LayerSpec::relu(), LayerSpec::pool(3, 2),
      LayerSpec::flatten(),
      LayerSpec::dense(4096),         LayerSpec::relu(),
      LayerSpec::dense(4096),         LayerSpec::relu(),
      LayerSpec::dense(1),            LayerSpec::sigmoid()};
  return ModelGraph<T>("alexnet_sigmoid", 227, HeadKind::sigmoid_1, std::move(layers), seed);
}

/// 5x5 valid convolutions with 16/32/64 filters, 2x2 stride-2 pooling, then
/// a 2-way softmax. 128x128 RGB input; spatial chain
/// 128 -> 124 -> 62 -> 58 -> 29 -> 25 -> 12, flatten 12*12*64 = 9216.
template <typename T>
ModelGraph<T> build_thanh_net(std::uint64_t seed) {
  std::vector<LayerSpec> layers{
      LayerSpec::conv(16, 5, 1, 0), LayerSpec::relu(), LayerSpec::pool(2, 2),
      LayerSpec::conv(32, 5, 1, 0), LayerSpec::relu(), LayerSpec::pool(2, 2),
      LayerSpec::conv(64, 5, 1, 0), LayerSpec::relu(), LayerSpec::pool(2, 2),
      LayerSpec::flatten(),
      LayerSpec::dense(2),          LayerSpec::softmax()};
  ModelGraph<T> g("thanh_net", 128, HeadKind::softmax_2, std::move(layers), seed);

  // The flatten width feeding the classifier must come out at exactly 9216.
  const auto& shapes = g.layer_output_shapes();
  const auto& flat = shapes[shapes.size() - 3];
  if (flat.size() != 2 || flat[1] != 9216)
    throw ShapeMismatch("thanh_net flatten size must be 9216");
  return g;
}

template <typename T>
ModelGraph<T> build_by_name(const std::string& arch, std::uint64_t seed) {
  if (arch == "basic_cnn") return build_basic_cnn<T>(seed);
  if (arch == "alexnet_sigmoid") return build_alexnet_sigmoid<T>(seed);
  if (arch == "thanh_net") return build_thanh_net<T>(seed);
  throw std::invalid_argument("unknown architecture: " + arch +
                              " (expected basic_cnn | alexnet_sigmoid | thanh_net)");
}

inline std::size_t arch_input_size(const std::string& arch) {
  if (arch == "basic_cnn" || arch == "thanh_net") return 128;
  if (arch == "alexnet_sigmoid") return 227;
  throw std::invalid_argument("unknown architecture: " + arch);
}

template <typename T>
std::size_t param_count(const ModelGraph<T>& g) {
  return g.param_count();
}

}  // namespace leukonet
