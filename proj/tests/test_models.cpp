#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "leukonet/models.hpp"

using namespace leukonet;

namespace {

// spatial side of the i-th layer output (4-d activations only)
std::size_t side_of(const ModelGraph<float>& g, std::size_t layer_index) {
  return g.layer_output_shapes()[layer_index + 1][2];
}

}  // namespace

TEST_CASE("basic_cnn halves 128 through three pooled blocks", "[models]") {
  const auto g = build_basic_cnn<float>(1);
  // layers: conv relu pool | conv relu pool | conv relu pool | flatten dense relu dense sigmoid
  CHECK(side_of(g, 0) == 128);  // same-padded conv
  CHECK(side_of(g, 2) == 64);
  CHECK(side_of(g, 5) == 32);
  CHECK(side_of(g, 8) == 16);
  CHECK(g.layer_output_shapes().back() == std::vector<std::size_t>{1, 1});
}

TEST_CASE("basic_cnn forward emits one sigmoid probability", "[models]") {
  const auto g = build_basic_cnn<float>(2);
  const Tensor<float> x({1, 3, 128, 128}, 0.5f);
  const auto y = g.forward(x);
  REQUIRE(y.shape == std::vector<std::size_t>{1, 1});
  CHECK(y[0] > 0.0f);
  CHECK(y[0] < 1.0f);
}

TEST_CASE("alexnet conv1 yields 55x55x96", "[models]") {
  const auto g = build_alexnet_sigmoid<float>(3);
  CHECK(g.layer_output_shapes()[1] == std::vector<std::size_t>{1, 96, 55, 55});
  CHECK(g.layer_output_shapes().back() == std::vector<std::size_t>{1, 1});
  CHECK(g.input_size() == 227);
}

TEST_CASE("alexnet parameter count matches the layer arithmetic", "[models]") {
  // independent oracle: Cout*(Cin*K*K) + Cout per conv, F*G + G per dense
  const std::size_t expected = (96 * (3 * 11 * 11) + 96) +      // conv1
                               (256 * (96 * 5 * 5) + 256) +     // conv2
                               (384 * (256 * 3 * 3) + 384) +    // conv3
                               (384 * (384 * 3 * 3) + 384) +    // conv4
                               (256 * (384 * 3 * 3) + 256) +    // conv5
                               (9216 * 4096 + 4096) +           // fc6
                               (4096 * 4096 + 4096) +           // fc7
                               (4096 * 1 + 1);                  // fc8
  REQUIRE(expected == 58285441u);  // ~5.8e7
  const auto g = build_alexnet_sigmoid<float>(4);
  CHECK(param_count(g) == expected);
}

TEST_CASE("thanh_net reproduces the documented shape chain", "[models]") {
  const auto g = build_thanh_net<float>(5);
  // conv relu pool | conv relu pool | conv relu pool | flatten dense softmax
  CHECK(side_of(g, 0) == 124);
  CHECK(side_of(g, 2) == 62);
  CHECK(side_of(g, 3) == 58);
  CHECK(side_of(g, 5) == 29);
  CHECK(side_of(g, 6) == 25);
  CHECK(side_of(g, 8) == 12);
  const auto& flat = g.layer_output_shapes()[10];
  CHECK(flat == std::vector<std::size_t>{1, 9216});
}

TEST_CASE("thanh_net conv parameter subtotals", "[models]") {
  const auto g = build_thanh_net<float>(6);
  std::size_t conv1 = 0, conv2 = 0, conv3 = 0, total_conv = 0;
  for (const auto& p : g.params()) {
    if (p.name.rfind("conv1.", 0) == 0) conv1 += p.value.size();
    if (p.name.rfind("conv2.", 0) == 0) conv2 += p.value.size();
    if (p.name.rfind("conv3.", 0) == 0) conv3 += p.value.size();
    if (p.name.rfind("conv", 0) == 0) total_conv += p.value.size();
  }
  CHECK(conv1 == 1216);   // 16*(3*25) + 16
  CHECK(conv2 == 12832);  // 32*(16*25) + 32
  CHECK(conv3 == 51264);  // 64*(32*25) + 64
  CHECK(total_conv == 65312);
  CHECK(param_count(g) == 65312u + (9216 * 2 + 2));
}

TEST_CASE("thanh_net forward is a softmax over two classes", "[models]") {
  const auto g = build_thanh_net<float>(7);
  const Tensor<float> x({1, 3, 128, 128}, 0.25f);
  const auto y = g.forward(x);
  REQUIRE(y.shape == std::vector<std::size_t>{1, 2});
  CHECK(y[0] + y[1] == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("a lone dense layer from 2 features to 3 units holds 9 parameters", "[models]") {
  std::vector<LayerSpec> layers{LayerSpec::flatten(), LayerSpec::dense(3), LayerSpec::relu(),
                                LayerSpec::dense(1), LayerSpec::sigmoid()};
  const ModelGraph<float> g("micro", 1, HeadKind::sigmoid_1, std::move(layers), 0, 2);
  std::size_t dense1 = 0;
  for (const auto& p : g.params())
    if (p.name.rfind("dense1.", 0) == 0) dense1 += p.value.size();
  CHECK(dense1 == 9);
}

TEST_CASE("parameter counts do not depend on the seed", "[models]") {
  CHECK(param_count(build_thanh_net<float>(0)) == param_count(build_thanh_net<float>(999)));
  CHECK(param_count(build_basic_cnn<float>(0)) == param_count(build_basic_cnn<float>(999)));
}

TEST_CASE("builders are deterministic in the seed and zero their biases", "[models]") {
  const auto a = build_thanh_net<float>(123);
  const auto b = build_thanh_net<float>(123);
  const auto c = build_thanh_net<float>(124);
  REQUIRE(a.params().size() == b.params().size());
  bool any_differs = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    CHECK(a.params()[i].value.data == b.params()[i].value.data);
    if (a.params()[i].value.data != c.params()[i].value.data) any_differs = true;
    if (a.params()[i].name.find(".bias") != std::string::npos)
      for (auto v : a.params()[i].value.data) CHECK(v == 0.0f);
  }
  CHECK(any_differs);
}

TEST_CASE("decision rules: sigmoid threshold and softmax argmax", "[models]") {
  const auto sig = build_basic_cnn<float>(8);
  Tensor<float> p({3, 1}, std::vector<float>{0.49f, 0.5f, 0.51f});
  CHECK(sig.predict_labels(p) == std::vector<int>{0, 1, 1});  // >= rule at the boundary

  const auto soft = build_thanh_net<float>(9);
  Tensor<float> q({2, 2}, std::vector<float>{0.5f, 0.5f, 0.3f, 0.7f});
  CHECK(soft.predict_labels(q) == std::vector<int>{0, 1});  // tie toward class 0
}

TEST_CASE("unknown architecture names are rejected", "[models]") {
  CHECK_THROWS_AS(build_by_name<float>("resnet", 0), std::invalid_argument);
  CHECK(arch_input_size("alexnet_sigmoid") == 227);
  CHECK(arch_input_size("basic_cnn") == 128);
  CHECK(arch_input_size("thanh_net") == 128);
}
