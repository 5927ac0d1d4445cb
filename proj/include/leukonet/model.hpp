#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "leukonet/errors.hpp"
#include "leukonet/loss.hpp"
#include "leukonet/ops.hpp"
#include "leukonet/rng.hpp"
#include "leukonet/tensor.hpp"

namespace leukonet {

enum class LayerKind { conv2d, maxpool2d, relu, dense, flatten, sigmoid, softmax };
enum class HeadKind { sigmoid_1, softmax_2 };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::relu: return "relu";
    case LayerKind::dense: return "dense";
    case LayerKind::flatten: return "flatten";
    case LayerKind::sigmoid: return "sigmoid";
    default: return "softmax";
  }
}

inline LayerKind layer_kind_from_name(const std::string& s) {
  if (s == "conv2d") return LayerKind::conv2d;
  if (s == "maxpool2d") return LayerKind::maxpool2d;
  if (s == "relu") return LayerKind::relu;
  if (s == "dense") return LayerKind::dense;
  if (s == "flatten") return LayerKind::flatten;
  if (s == "sigmoid") return LayerKind::sigmoid;
  if (s == "softmax") return LayerKind::softmax;
  throw ManifestCorrupt("unknown layer kind: " + s);
}

inline const char* head_kind_name(HeadKind h) {
  return h == HeadKind::sigmoid_1 ? "sigmoid_1" : "softmax_2";
}

inline HeadKind head_kind_from_name(const std::string& s) {
  if (s == "sigmoid_1") return HeadKind::sigmoid_1;
  if (s == "softmax_2") return HeadKind::softmax_2;
  throw ManifestCorrupt("unknown head kind: " + s);
}

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t out_channels = 0;  // conv2d
  std::size_t kernel = 0;        // conv2d / maxpool2d
  std::size_t stride = 1;        // conv2d / maxpool2d
  std::size_t padding = 0;       // conv2d
  std::size_t out_features = 0;  // dense

  static LayerSpec conv(std::size_t out_channels, std::size_t kernel,
                        std::size_t stride = 1, std::size_t padding = 0) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.out_channels = out_channels;
    s.kernel = kernel;
    s.stride = stride;
    s.padding = padding;
    return s;
  }
  static LayerSpec pool(std::size_t kernel, std::size_t stride) {
    LayerSpec s;
    s.kind = LayerKind::maxpool2d;
    s.kernel = kernel;
    s.stride = stride;
    return s;
  }
  static LayerSpec relu() { return LayerSpec{}; }
  static LayerSpec dense(std::size_t out_features) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.out_features = out_features;
    return s;
  }
  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
  }
  static LayerSpec sigmoid() {
    LayerSpec s;
    s.kind = LayerKind::sigmoid;
    return s;
  }
  static LayerSpec softmax() {
    LayerSpec s;
    s.kind = LayerKind::softmax;
    return s;
  }

  bool operator==(const LayerSpec&) const = default;
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;  // same shape as value; zeroed at the start of every batch
};

/// He-uniform fill: uniform in [-sqrt(6/fan_in), sqrt(6/fan_in)), one
/// counter stream per parameter so initialization is deterministic in seed.
template <typename T>
void he_uniform_fill(Tensor<T>& t, std::size_t fan_in, std::uint64_t seed,
                     std::uint64_t param_index) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  CounterRng rng(seed, 0x1417u, param_index);
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-bound, bound));
}

/// Per-forward caches the backward pass consumes: acts[0] is the input and
/// acts[i+1] the output of layer i; pool layers also record their argmax.
template <typename T>
struct Workspace {
  std::vector<Tensor<T>> acts;
  std::vector<std::vector<std::size_t>> pool_argmax;
};

/// Ordered layer specification plus the parameter store for one network.
/// Construction infers the whole shape chain from [1, in_channels, S, S],
/// creates and initializes parameters, and rejects inconsistent graphs.
template <typename T>
class ModelGraph {
 public:
  ModelGraph() = default;

  ModelGraph(std::string name, std::size_t input_size, HeadKind head,
             std::vector<LayerSpec> layers, std::uint64_t seed,
             std::size_t in_channels = 3)
      : name_(std::move(name)),
        input_size_(input_size),
        in_channels_(in_channels),
        head_(head),
        seed_(seed),
        layers_(std::move(layers)) {
    infer_shapes_and_init();
  }

  const std::string& name() const { return name_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t in_channels() const { return in_channels_; }
  HeadKind head() const { return head_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::vector<Parameter<T>>& params() { return params_; }
  const std::vector<Parameter<T>>& params() const { return params_; }

  /// Output shape of every layer for a batch of one, including the input at
  /// index 0. Useful for verifying the documented shape chains.
  const std::vector<std::vector<std::size_t>>& layer_output_shapes() const {
    return shapes_;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grads() {
    for (auto& p : params_) p.grad.fill(T{});
  }

  /// Forward pass caching per-layer activations for backward.
  Tensor<T> forward(const Tensor<T>& x, Workspace<T>& ws) const {
    check_input(x);
    ws.acts.assign(1, x);
    ws.acts.reserve(layers_.size() + 1);
    ws.pool_argmax.assign(layers_.size(), {});

    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const LayerSpec& spec = layers_[i];
      const Tensor<T>& in = ws.acts.back();
      switch (spec.kind) {
        case LayerKind::conv2d: {
          const auto& [w, b] = layer_params(i);
          ws.acts.push_back(conv2d_forward(in, w.value, b.value, spec.stride, spec.padding));
          break;
        }
        case LayerKind::maxpool2d: {
          auto r = maxpool2d_forward(in, spec.kernel, spec.stride);
          ws.pool_argmax[i] = std::move(r.argmax);
          ws.acts.push_back(std::move(r.y));
          break;
        }
        case LayerKind::relu:
          ws.acts.push_back(relu_forward(in));
          break;
        case LayerKind::dense: {
          const auto& [w, b] = layer_params(i);
          ws.acts.push_back(dense_forward(in, w.value, b.value));
          break;
        }
        case LayerKind::flatten:
          ws.acts.push_back(in.reshaped({in.shape[0], in.size() / in.shape[0]}));
          break;
        case LayerKind::sigmoid:
          ws.acts.push_back(sigmoid_forward(in));
          break;
        case LayerKind::softmax:
          ws.acts.push_back(softmax_rows(in));
          break;
      }
    }
    return ws.acts.back();
  }

  /// Inference-only forward.
  Tensor<T> forward(const Tensor<T>& x) const {
    Workspace<T> ws;
    return forward(x, ws);
  }

  /// Accumulates parameter gradients for d(loss)/d(output) = grad_out,
  /// using the caches of the matching forward call.
  void backward(const Tensor<T>& grad_out, const Workspace<T>& ws) {
    if (ws.acts.size() != layers_.size() + 1)
      throw ShapeMismatch("backward called without a matching forward");
    Tensor<T> grad = grad_out;
    for (std::size_t idx = layers_.size(); idx-- > 0;) {
      const LayerSpec& spec = layers_[idx];
      const Tensor<T>& in = ws.acts[idx];
      const Tensor<T>& out = ws.acts[idx + 1];
      switch (spec.kind) {
        case LayerKind::conv2d: {
          auto [w, b] = layer_params(idx);
          auto g = conv2d_backward(grad, in, w.value, b.value, spec.stride, spec.padding);
          accumulate(w.grad, g.w);
          accumulate(b.grad, g.b);
          grad = std::move(g.x);
          break;
        }
        case LayerKind::maxpool2d:
          grad = maxpool2d_backward(grad, ws.pool_argmax[idx], in.shape);
          break;
        case LayerKind::relu:
          grad = relu_backward(grad, in);
          break;
        case LayerKind::dense: {
          auto [w, b] = layer_params(idx);
          auto g = dense_backward(grad, in, w.value);
          accumulate(w.grad, g.w);
          accumulate(b.grad, g.b);
          grad = std::move(g.x);
          break;
        }
        case LayerKind::flatten:
          grad = grad.reshaped(in.shape);
          break;
        case LayerKind::sigmoid:
          grad = sigmoid_backward(grad, out);
          break;
        case LayerKind::softmax:
          grad = softmax_backward(grad, out);
          break;
      }
    }
  }

  /// Head loss: binary cross-entropy for sigmoid heads, 2-class
  /// cross-entropy for softmax heads.
  LossResult<T> loss(const Tensor<T>& probs, const std::vector<int>& targets) const {
    return head_ == HeadKind::sigmoid_1 ? bce_loss(probs, targets)
                                        : cross_entropy_loss(probs, targets);
  }

  /// Decision rule: sigmoid probability >= threshold means cancer; softmax
  /// picks the argmax with ties broken toward class 0.
  std::vector<int> predict_labels(const Tensor<T>& probs, double threshold = 0.5) const {
    std::vector<int> labels;
    if (head_ == HeadKind::sigmoid_1) {
      labels.reserve(probs.size());
      for (std::size_t i = 0; i < probs.size(); ++i)
        labels.push_back(static_cast<double>(probs[i]) >= threshold ? 1 : 0);
    } else {
      const std::size_t n = probs.shape[0];
      labels.reserve(n);
      for (std::size_t i = 0; i < n; ++i)
        labels.push_back(probs[i * 2 + 1] > probs[i * 2 + 0] ? 1 : 0);
    }
    return labels;
  }

 private:
  std::pair<Parameter<T>&, Parameter<T>&> layer_params(std::size_t layer_idx) {
    const std::size_t base = param_base_[layer_idx];
    return {params_[base], params_[base + 1]};
  }
  std::pair<const Parameter<T>&, const Parameter<T>&> layer_params(std::size_t layer_idx) const {
    const std::size_t base = param_base_[layer_idx];
    return {params_[base], params_[base + 1]};
  }

  static void accumulate(Tensor<T>& into, const Tensor<T>& g) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
  }

  void check_input(const Tensor<T>& x) const {
    if (x.rank() != 4 || x.shape[1] != in_channels_ || x.shape[2] != input_size_ ||
        x.shape[3] != input_size_)
      throw ShapeMismatch("input must be [batch, " + std::to_string(in_channels_) + ", " +
                          std::to_string(input_size_) + ", " + std::to_string(input_size_) +
                          "] for " + name_);
  }

  void infer_shapes_and_init() {
    if (input_size_ < 1 || in_channels_ < 1)
      throw ShapeMismatch("model input size and channels must be >= 1");
    shapes_.clear();
    shapes_.push_back({1, in_channels_, input_size_, input_size_});
    param_base_.assign(layers_.size(), static_cast<std::size_t>(-1));
    params_.clear();

    std::size_t conv_idx = 0, dense_idx = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const LayerSpec& spec = layers_[i];
      const auto& cur = shapes_.back();
      switch (spec.kind) {
        case LayerKind::conv2d: {
          if (cur.size() != 4) throw ShapeMismatch("conv2d needs a 4-d activation");
          if (spec.out_channels < 1 || spec.kernel < 1 || spec.stride < 1)
            throw ShapeMismatch("conv2d spec fields must be positive");
          if (cur[2] + 2 * spec.padding < spec.kernel || cur[3] + 2 * spec.padding < spec.kernel)
            throw ShapeMismatch("conv2d kernel larger than padded input");
          const std::size_t ho = (cur[2] + 2 * spec.padding - spec.kernel) / spec.stride + 1;
          const std::size_t wo = (cur[3] + 2 * spec.padding - spec.kernel) / spec.stride + 1;
          const std::string base = "conv" + std::to_string(++conv_idx);
          add_param(i, base + ".weight", {spec.out_channels, cur[1], spec.kernel, spec.kernel},
                    cur[1] * spec.kernel * spec.kernel);
          add_bias(base + ".bias", spec.out_channels);
          shapes_.push_back({cur[0], spec.out_channels, ho, wo});
          break;
        }
        case LayerKind::maxpool2d: {
          if (cur.size() != 4) throw ShapeMismatch("maxpool2d needs a 4-d activation");
          if (cur[2] < spec.kernel || cur[3] < spec.kernel)
            throw ShapeMismatch("maxpool2d window larger than input");
          shapes_.push_back({cur[0], cur[1], (cur[2] - spec.kernel) / spec.stride + 1,
                             (cur[3] - spec.kernel) / spec.stride + 1});
          break;
        }
        case LayerKind::relu:
        case LayerKind::sigmoid:
          shapes_.push_back(cur);
          break;
        case LayerKind::softmax:
          if (cur.size() != 2) throw ShapeMismatch("softmax needs a 2-d activation");
          shapes_.push_back(cur);
          break;
        case LayerKind::flatten: {
          std::size_t features = 1;
          for (std::size_t k = 1; k < cur.size(); ++k) features *= cur[k];
          shapes_.push_back({cur[0], features});
          break;
        }
        case LayerKind::dense: {
          if (cur.size() != 2) throw ShapeMismatch("dense needs a flattened activation");
          if (spec.out_features < 1) throw ShapeMismatch("dense out_features must be >= 1");
          const std::string base = "dense" + std::to_string(++dense_idx);
          add_param(i, base + ".weight", {cur[1], spec.out_features}, cur[1]);
          add_bias(base + ".bias", spec.out_features);
          shapes_.push_back({cur[0], spec.out_features});
          break;
        }
      }
    }

    const auto& out = shapes_.back();
    const std::size_t head_width = head_ == HeadKind::sigmoid_1 ? 1 : 2;
    if (out.size() != 2 || out[1] != head_width)
      throw ShapeMismatch("head expects final shape [batch, " + std::to_string(head_width) +
                          "], got width " + std::to_string(out.size() == 2 ? out[1] : 0));
  }

  void add_param(std::size_t layer_idx, std::string name, std::vector<std::size_t> shape,
                 std::size_t fan_in) {
    param_base_[layer_idx] = params_.size();
    Parameter<T> p;
    p.name = std::move(name);
    p.value = Tensor<T>(std::move(shape));
    he_uniform_fill(p.value, fan_in, seed_, params_.size());
    p.grad = Tensor<T>(p.value.shape);
    params_.push_back(std::move(p));
  }

  void add_bias(std::string name, std::size_t width) {
    Parameter<T> p;
    p.name = std::move(name);
    p.value = Tensor<T>({width});  // biases start at zero
    p.grad = Tensor<T>({width});
    params_.push_back(std::move(p));
  }

  std::string name_;
  std::size_t input_size_ = 0;
  std::size_t in_channels_ = 3;
  HeadKind head_ = HeadKind::sigmoid_1;
  std::uint64_t seed_ = 0;
  std::vector<LayerSpec> layers_;
  std::vector<Parameter<T>> params_;
  std::vector<std::size_t> param_base_;
  std::vector<std::vector<std::size_t>> shapes_;
};

}  // namespace leukonet
