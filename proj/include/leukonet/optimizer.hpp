#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "leukonet/errors.hpp"
#include "leukonet/model.hpp"
#include "leukonet/tensor.hpp"

namespace leukonet {

enum class OptimizerKind { sgd, adam };

inline const char* optimizer_kind_name(OptimizerKind k) {
  return k == OptimizerKind::sgd ? "sgd" : "adam";
}

inline OptimizerKind optimizer_kind_from_name(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer: " + s);
}

/// SGD with momentum (v <- momentum*v - lr*g; w <- w + v) or Adam with
/// bias-corrected moments. Moment buffers are laid out per parameter and
/// sized lazily on the first step.
template <typename T>
class OptimizerState {
 public:
  OptimizerKind kind = OptimizerKind::adam;
  T learning_rate = static_cast<T>(1e-3);
  T momentum = static_cast<T>(0.9);
  T beta1 = static_cast<T>(0.9);
  T beta2 = static_cast<T>(0.999);
  T epsilon = static_cast<T>(1e-8);

  std::uint64_t step_count() const { return step_; }

  void step(std::vector<Parameter<T>>& params) {
    if (first_.empty()) {
      first_.reserve(params.size());
      second_.reserve(params.size());
      for (const auto& p : params) {
        first_.emplace_back(p.value.shape);
        second_.emplace_back(p.value.shape);
      }
    }
    if (first_.size() != params.size())
      throw ShapeMismatch("optimizer state does not match parameter list");
    ++step_;

    if (kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& v = first_[i];
        auto& p = params[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
          v[j] = momentum * v[j] - learning_rate * p.grad[j];
          p.value[j] += v[j];
        }
      }
      return;
    }

    const T c1 = T(1) - std::pow(beta1, static_cast<T>(step_));
    const T c2 = T(1) - std::pow(beta2, static_cast<T>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor<T>& m = first_[i];
      Tensor<T>& v = second_[i];
      auto& p = params[i];
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const T g = p.grad[j];
        m[j] = beta1 * m[j] + (T(1) - beta1) * g;
        v[j] = beta2 * v[j] + (T(1) - beta2) * g * g;
        const T mhat = m[j] / c1;
        const T vhat = v[j] / c2;
        p.value[j] -= learning_rate * mhat / (std::sqrt(vhat) + epsilon);
      }
    }
  }

 private:
  std::uint64_t step_ = 0;
  std::vector<Tensor<T>> first_;   // sgd velocity / adam first moment
  std::vector<Tensor<T>> second_;  // adam second moment
};

}  // namespace leukonet
