#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "leukonet/errors.hpp"
#include "leukonet/tensor.hpp"

namespace leukonet {

/// Probabilities are clamped to [eps, 1-eps] before any log, so a perfect
/// or saturated prediction never produces log(0).
inline constexpr double kProbEps = 1e-7;

template <typename T>
struct LossResult {
  T value{};
  Tensor<T> grad;  // d(loss)/d(prediction), same shape as the prediction
};

/// Mean binary cross-entropy over the batch. Predictions are sigmoid
/// probabilities of class 1 with shape [N, 1] (or [N]); targets in {0, 1}.
template <typename T>
LossResult<T> bce_loss(const Tensor<T>& p, const std::vector<int>& targets) {
  const std::size_t n = targets.size();
  if (p.size() != n || n == 0)
    throw ShapeMismatch("bce_loss: prediction/target size mismatch");
  const T lo = static_cast<T>(kProbEps), hi = T(1) - static_cast<T>(kProbEps);

  LossResult<T> r;
  r.grad = Tensor<T>(p.shape);
  T total{};
  for (std::size_t i = 0; i < n; ++i) {
    const T t = static_cast<T>(targets[i]);
    const T pc = std::clamp(p[i], lo, hi);
    total += -(t * std::log(pc) + (T(1) - t) * std::log(T(1) - pc));
    // zero slope outside the clamp window
    if (p[i] > lo && p[i] < hi)
      r.grad[i] = (-t / pc + (T(1) - t) / (T(1) - pc)) / static_cast<T>(n);
  }
  r.value = total / static_cast<T>(n);
  return r;
}

/// Mean negative log-likelihood over softmax probabilities [N, classes];
/// targets are class indices.
template <typename T>
LossResult<T> cross_entropy_loss(const Tensor<T>& p, const std::vector<int>& targets) {
  if (p.rank() != 2) throw ShapeMismatch("cross_entropy_loss expects [batch, classes]");
  const std::size_t n = p.shape[0], classes = p.shape[1];
  if (targets.size() != n || n == 0)
    throw ShapeMismatch("cross_entropy_loss: prediction/target size mismatch");
  const T lo = static_cast<T>(kProbEps), hi = T(1) - static_cast<T>(kProbEps);

  LossResult<T> r;
  r.grad = Tensor<T>(p.shape);
  T total{};
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::size_t>(targets[i]);
    if (t >= classes) throw ShapeMismatch("cross_entropy_loss: target class out of range");
    const T pt = p[i * classes + t];
    const T pc = std::clamp(pt, lo, hi);
    total += -std::log(pc);
    if (pt > lo && pt < hi) r.grad[i * classes + t] = -T(1) / pc / static_cast<T>(n);
  }
  r.value = total / static_cast<T>(n);
  return r;
}

}  // namespace leukonet
