#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "leukonet/errors.hpp"
#include "leukonet/model.hpp"
#include "leukonet/rng.hpp"

namespace leukonet {

struct GradCheckReport {
  double max_rel_error = 0;
  std::size_t coordinates_checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
};

/// Compares reverse-mode parameter gradients against central finite
/// differences on a random coordinate subset. Meant to run on double
/// precision graphs with small inputs; throws GradientMismatch when the
/// max relative error exceeds the tolerance.
template <typename T>
GradCheckReport grad_check(ModelGraph<T>& graph, const Tensor<T>& x,
                           const std::vector<int>& targets, double tolerance,
                           std::size_t coords_per_param = 24,
                           std::uint64_t seed = 0, double h = 1e-5) {
  graph.zero_grads();
  Workspace<T> ws;
  const Tensor<T> probs = graph.forward(x, ws);
  const LossResult<T> l = graph.loss(probs, targets);
  graph.backward(l.grad, ws);

  // snapshot analytic gradients before perturbing anything
  std::vector<Tensor<T>> analytic;
  analytic.reserve(graph.params().size());
  for (const auto& p : graph.params()) analytic.push_back(p.grad);

  const auto loss_at = [&]() {
    return static_cast<double>(graph.loss(graph.forward(x), targets).value);
  };

  GradCheckReport report;
  for (std::size_t pi = 0; pi < graph.params().size(); ++pi) {
    auto& p = graph.params()[pi];
    const std::size_t n = p.value.size();

    std::vector<std::size_t> coords;
    if (n <= coords_per_param) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      CounterRng rng(seed, 0xc0deu, pi);
      for (std::size_t i = 0; i < coords_per_param; ++i) coords.push_back(rng.below(n));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }

    for (std::size_t c : coords) {
      const T saved = p.value[c];
      p.value[c] = saved + static_cast<T>(h);
      const double up = loss_at();
      p.value[c] = saved - static_cast<T>(h);
      const double down = loss_at();
      p.value[c] = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double exact = static_cast<double>(analytic[pi][c]);
      const double scale = std::max({std::abs(numeric), std::abs(exact), 1e-8});
      const double rel = std::abs(numeric - exact) / scale;
      ++report.coordinates_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = p.name;
        report.worst_index = c;
        report.worst_analytic = exact;
        report.worst_numeric = numeric;
      }
    }
  }

  if (report.max_rel_error > tolerance)
    throw GradientMismatch("gradient check failed: max relative error " +
                           std::to_string(report.max_rel_error) + " at " +
                           report.worst_param + "[" + std::to_string(report.worst_index) +
                           "] (analytic " + std::to_string(report.worst_analytic) +
                           ", numeric " + std::to_string(report.worst_numeric) + ")");
  return report;
}

}  // namespace leukonet
