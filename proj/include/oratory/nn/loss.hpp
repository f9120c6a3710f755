#pragma once

#include <algorithm>
#include <cmath>

#include "oratory/nn/tensor.hpp"

namespace oratory::nn {

inline constexpr double kBceClamp = 1e-7;

/// Mean binary cross entropy; probabilities are clamped to [eps, 1 - eps].
template <typename T>
double bce_loss(const Tensor<T>& probs, const Tensor<T>& targets, double eps = kBceClamp) {
  require_shape(probs.size() == targets.size() && probs.size() > 0,
                "bce_loss: probabilities and targets differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(static_cast<double>(probs[i]), eps, 1.0 - eps);
    const double y = targets[i];
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

/// d(bce_loss(sigmoid(z), y))/dz = (p - y) / n.
template <typename T>
Tensor<T> bce_sigmoid_grad(const Tensor<T>& probs, const Tensor<T>& targets) {
  require_shape(probs.size() == targets.size() && probs.size() > 0,
                "bce_sigmoid_grad: probabilities and targets differ in length");
  Tensor<T> g(probs.shape());
  const T inv_n = T{1} / static_cast<T>(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) g[i] = (probs[i] - targets[i]) * inv_n;
  return g;
}

}  // namespace oratory::nn
