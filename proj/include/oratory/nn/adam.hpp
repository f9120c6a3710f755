#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "oratory/nn/tensor.hpp"

namespace oratory::nn {

struct AdamConfig {
  double alpha = 5e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for one ordered list of parameter tensors.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;

  AdamState() = default;
  AdamState(AdamConfig cfg, const std::vector<Tensor<T>*>& params) : config(cfg) {
    for (const Tensor<T>* p : params) {
      m.emplace_back(p->shape());
      v.emplace_back(p->shape());
    }
  }
};

/// One bias-corrected Adam update of `params` in place.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
               AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.m.size()) + " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(params[i]->shape() == grads[i]->shape() && params[i]->shape() == state.m[i].shape(),
                  "adam_step: shape mismatch at parameter " + std::to_string(i));
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T alpha = static_cast<T>(c.alpha), eps = static_cast<T>(c.epsilon);
  const T inv1 = static_cast<T>(1.0 / correct1), inv2 = static_cast<T>(1.0 / correct2);

  for (std::size_t i = 0; i < params.size(); ++i) {
    T* theta = params[i]->ptr();
    const T* g = grads[i]->ptr();
    T* m = state.m[i].ptr();
    T* v = state.v[i].ptr();
    const std::size_t n = params[i]->size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (T{1} - b1) * g[j];
      v[j] = b2 * v[j] + (T{1} - b2) * g[j] * g[j];
      const T m_hat = m[j] * inv1;
      const T v_hat = v[j] * inv2;
      theta[j] -= alpha * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace oratory::nn
