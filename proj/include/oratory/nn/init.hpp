#pragma once

#include <cmath>

#include "oratory/nn/layers.hpp"
#include "oratory/random.hpp"

namespace oratory::nn {

/// He-style uniform initialization: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)).
template <typename T>
void he_uniform(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (T& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
void init_layer(LinearLayer<T>& l, Rng& rng) {
  he_uniform(l.weight, l.in_features(), rng);
  l.bias.fill(T{0});
}

template <typename T>
void init_layer(Conv1dLayer<T>& l, Rng& rng) {
  he_uniform(l.weight, l.in_channels() * l.kernel(), rng);
  l.bias.fill(T{0});
}

}  // namespace oratory::nn
