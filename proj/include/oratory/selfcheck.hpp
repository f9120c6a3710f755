#pragma once

// Gradient self-checks run by `oratory gradcheck` and the acceptance suite:
// every layer kind in isolation, then the assembled network end to end, all
// in double precision against central finite differences.

#include <string>
#include <vector>

#include "oratory/model.hpp"
#include "oratory/nn/gradcheck.hpp"
#include "oratory/nn/layers.hpp"
#include "oratory/nn/loss.hpp"
#include "oratory/random.hpp"

namespace oratory {

namespace detail {

inline nn::Tensor<double> random_tensor(nn::Shape shape, Rng& rng, double scale = 1.0) {
  nn::Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

// sum(y * weights): gives every output its own upstream gradient.
inline double project(const nn::Tensor<double>& y, const nn::Tensor<double>& weights) {
  double acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * weights[i];
  return acc;
}

inline void add_probes(std::vector<nn::GradProbe>& out, nn::Tensor<double>& value, const nn::Tensor<double>& grad,
                       std::size_t count, Rng& rng) {
  for (std::size_t i : nn::sample_indices(value.size(), count, rng)) out.push_back({&value[i], grad[i]});
}

}  // namespace detail

/// Isolated checks of linear, conv1d (dilations 1, 2, 4), batch norm,
/// ReLU, average pooling and the sigmoid + BCE composition.
inline std::vector<nn::GradCheckReport> layer_grad_checks(std::uint64_t seed,
                                                          const nn::GradCheckOptions& opts = {}) {
  using detail::add_probes;
  using detail::random_tensor;
  Rng rng(seed, "gradcheck");
  std::vector<nn::GradCheckReport> reports;

  {
    nn::LinearLayer<double> l(7, 5);
    l.weight = random_tensor({7, 5}, rng);
    l.bias = random_tensor({5}, rng);
    auto x = random_tensor({4, 7}, rng);
    const auto r = random_tensor({4, 5}, rng);
    auto grad = nn::zeros_like(l);
    const auto dx = nn::linear_backward(x, l, r, grad);
    std::vector<nn::GradProbe> probes;
    add_probes(probes, l.weight, grad.weight, 35, rng);
    add_probes(probes, l.bias, grad.bias, 5, rng);
    add_probes(probes, x, dx, 28, rng);
    reports.push_back(
        nn::grad_check("linear", probes, [&] { return detail::project(nn::linear_forward(x, l), r); }, opts));
  }

  for (std::size_t dilation : {1u, 2u, 4u}) {
    nn::Conv1dLayer<double> l(3, 4, 5, dilation);
    l.weight = random_tensor(l.weight.shape(), rng);
    l.bias = random_tensor({4}, rng);
    auto x = random_tensor({2, 3, 30}, rng);
    const auto r = random_tensor(nn::conv1d_forward(x, l).shape(), rng);
    auto grad = nn::zeros_like(l);
    const auto dx = nn::conv1d_backward(x, l, r, grad);
    std::vector<nn::GradProbe> probes;
    add_probes(probes, l.weight, grad.weight, 60, rng);
    add_probes(probes, l.bias, grad.bias, 4, rng);
    add_probes(probes, x, dx, 60, rng);
    reports.push_back(nn::grad_check("conv1d dilation " + std::to_string(dilation), probes,
                                     [&] { return detail::project(nn::conv1d_forward(x, l), r); }, opts));
  }

  {
    nn::BatchNormLayer<double> bn(5);
    bn.gamma = random_tensor({5}, rng);
    bn.beta = random_tensor({5}, rng);
    auto x = random_tensor({6, 5}, rng, 2.0);
    const auto r = random_tensor({6, 5}, rng);
    nn::BatchNormCache<double> cache;
    nn::BatchNormLayer<double> scratch = bn;
    nn::batchnorm_forward_train(x, scratch, cache);
    auto grad = nn::zeros_like(bn);
    const auto dx = nn::batchnorm_backward(cache, bn, r, grad);
    std::vector<nn::GradProbe> probes;
    add_probes(probes, bn.gamma, grad.gamma, 5, rng);
    add_probes(probes, bn.beta, grad.beta, 5, rng);
    add_probes(probes, x, dx, 30, rng);
    auto loss = [&] {
      nn::BatchNormLayer<double> s = bn;
      nn::BatchNormCache<double> c;
      return detail::project(nn::batchnorm_forward_train(x, s, c), r);
    };
    reports.push_back(nn::grad_check("batchnorm", probes, loss, opts));
  }

  {
    auto x = random_tensor({3, 8}, rng);
    for (double& v : x.data()) v += v >= 0 ? 0.1 : -0.1;
    const auto r = random_tensor({3, 8}, rng);
    const auto dx = nn::relu_backward(x, r);
    std::vector<nn::GradProbe> probes;
    add_probes(probes, x, dx, 24, rng);
    reports.push_back(nn::grad_check("relu", probes, [&] { return detail::project(nn::relu(x), r); }, opts));
  }

  {
    auto x = random_tensor({2, 3, 9}, rng);
    const auto r = random_tensor(nn::avgpool1d(x, 2, 2).shape(), rng);
    const auto dx = nn::avgpool1d_backward(x.shape(), 2, 2, r);
    std::vector<nn::GradProbe> probes;
    add_probes(probes, x, dx, 54, rng);
    reports.push_back(
        nn::grad_check("avgpool", probes, [&] { return detail::project(nn::avgpool1d(x, 2, 2), r); }, opts));
  }

  {
    auto z = random_tensor({8, 1}, rng);
    nn::Tensor<double> y({8, 1});
    for (std::size_t i = 0; i < 8; ++i) y[i] = static_cast<double>(i % 2);
    const auto g = nn::bce_sigmoid_grad(nn::sigmoid(z), y);
    std::vector<nn::GradProbe> probes;
    add_probes(probes, z, g, 8, rng);
    reports.push_back(nn::grad_check("sigmoid+bce", probes, [&] { return nn::bce_loss(nn::sigmoid(z), y); }, opts));
  }
  return reports;
}

struct ModelGradCheckOptions {
  std::size_t batch = 4;
  std::size_t probes_per_tensor = 6;
  std::size_t input_probes = 12;  // per modality
  nn::GradCheckOptions check{1e-5, 1e-3, 1e-6};
};

/// Training-mode BCE of the whole network on a random batch, differentiated
/// by backward() and by finite differences over sampled parameters and
/// inputs. Probes whose perturbation flips any ReLU are skipped.
inline nn::GradCheckReport model_grad_check(const Architecture& arch, std::uint64_t seed,
                                            const ModelGradCheckOptions& opts = {}) {
  using detail::add_probes;
  FusionModel<double> model = FusionModel<double>::initialize(arch, seed);
  Rng rng(seed, "gradcheck-model");
  // Non-trivial batch-norm affine parameters so their gradients are exercised.
  auto perturb = [&](nn::BatchNormLayer<double>& bn) {
    for (double& v : bn.gamma.data()) v = 1.0 + 0.2 * rng.normal();
    for (double& v : bn.beta.data()) v = 0.2 * rng.normal();
  };
  perturb(model.fusion_norm());
  for (auto& bn : model.fc_norms()) perturb(bn);
  for (double& v : model.head().bias.data()) v = 0.1 * rng.normal();

  const std::size_t batch = opts.batch;
  ModelInput<double> input{detail::random_tensor({batch, arch.pose_dim, arch.frames}, rng),
                           detail::random_tensor({batch, arch.face_dim}, rng),
                           detail::random_tensor({batch, arch.voice_dim}, rng)};
  nn::Tensor<double> targets({batch, 1});
  for (std::size_t i = 0; i < batch; ++i) targets[i] = static_cast<double>(i % 2);

  // Running statistics change on every training-mode pass; the loss itself
  // does not depend on them, but keep a pristine copy so each evaluation
  // starts from the same state.
  const FusionModel<double> pristine = model;
  ForwardCache<double> cache;
  auto loss = [&] {
    for (std::size_t i = 0; i < model.fc_norms().size(); ++i) {
      model.fc_norms()[i].running_mean = pristine.fc_norms()[i].running_mean;
      model.fc_norms()[i].running_var = pristine.fc_norms()[i].running_var;
    }
    model.fusion_norm().running_mean = pristine.fusion_norm().running_mean;
    model.fusion_norm().running_var = pristine.fusion_norm().running_var;
    return nn::bce_loss(model.forward_train(input, cache), targets);
  };

  loss();
  FusionModel<double> grads = FusionModel<double>::zeros(arch);
  ModelInput<double> dinput = model.backward(cache, nn::bce_sigmoid_grad(cache.probs, targets), grads);

  std::vector<nn::GradProbe> probes;
  auto params = model.trainable();
  auto grad_params = grads.trainable();
  for (std::size_t i = 0; i < params.size(); ++i) {
    add_probes(probes, *params[i], *grad_params[i], opts.probes_per_tensor, rng);
  }
  if (arch.use_pose) add_probes(probes, input.pose, dinput.pose, opts.input_probes, rng);
  if (arch.use_face) add_probes(probes, input.face, dinput.face, opts.input_probes, rng);
  if (arch.use_voice) add_probes(probes, input.voice, dinput.voice, opts.input_probes, rng);

  return nn::grad_check("full model", probes, loss, opts.check, [&] { return cache.relu_pattern(); });
}

}  // namespace oratory
