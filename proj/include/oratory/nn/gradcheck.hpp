#pragma once

// Central finite-difference verification of analytic gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "oratory/random.hpp"

namespace oratory::nn {

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // probes whose perturbation crossed a ReLU kink
  double tolerance = 0.0;
  bool passed = false;
};

/// One coordinate to perturb and the analytic derivative claimed for it.
struct GradProbe {
  double* value;
  double analytic;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor of the relative error, so that vanishing gradients are
  /// compared in absolute terms instead of amplifying rounding noise.
  double floor = 1e-6;
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares each probe against (loss(x+h) - loss(x-h)) / 2h. When `signature`
/// is given, a probe whose perturbed evaluation changes the signature (the
/// ReLU activation pattern) is not differentiable there and is skipped.
inline GradCheckReport grad_check(std::string name, const std::vector<GradProbe>& probes,
                                  const std::function<double()>& loss,
                                  const GradCheckOptions& options = {},
                                  const std::function<std::vector<bool>()>& signature = {}) {
  GradCheckReport report;
  report.name = std::move(name);
  report.tolerance = options.tolerance;
  std::vector<bool> base_sig;
  if (signature) {
    loss();
    base_sig = signature();
  }
  for (const GradProbe& probe : probes) {
    const double original = *probe.value;
    *probe.value = original + options.step;
    const double up = loss();
    const bool up_same = !signature || signature() == base_sig;
    *probe.value = original - options.step;
    const double down = loss();
    const bool down_same = !signature || signature() == base_sig;
    *probe.value = original;
    if (!up_same || !down_same) {
      ++report.skipped;
      continue;
    }
    const double numeric = (up - down) / (2.0 * options.step);
    report.max_rel_error =
        std::max(report.max_rel_error, relative_error(probe.analytic, numeric, options.floor));
    ++report.checked;
  }
  report.passed = report.checked > 0 && report.max_rel_error < options.tolerance;
  return report;
}

/// Up to `count` distinct indices in [0, size), chosen with `rng`.
inline std::vector<std::size_t> sample_indices(std::size_t size, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx;
  if (count >= size) {
    idx.resize(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    return idx;
  }
  while (idx.size() < count) {
    const std::size_t i = static_cast<std::size_t>(rng.below(size));
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace oratory::nn
