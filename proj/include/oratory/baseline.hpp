#pragma once

// Interpretable-feature comparator: hand-defined posture, motion and audio
// descriptors per segment fed to a logistic regression, trained and scored
// under the same talk-grouped cross-validation as the fusion network.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "oratory/evaluation.hpp"
#include "oratory/feature_store.hpp"
#include "oratory/nn/adam.hpp"
#include "oratory/nn/init.hpp"
#include "oratory/nn/layers.hpp"
#include "oratory/nn/loss.hpp"
#include "oratory/training.hpp"

namespace oratory {

struct BaselineFeatures {
  std::optional<double> posture_openness;  // mean wrist distance / shoulder distance
  double body_energy = 0;                  // mean frame-to-frame keypoint displacement
  std::optional<double> volume_mean;
  std::optional<double> filled_pause_rate;
};

inline constexpr double kDegenerateShoulderWidth = 1e-6;

namespace detail {

inline double keypoint_distance(const SegmentFeatures& s, std::size_t frame_a, std::size_t kp_a,
                                std::size_t frame_b, std::size_t kp_b) {
  double d2 = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double d = static_cast<double>(s.pose_at(frame_a, kp_a * 3 + c)) - s.pose_at(frame_b, kp_b * 3 + c);
    d2 += d * d;
  }
  return std::sqrt(d2);
}

}  // namespace detail

inline BaselineFeatures derive_baseline_features(const SegmentFeatures& seg) {
  validate_segment(seg, 0);
  BaselineFeatures f;

  double ratio_sum = 0;
  bool degenerate = false;
  for (std::size_t t = 0; t < kFrames; ++t) {
    const double shoulders = detail::keypoint_distance(seg, t, keypoint::left_shoulder, t, keypoint::right_shoulder);
    if (shoulders < kDegenerateShoulderWidth) {
      degenerate = true;
      break;
    }
    ratio_sum += detail::keypoint_distance(seg, t, keypoint::left_wrist, t, keypoint::right_wrist) / shoulders;
  }
  if (!degenerate) f.posture_openness = ratio_sum / static_cast<double>(kFrames);

  double motion = 0;
  for (std::size_t t = 1; t < kFrames; ++t) {
    for (std::size_t k = 0; k < kKeypoints; ++k) motion += detail::keypoint_distance(seg, t, k, t - 1, k);
  }
  f.body_energy = motion / static_cast<double>((kFrames - 1) * kKeypoints);

  if (seg.baseline.size() >= 1) f.volume_mean = seg.baseline[0];
  if (seg.baseline.size() >= 3) f.filled_pause_rate = seg.baseline[2];
  return f;
}

/// Which predefined feature groups the classifier sees.
enum class BaselineInputs { video, audio, video_audio };

inline std::string to_string(BaselineInputs in) {
  switch (in) {
    case BaselineInputs::video: return "video";
    case BaselineInputs::audio: return "audio";
    case BaselineInputs::video_audio: return "video+audio";
  }
  return "?";
}

inline constexpr std::array<const char*, 4> kBaselineFeatureNames = {"posture_openness", "body_energy",
                                                                     "volume_mean", "filled_pause_rate"};

inline std::vector<std::size_t> baseline_columns(BaselineInputs in) {
  switch (in) {
    case BaselineInputs::video: return {0, 1};
    case BaselineInputs::audio: return {2, 3};
    case BaselineInputs::video_audio: return {0, 1, 2, 3};
  }
  return {};
}

/// Raw feature row, NaN marking an absent value.
inline std::array<double, 4> baseline_row(const BaselineFeatures& f) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {f.posture_openness.value_or(nan), f.body_energy, f.volume_mean.value_or(nan),
          f.filled_pause_rate.value_or(nan)};
}

struct BaselineConfig {
  double learning_rate = 0.1;  // standardized inputs, few steps per epoch
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  BaselineInputs inputs = BaselineInputs::video_audio;
};

/// Standardized logistic regression over the selected feature columns.
struct BaselineModel {
  std::vector<std::size_t> columns;  // indices into kBaselineFeatureNames actually used
  std::vector<double> mean;          // training-fold mean, also the imputation value
  std::vector<double> scale;         // training-fold standard deviation
  nn::LinearLayer<double> layer;
  std::vector<std::string> warnings;

  std::vector<double> standardize(const std::array<double, 4>& row) const {
    std::vector<double> z(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const double v = row[columns[j]];
      z[j] = std::isnan(v) ? 0.0 : (v - mean[j]) / scale[j];
    }
    return z;
  }

  nn::Tensor<double> design(std::span<const std::array<double, 4>> rows) const {
    nn::Tensor<double> x({rows.size(), columns.size()});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto z = standardize(rows[i]);
      std::copy(z.begin(), z.end(), x.ptr() + i * columns.size());
    }
    return x;
  }

  std::vector<double> score(std::span<const std::array<double, 4>> rows) const {
    const auto p = nn::sigmoid(nn::linear_forward(design(rows), layer));
    return {p.data().begin(), p.data().end()};
  }
};

/// Standardization statistics from training rows only; columns with no
/// observed value are dropped with a warning.
inline BaselineModel prepare_baseline(std::span<const std::array<double, 4>> train_rows, BaselineInputs inputs) {
  BaselineModel m;
  for (std::size_t c : baseline_columns(inputs)) {
    double sum = 0, sum2 = 0;
    std::size_t n = 0;
    for (const auto& row : train_rows) {
      if (std::isnan(row[c])) continue;
      sum += row[c];
      sum2 += row[c] * row[c];
      ++n;
    }
    if (n == 0) {
      m.warnings.push_back(std::string("baseline: feature ") + kBaselineFeatureNames[c] +
                           " absent in every training segment, dropped");
      continue;
    }
    const double mu = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum2 / static_cast<double>(n) - mu * mu);
    m.columns.push_back(c);
    m.mean.push_back(mu);
    m.scale.push_back(var > 1e-24 ? std::sqrt(var) : 1.0);
  }
  if (m.columns.empty()) throw ArgumentError("baseline: no usable feature columns");
  m.layer = nn::LinearLayer<double>(m.columns.size(), 1);
  return m;
}

struct BaselineTrainResult {
  BaselineModel model;
  std::vector<EpochRecord> curve;
};

/// Fits the logistic regression on `train` rows with BCE + Adam, early
/// stopping on talk-level max-aggregated AUC of `val`.
inline BaselineTrainResult fit_baseline(const LabeledSegments& train, std::span<const std::array<double, 4>> train_rows,
                                        const LabeledSegments& val, std::span<const std::array<double, 4>> val_rows,
                                        const BaselineConfig& config, std::uint64_t seed) {
  if (train.size() < 1 || val.size() < 1) throw ArgumentError("fit_baseline: empty split");
  BaselineTrainResult result;
  BaselineModel model = prepare_baseline(train_rows, config.inputs);
  Rng init_rng(seed, "init");
  nn::init_layer(model.layer, init_rng);
  const nn::Tensor<double> x_all = model.design(train_rows);
  const std::size_t width = model.columns.size();

  nn::AdamState<double> adam({config.learning_rate}, {&model.layer.weight, &model.layer.bias});
  Rng shuffle_rng(seed, "shuffle");
  result.model = model;
  double best = -1;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double loss_sum = 0;
    for (const auto& idx : epoch_batches(train.size(), config.batch_size, shuffle_rng)) {
      nn::Tensor<double> x({idx.size(), width}), y({idx.size(), 1});
      for (std::size_t k = 0; k < idx.size(); ++k) {
        std::copy(x_all.ptr() + idx[k] * width, x_all.ptr() + (idx[k] + 1) * width, x.ptr() + k * width);
        y[k] = train.labels[idx[k]];
      }
      const auto p = nn::sigmoid(nn::linear_forward(x, model.layer));
      const double loss = nn::bce_loss(p, y);
      if (!std::isfinite(loss)) throw NumericError("baseline: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(idx.size());
      auto grad = nn::zeros_like(model.layer);
      nn::linear_backward(x, model.layer, nn::bce_sigmoid_grad(p, y), grad);
      nn::adam_step<double>({&model.layer.weight, &model.layer.bias}, {&grad.weight, &grad.bias}, adam);
    }
    const double auc = talk_auc(val, model.score(val_rows));
    result.curve.push_back({epoch, loss_sum / static_cast<double>(train.size()), auc});
    if (auc > best) {
      best = auc;
      result.model = model;
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= config.patience || best >= 1.0) break;
  }
  return result;
}

struct BaselineCvResult {
  std::vector<std::vector<EvaluationReport>> fold_reports;
  std::vector<EvaluationReport> averaged;
  std::vector<BaselineModel> models;
  std::vector<std::string> warnings;
};

/// Cross-validated baseline. Uses the same fold and early-stopping split as
/// run_cv for equal `folds` and `seed`.
inline BaselineCvResult train_baseline(const LabeledDataset& dataset, std::span<const SegmentFeatures> segments,
                                       const BaselineConfig& config) {
  if (config.folds < 2) throw ArgumentError("train_baseline: need at least 2 folds");
  std::unordered_map<const SegmentFeatures*, std::array<double, 4>> rows;
  for (const SegmentFeatures& s : segments) rows[&s] = baseline_row(derive_baseline_features(s));
  auto rows_of = [&](const LabeledSegments& ls) {
    std::vector<std::array<double, 4>> out;
    for (const SegmentFeatures* s : ls.segments) out.push_back(rows.at(s));
    return out;
  };

  BaselineCvResult out;
  const FoldSplit split = make_folds(dataset, config.folds, config.seed);
  for (std::size_t f = 0; f < config.folds; ++f) {
    const FoldPartition part = partition_fold(dataset.talks, split, f, config.seed);
    const auto train = select_segments(part.train, segments);
    const auto val = select_segments(part.val, segments);
    const auto test = select_segments(part.test, segments);
    const auto fit = fit_baseline(train, rows_of(train), val, rows_of(val), config,
                                  derive_seed(config.seed, "baseline-fold" + std::to_string(f)));
    const auto test_scores = fit.model.score(rows_of(test));
    out.fold_reports.push_back(talk_reports(part.test, test.segments, test_scores, kAllAggregations));
    out.warnings.insert(out.warnings.end(), fit.model.warnings.begin(), fit.model.warnings.end());
    out.models.push_back(fit.model);
  }
  out.averaged = average_reports(out.fold_reports);
  return out;
}

}  // namespace oratory
