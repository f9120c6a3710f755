#pragma once

// Talk-grouped, label-stratified k-fold cross-validation around mini-batch
// BCE training with Adam and early stopping on validation talk-level AUC.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "oratory/evaluation.hpp"
#include "oratory/labeling.hpp"
#include "oratory/model.hpp"
#include "oratory/nn/adam.hpp"
#include "oratory/nn/loss.hpp"
#include "oratory/random.hpp"

namespace oratory {

struct TrainConfig {
  double learning_rate = 5e-6;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  std::size_t threads = 1;  // folds trained concurrently
  Architecture arch;
  /// Called after every epoch with (epoch, train_loss, val_auc).
  std::function<void(std::size_t, double, double)> on_epoch;

  void validate() const {
    if (folds < 2) throw ArgumentError("TrainConfig: folds must be at least 2");
    if (batch_size < 2) throw ArgumentError("TrainConfig: batch_size must be at least 2");
    if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
      throw ArgumentError("TrainConfig: learning_rate must be finite and non-negative");
    }
    if (threads < 1) throw ArgumentError("TrainConfig: threads must be at least 1");
  }
};

struct FoldSplit {
  std::size_t folds = 0;
  std::map<std::string, std::size_t> fold_of;

  std::vector<TalkRecord> talks_in(const std::vector<TalkRecord>& talks, std::size_t fold) const {
    std::vector<TalkRecord> out;
    for (const TalkRecord& t : talks) {
      if (fold_of.at(t.talk_id) == fold) out.push_back(t);
    }
    return out;
  }

  std::vector<TalkRecord> talks_not_in(const std::vector<TalkRecord>& talks, std::size_t fold) const {
    std::vector<TalkRecord> out;
    for (const TalkRecord& t : talks) {
      if (fold_of.at(t.talk_id) != fold) out.push_back(t);
    }
    return out;
  }
};

/// Stratified assignment of whole talks to folds: each class is shuffled
/// with the seed and dealt round-robin, the second class continuing where
/// the first stopped so fold sizes stay within one of each other.
inline FoldSplit make_folds(const std::vector<TalkRecord>& talks, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("make_folds: need at least 2 folds");
  std::array<std::vector<std::string>, 2> by_class;
  for (const TalkRecord& t : talks) {
    if (!t.label) throw ArgumentError("make_folds: talk " + t.talk_id + " has no label");
    by_class[static_cast<std::size_t>(*t.label)].push_back(t.talk_id);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < folds) {
      throw ArgumentError("make_folds: " + std::to_string(by_class[c].size()) + " talks with label " +
                          std::to_string(c) + ", need at least " + std::to_string(folds));
    }
  }
  FoldSplit split;
  split.folds = folds;
  Rng rng(seed, "folds");
  std::size_t next = 0;
  for (auto& ids : by_class) {
    std::sort(ids.begin(), ids.end());
    rng.shuffle(std::span<std::string>(ids));
    for (const std::string& id : ids) {
      if (!split.fold_of.emplace(id, next).second) throw ArgumentError("make_folds: duplicate talk " + id);
      next = (next + 1) % folds;
    }
  }
  return split;
}

inline FoldSplit make_folds(const LabeledDataset& dataset, std::size_t folds, std::uint64_t seed) {
  return make_folds(dataset.talks, folds, seed);
}

/// Segments paired with the label of their talk.
struct LabeledSegments {
  std::vector<const SegmentFeatures*> segments;
  std::vector<int> labels;

  std::size_t size() const { return segments.size(); }
};

inline LabeledSegments select_segments(const std::vector<TalkRecord>& talks,
                                       std::span<const SegmentFeatures> segments) {
  std::unordered_map<std::string, int> label_of;
  for (const TalkRecord& t : talks) {
    if (!t.label) throw ArgumentError("talk " + t.talk_id + " has no label");
    label_of[t.talk_id] = *t.label;
  }
  LabeledSegments out;
  for (const SegmentFeatures& s : segments) {
    const auto it = label_of.find(s.talk_id);
    if (it == label_of.end()) continue;
    out.segments.push_back(&s);
    out.labels.push_back(it->second);
  }
  return out;
}

/// Talk-level ROC AUC of max-aggregated segment scores.
inline double talk_auc(const LabeledSegments& data, std::span<const double> scores,
                       Aggregation strategy = Aggregation::max) {
  std::map<std::string, std::pair<std::vector<double>, int>> per_talk;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& entry = per_talk[data.segments[i]->talk_id];
    entry.first.push_back(scores[i]);
    entry.second = data.labels[i];
  }
  std::vector<double> talk_scores;
  std::vector<int> labels;
  for (const auto& [id, entry] : per_talk) {
    talk_scores.push_back(aggregate_talk_score(entry.first, strategy));
    labels.push_back(entry.second);
  }
  return roc_auc(talk_scores, labels);
}

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_auc = 0;
};

inline void write_curve_csv(std::ostream& os, const std::vector<EpochRecord>& curve) {
  os << "epoch,train_loss,val_auc\n";
  os.precision(17);
  for (const auto& e : curve) os << e.epoch << ',' << e.train_loss << ',' << e.val_auc << '\n';
}

struct TrainResult {
  FusionModel<float> model;  // parameters of the best validation epoch
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
  double best_val_auc = 0;
};

/// Mini-batch order for one epoch; a trailing batch of one segment is folded
/// into its predecessor because training-mode batch norm needs two samples.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    if (end - begin == 1 && !batches.empty()) {
      batches.back().push_back(order[begin]);
    } else {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return batches;
}

/// Runs one optimizer epoch over `train`; returns the mean segment loss.
inline double train_epoch(FusionModel<float>& model, FusionModel<float>& grads, nn::AdamState<float>& adam,
                          const LabeledSegments& train, std::size_t batch_size, Rng& shuffle_rng,
                          std::size_t epoch) {
  double loss_sum = 0;
  std::size_t seen = 0;
  ForwardCache<float> cache;
  const auto batches = epoch_batches(train.size(), batch_size, shuffle_rng);
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    const auto& idx = batches[bi];
    std::vector<const SegmentFeatures*> segs;
    nn::Tensor<float> targets({idx.size(), 1});
    for (std::size_t k = 0; k < idx.size(); ++k) {
      segs.push_back(train.segments[idx[k]]);
      targets[k] = static_cast<float>(train.labels[idx[k]]);
    }
    const auto input = pack_input<float>(std::span<const SegmentFeatures* const>(segs));
    const nn::Tensor<float>& probs = model.forward_train(input, cache);
    const double loss = nn::bce_loss(probs, targets);
    if (!std::isfinite(loss) || !probs.all_finite()) {
      throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(bi) + " (segments " + segs.front()->talk_id + "/" +
                         std::to_string(segs.front()->segment_index) + " ...)");
    }
    grads.zero();
    model.backward(cache, nn::bce_sigmoid_grad(probs, targets), grads);
    const auto grad_ptrs = std::as_const(grads).trainable();
    nn::adam_step(model.trainable(), grad_ptrs, adam);
    loss_sum += loss * static_cast<double>(idx.size());
    seen += idx.size();
  }
  return loss_sum / static_cast<double>(seen);
}

/// Trains a fresh model on `train`, early-stopping on the talk-level
/// (max-aggregated) AUC of `val`, and returns the best epoch's parameters.
inline TrainResult train_fold(const LabeledSegments& train, const LabeledSegments& val, const TrainConfig& config) {
  config.validate();
  if (train.size() < 2) throw ArgumentError("train_fold: need at least 2 training segments");
  if (val.size() == 0) throw ArgumentError("train_fold: empty validation split");

  TrainResult result;
  FusionModel<float> model = FusionModel<float>::initialize(config.arch, config.seed);
  FusionModel<float> grads = FusionModel<float>::zeros(config.arch);
  nn::AdamState<float> adam({config.learning_rate}, model.trainable());
  Rng shuffle_rng(config.seed, "shuffle");

  result.model = model;
  result.best_val_auc = -1;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double loss = train_epoch(model, grads, adam, train, config.batch_size, shuffle_rng, epoch);
    const auto raw = model.score(std::span<const SegmentFeatures* const>(val.segments));
    const std::vector<double> scores(raw.begin(), raw.end());
    const double auc = talk_auc(val, scores);
    result.curve.push_back({epoch, loss, auc});
    if (config.on_epoch) config.on_epoch(epoch, loss, auc);
    if (auc > result.best_val_auc) {
      result.best_val_auc = auc;
      result.best_epoch = epoch;
      result.model = model;
      stale = 0;
    } else {
      ++stale;
    }
    // A perfect AUC cannot be beaten, so the returned parameters are final.
    if (stale >= config.patience || result.best_val_auc >= 1.0) break;
  }
  return result;
}

struct FoldResult {
  std::size_t fold = 0;
  TrainResult training;
  std::vector<EvaluationReport> reports;  // one per aggregation strategy, on the held-out fold
  std::vector<std::string> test_talks;
  std::vector<std::string> val_talks;
  std::vector<std::string> train_talks;
};

struct FoldPartition {
  std::vector<TalkRecord> train;
  std::vector<TalkRecord> val;   // drives early stopping
  std::vector<TalkRecord> test;  // held out for the fold's report
};

/// Fold `f` is held out for testing; a stratified slice of the remaining
/// talks drives early stopping and the rest is optimized on.
inline FoldPartition partition_fold(const std::vector<TalkRecord>& talks, const FoldSplit& split, std::size_t f,
                                    std::uint64_t seed) {
  FoldPartition p;
  p.test = split.talks_in(talks, f);
  const auto rest = split.talks_not_in(talks, f);
  const FoldSplit inner =
      make_folds(rest, std::max<std::size_t>(split.folds - 1, 2), derive_seed(seed, "inner" + std::to_string(f)));
  p.val = inner.talks_in(rest, 0);
  p.train = inner.talks_not_in(rest, 0);
  return p;
}

inline std::vector<std::string> talk_ids(const std::vector<TalkRecord>& talks) {
  std::vector<std::string> out;
  for (const auto& t : talks) out.push_back(t.talk_id);
  return out;
}

inline FoldResult run_fold(const std::vector<TalkRecord>& talks, std::span<const SegmentFeatures> segments,
                           const FoldSplit& split, std::size_t f, const TrainConfig& config) {
  FoldResult out;
  out.fold = f;
  const FoldPartition part = partition_fold(talks, split, f, config.seed);
  out.test_talks = talk_ids(part.test);
  out.val_talks = talk_ids(part.val);
  out.train_talks = talk_ids(part.train);

  TrainConfig fold_config = config;
  fold_config.seed = derive_seed(config.seed, "fold" + std::to_string(f));
  out.training =
      train_fold(select_segments(part.train, segments), select_segments(part.val, segments), fold_config);
  out.reports = evaluate(out.training.model, part.test, segments);
  return out;
}

/// Full cross-validation; deterministic given config.seed regardless of
/// config.threads.
inline std::vector<FoldResult> run_cv(const LabeledDataset& dataset, std::span<const SegmentFeatures> segments,
                                      const TrainConfig& config) {
  config.validate();
  const FoldSplit split = make_folds(dataset, config.folds, config.seed);
  std::vector<FoldResult> results(config.folds);
  if (config.threads <= 1) {
    for (std::size_t f = 0; f < config.folds; ++f) results[f] = run_fold(dataset.talks, segments, split, f, config);
    return results;
  }
  for (std::size_t begin = 0; begin < config.folds; begin += config.threads) {
    std::vector<std::future<FoldResult>> jobs;
    const std::size_t end = std::min(config.folds, begin + config.threads);
    for (std::size_t f = begin; f < end; ++f) {
      jobs.push_back(std::async(std::launch::async,
                                [&, f] { return run_fold(dataset.talks, segments, split, f, config); }));
    }
    for (std::size_t f = begin; f < end; ++f) results[f] = jobs[f - begin].get();
  }
  return results;
}

inline std::vector<EvaluationReport> average_cv(const std::vector<FoldResult>& folds) {
  std::vector<std::vector<EvaluationReport>> per_fold;
  for (const auto& f : folds) per_fold.push_back(f.reports);
  return average_reports(per_fold);
}

}  // namespace oratory
