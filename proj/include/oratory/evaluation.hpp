#pragma once

// Talk-level metrics: segment scores are aggregated per talk (max, mean or
// median) before ROC AUC and F1 are computed.

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "oratory/error.hpp"
#include "oratory/feature_store.hpp"
#include "oratory/labeling.hpp"
#include "oratory/model.hpp"

namespace oratory {

enum class Aggregation { max, mean, median };
inline constexpr std::array<Aggregation, 3> kAllAggregations = {Aggregation::max, Aggregation::mean,
                                                                Aggregation::median};

inline std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::max: return "max";
    case Aggregation::mean: return "mean";
    case Aggregation::median: return "median";
  }
  return "?";
}

inline Aggregation parse_aggregation(std::string_view s) {
  if (s == "max") return Aggregation::max;
  if (s == "mean") return Aggregation::mean;
  if (s == "median") return Aggregation::median;
  throw ArgumentError("unknown aggregation '" + std::string(s) + "' (expected max, mean or median)");
}

inline double aggregate_talk_score(std::span<const double> segment_scores, Aggregation strategy) {
  if (segment_scores.empty()) throw ArgumentError("aggregate_talk_score: no segment scores");
  switch (strategy) {
    case Aggregation::max:
      return *std::max_element(segment_scores.begin(), segment_scores.end());
    case Aggregation::mean:
      return std::accumulate(segment_scores.begin(), segment_scores.end(), 0.0) /
             static_cast<double>(segment_scores.size());
    case Aggregation::median: {
      std::vector<double> s(segment_scores.begin(), segment_scores.end());
      const std::size_t k = (s.size() + 1) / 2 - 1;  // lower median
      std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
      return s[k];
    }
  }
  return 0.0;
}

/// Exact ROC AUC via the Mann-Whitney rank-sum statistic with midranks, so
/// tied positive/negative pairs count one half.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("roc_auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ArgumentError("roc_auc: both classes must be present");
  const double np = static_cast<double>(n_pos), nn_ = static_cast<double>(n_neg);
  return (positive_rank_sum - np * (np + 1) / 2) / (np * nn_);
}

inline constexpr double kF1Threshold = 0.5;

/// F1 of the positive class with predictions score > threshold; 0 when
/// precision + recall is 0.
inline double f1_score(std::span<const double> scores, std::span<const int> labels,
                       double threshold = kF1Threshold) {
  if (scores.size() != labels.size()) throw ArgumentError("f1_score: scores and labels differ in length");
  if (scores.empty()) throw ArgumentError("f1_score: empty input");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    if (predicted && labels[i] == 1) ++tp;
    else if (predicted) ++fp;
    else if (labels[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  // 2PR/(P+R) reduced to counts: one rounding instead of four.
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

struct EvaluationReport {
  Aggregation aggregation = Aggregation::max;
  double roc_auc = 0;
  double f1 = 0;
  std::size_t n_talks = 0;
  std::map<std::string, double> per_talk_scores;
};

/// Segment indices grouped by talk id.
inline std::unordered_map<std::string, std::vector<std::size_t>> group_by_talk(
    std::span<const SegmentFeatures* const> segments) {
  std::unordered_map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < segments.size(); ++i) out[segments[i]->talk_id].push_back(i);
  return out;
}

/// Reports from already computed segment scores. `talks` supplies the labels;
/// every talk must own at least one segment.
inline std::vector<EvaluationReport> talk_reports(const std::vector<TalkRecord>& talks,
                                                  std::span<const SegmentFeatures* const> segments,
                                                  std::span<const double> segment_scores,
                                                  std::span<const Aggregation> strategies) {
  if (segments.size() != segment_scores.size()) throw ArgumentError("talk_reports: score count mismatch");
  const auto groups = group_by_talk(segments);
  std::vector<EvaluationReport> reports;
  for (Aggregation strategy : strategies) {
    EvaluationReport rep;
    rep.aggregation = strategy;
    std::vector<double> scores;
    std::vector<int> labels;
    for (const TalkRecord& t : talks) {
      if (!t.label) throw ArgumentError("evaluate: talk " + t.talk_id + " has no label");
      const auto it = groups.find(t.talk_id);
      if (it == groups.end() || it->second.empty()) {
        throw ArgumentError("evaluate: talk " + t.talk_id + " has no segments");
      }
      std::vector<double> seg_scores;
      for (std::size_t i : it->second) seg_scores.push_back(segment_scores[i]);
      const double s = aggregate_talk_score(seg_scores, strategy);
      rep.per_talk_scores[t.talk_id] = s;
      scores.push_back(s);
      labels.push_back(*t.label);
    }
    rep.n_talks = scores.size();
    rep.roc_auc = roc_auc(scores, labels);
    rep.f1 = f1_score(scores, labels);
    reports.push_back(std::move(rep));
  }
  return reports;
}

/// Segments belonging to `talks`, in segment-file order.
inline std::vector<const SegmentFeatures*> segments_of(const std::vector<TalkRecord>& talks,
                                                       std::span<const SegmentFeatures> segments) {
  std::unordered_map<std::string, bool> wanted;
  for (const TalkRecord& t : talks) wanted[t.talk_id] = true;
  std::vector<const SegmentFeatures*> out;
  for (const SegmentFeatures& s : segments) {
    if (wanted.count(s.talk_id)) out.push_back(&s);
  }
  return out;
}

/// Scores every segment of `talks` in infer mode and reports each strategy.
template <typename T>
std::vector<EvaluationReport> evaluate(const FusionModel<T>& model, const std::vector<TalkRecord>& talks,
                                       std::span<const SegmentFeatures> segments,
                                       std::span<const Aggregation> strategies = kAllAggregations) {
  const auto segs = segments_of(talks, segments);
  const auto raw = model.score(std::span<const SegmentFeatures* const>(segs));
  const std::vector<double> scores(raw.begin(), raw.end());
  return talk_reports(talks, segs, scores, strategies);
}

/// Arithmetic mean of per-fold metrics for each strategy.
inline std::vector<EvaluationReport> average_reports(const std::vector<std::vector<EvaluationReport>>& folds) {
  if (folds.empty()) return {};
  std::vector<EvaluationReport> out;
  for (std::size_t s = 0; s < folds.front().size(); ++s) {
    EvaluationReport avg;
    avg.aggregation = folds.front()[s].aggregation;
    for (const auto& fold : folds) {
      avg.roc_auc += fold.at(s).roc_auc;
      avg.f1 += fold.at(s).f1;
      avg.n_talks += fold.at(s).n_talks;
      avg.per_talk_scores.insert(fold.at(s).per_talk_scores.begin(), fold.at(s).per_talk_scores.end());
    }
    avg.roc_auc /= static_cast<double>(folds.size());
    avg.f1 /= static_cast<double>(folds.size());
    out.push_back(std::move(avg));
  }
  return out;
}

inline nlohmann::json to_json(const EvaluationReport& r, bool with_scores = false) {
  nlohmann::json j = {{"strategy", to_string(r.aggregation)},
                      {"roc_auc", r.roc_auc},
                      {"f1", r.f1},
                      {"n_talks", r.n_talks}};
  if (with_scores) j["per_talk_scores"] = r.per_talk_scores;
  return j;
}

/// One row per report; `model` and `inputs` columns are emitted when given.
inline void write_report_csv(std::ostream& os, const std::vector<EvaluationReport>& reports,
                             const std::string& model = {}, const std::string& inputs = {},
                             bool header = true) {
  const bool extra = !model.empty();
  if (header) os << (extra ? "model,inputs," : "") << "strategy,roc_auc,f1,n_talks\n";
  os.precision(17);
  for (const auto& r : reports) {
    if (extra) os << model << ',' << inputs << ',';
    os << to_string(r.aggregation) << ',' << r.roc_auc << ',' << r.f1 << ',' << r.n_talks << '\n';
  }
}

}  // namespace oratory
