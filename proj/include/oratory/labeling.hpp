#pragma once

// Per-year weak labels from view counts: bottom third bad (0), top third
// good (1), middle third dropped.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "oratory/error.hpp"
#include "oratory/feature_store.hpp"

namespace oratory {

inline constexpr double kLowPercentile = 33.0;
inline constexpr double kHighPercentile = 66.0;

/// The ceil(p/100 * n)-th smallest value (1-indexed nearest rank).
template <typename V>
V percentile_nearest_rank(std::span<const V> values, double p) {
  if (values.empty()) throw ArgumentError("percentile_nearest_rank: empty list");
  if (!(p > 0.0 && p < 100.0)) throw ArgumentError("percentile_nearest_rank: p must lie in (0, 100)");
  std::vector<V> sorted(values.begin(), values.end());
  const double n = static_cast<double>(sorted.size());
  // p * n before the division keeps integer p exact (0.33 * 100 is not 33).
  const double rank = std::clamp(std::ceil(p * n / 100.0), 1.0, n);
  const auto k = static_cast<std::size_t>(rank) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  return sorted[k];
}

template <typename V>
V percentile_nearest_rank(const std::vector<V>& values, double p) {
  return percentile_nearest_rank(std::span<const V>(values), p);
}

struct LabeledDataset {
  std::vector<TalkRecord> talks;  // every entry carries a label
  std::vector<std::string> dropped;
};

struct YearThresholds {
  std::int64_t low = 0;
  std::int64_t high = 0;
};

inline std::map<int, YearThresholds> year_thresholds(const std::vector<TalkRecord>& manifest) {
  std::map<int, std::vector<std::int64_t>> by_year;
  for (const TalkRecord& t : manifest) by_year[t.year].push_back(t.view_count);
  std::map<int, YearThresholds> out;
  for (const auto& [year, views] : by_year) {
    out[year] = {percentile_nearest_rank(views, kLowPercentile),
                 percentile_nearest_rank(views, kHighPercentile)};
  }
  return out;
}

/// Labels strictly below the year's 33rd percentile 0, strictly above its
/// 66th percentile 1, drops the rest. Input order is preserved.
inline LabeledDataset label_by_year(const std::vector<TalkRecord>& manifest) {
  const auto thresholds = year_thresholds(manifest);
  LabeledDataset out;
  for (const TalkRecord& t : manifest) {
    const YearThresholds& th = thresholds.at(t.year);
    TalkRecord r = t;
    if (t.view_count < th.low) {
      r.label = 0;
    } else if (t.view_count > th.high) {
      r.label = 1;
    } else {
      out.dropped.push_back(t.talk_id);
      continue;
    }
    out.talks.push_back(std::move(r));
  }
  return out;
}

/// A manifest whose records already carry labels (e.g. read back from the
/// output of `label`); unlabeled records are reported as dropped.
inline LabeledDataset labeled_from_manifest(const std::vector<TalkRecord>& manifest) {
  LabeledDataset out;
  for (const TalkRecord& t : manifest) {
    if (t.label) {
      out.talks.push_back(t);
    } else {
      out.dropped.push_back(t.talk_id);
    }
  }
  return out;
}

}  // namespace oratory
