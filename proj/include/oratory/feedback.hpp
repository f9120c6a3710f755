#pragma once

// Modality-replacement diagnostic: swap one modality's latent block of a
// target segment for the block of a high-scoring donor, re-score, and point
// at the modality whose replacement helps most.

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "oratory/model.hpp"

namespace oratory {

struct ModalityOutcome {
  std::string donor_talk_id;
  std::uint32_t donor_segment_index = 0;
  double new_score = 0;
  double delta = 0;
};

struct FeedbackReport {
  std::string target_talk_id;
  std::uint32_t target_segment_index = 0;
  double base_score = 0;
  std::map<Modality, ModalityOutcome> per_modality;
  Modality recommended = Modality::pose;
};

/// Score of `target` with the `modality` block taken from `donor`.
template <typename T>
double replace_and_rescore(const SegmentLatents<T>& target, const SegmentLatents<T>& donor, Modality modality,
                           const FusionModel<T>& model) {
  if (!model.architecture().uses(modality)) {
    throw ArgumentError("replace_and_rescore: modality " + to_string(modality) + " is not used by the model");
  }
  SegmentLatents<T> mixed = target;
  mixed.block(modality) = donor.block(modality);
  return static_cast<double>(model.score_from_latents(mixed));
}

template <typename T>
double replace_and_rescore(const SegmentLatents<T>& target, const SegmentLatents<T>& donor,
                           std::string_view modality, const FusionModel<T>& model) {
  return replace_and_rescore(target, donor, parse_modality(modality), model);
}

/// Argmax over deltas; ties go to the earlier modality in pose, face, voice order.
inline Modality argmax_delta(const std::map<Modality, ModalityOutcome>& per_modality) {
  std::optional<Modality> best;
  double best_delta = 0;
  for (Modality m : kAllModalities) {
    const auto it = per_modality.find(m);
    if (it == per_modality.end()) continue;
    if (!best || it->second.delta > best_delta) {
      best = m;
      best_delta = it->second.delta;
    }
  }
  if (!best) throw ArgumentError("argmax_delta: no modality outcomes");
  return *best;
}

/// Index of the highest-scoring pool segment (first on ties).
inline std::size_t pick_donor(std::span<const double> pool_scores) {
  if (pool_scores.empty()) throw ArgumentError("recommend_modality: empty donor pool");
  std::size_t best = 0;
  for (std::size_t i = 1; i < pool_scores.size(); ++i) {
    if (pool_scores[i] > pool_scores[best]) best = i;
  }
  return best;
}

/// Feedback for `target` against precomputed pool latents and scores.
template <typename T>
FeedbackReport recommend_modality(const SegmentFeatures& target, const SegmentLatents<T>& target_latents,
                                  std::span<const SegmentFeatures* const> pool,
                                  std::span<const SegmentLatents<T>> pool_latents,
                                  std::span<const double> pool_scores, const FusionModel<T>& model) {
  const std::size_t donor = pick_donor(pool_scores);
  FeedbackReport rep;
  rep.target_talk_id = target.talk_id;
  rep.target_segment_index = target.segment_index;
  rep.base_score = static_cast<double>(model.score_from_latents(target_latents));
  for (Modality m : kAllModalities) {
    if (!model.architecture().uses(m)) continue;
    ModalityOutcome o;
    o.donor_talk_id = pool[donor]->talk_id;
    o.donor_segment_index = pool[donor]->segment_index;
    o.new_score = replace_and_rescore(target_latents, pool_latents[donor], m, model);
    o.delta = o.new_score - rep.base_score;
    rep.per_modality[m] = o;
  }
  rep.recommended = argmax_delta(rep.per_modality);
  return rep;
}

/// Latents and single-segment infer scores of a pool, computed once and
/// shared across many targets.
template <typename T>
struct DonorPool {
  std::vector<const SegmentFeatures*> segments;
  std::vector<SegmentLatents<T>> latents;
  std::vector<double> scores;

  DonorPool(const FusionModel<T>& model, std::vector<const SegmentFeatures*> segs) : segments(std::move(segs)) {
    if (segments.empty()) throw ArgumentError("recommend_modality: empty donor pool");
    for (const SegmentFeatures* s : segments) {
      latents.push_back(model.segment_latents(*s));
      scores.push_back(static_cast<double>(model.score_from_latents(latents.back())));
    }
  }
};

template <typename T>
FeedbackReport recommend_modality(const SegmentFeatures& target, const DonorPool<T>& pool,
                                  const FusionModel<T>& model) {
  return recommend_modality<T>(target, model.segment_latents(target), pool.segments, pool.latents, pool.scores,
                               model);
}

template <typename T>
FeedbackReport recommend_modality(const SegmentFeatures& target, std::span<const SegmentFeatures> donor_pool,
                                  const FusionModel<T>& model) {
  std::vector<const SegmentFeatures*> ptrs;
  for (const SegmentFeatures& s : donor_pool) ptrs.push_back(&s);
  return recommend_modality(target, DonorPool<T>(model, std::move(ptrs)), model);
}

inline nlohmann::json to_json(const FeedbackReport& r) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [m, o] : r.per_modality) {
    per[to_string(m)] = {{"donor_talk_id", o.donor_talk_id},
                         {"donor_segment_index", o.donor_segment_index},
                         {"new_score", o.new_score},
                         {"delta", o.delta}};
  }
  return {{"target", {{"talk_id", r.target_talk_id}, {"segment_index", r.target_segment_index}}},
          {"base_score", r.base_score},
          {"per_modality", per},
          {"recommended", to_string(r.recommended)}};
}

inline void write_feedback_csv(std::ostream& os, const std::vector<FeedbackReport>& reports) {
  os << "talk_id,segment_index,modality,delta\n";
  os.precision(17);
  for (const auto& r : reports) {
    for (const auto& [m, o] : r.per_modality) {
      os << r.target_talk_id << ',' << r.target_segment_index << ',' << to_string(m) << ',' << o.delta << '\n';
    }
  }
}

}  // namespace oratory
