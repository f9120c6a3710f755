#pragma once

// On-disk dataset: a line-delimited JSON manifest of talks plus a binary
// segment file ("OSF1") holding the per-segment pose, face and voice features.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "oratory/binary_io.hpp"
#include "oratory/error.hpp"
#include "oratory/random.hpp"

namespace oratory {

inline constexpr std::size_t kFrames = 120;
inline constexpr std::size_t kKeypoints = 17;
inline constexpr std::size_t kPoseDim = kKeypoints * 3;
inline constexpr std::size_t kFaceDim = 512;
inline constexpr std::size_t kVoiceDim = 512;
inline constexpr std::size_t kMaxBaselineDim = 4;

/// Keypoint order of the pose extractor (COCO layout); each keypoint occupies
/// three consecutive columns (x, y, z) of a pose row.
namespace keypoint {
inline constexpr std::size_t nose = 0;
inline constexpr std::size_t left_eye = 1;
inline constexpr std::size_t right_eye = 2;
inline constexpr std::size_t left_ear = 3;
inline constexpr std::size_t right_ear = 4;
inline constexpr std::size_t left_shoulder = 5;
inline constexpr std::size_t right_shoulder = 6;
inline constexpr std::size_t left_elbow = 7;
inline constexpr std::size_t right_elbow = 8;
inline constexpr std::size_t left_wrist = 9;
inline constexpr std::size_t right_wrist = 10;
inline constexpr std::size_t left_hip = 11;
inline constexpr std::size_t right_hip = 12;
inline constexpr std::size_t left_knee = 13;
inline constexpr std::size_t right_knee = 14;
inline constexpr std::size_t left_ankle = 15;
inline constexpr std::size_t right_ankle = 16;
}  // namespace keypoint

struct TalkRecord {
  std::string talk_id;
  int year = 0;
  std::int64_t view_count = 0;
  std::size_t segment_count = 0;
  std::optional<int> label;

  friend bool operator==(const TalkRecord&, const TalkRecord&) = default;
};

/// Features of one 5-second segment. `pose` is frame-major, kFrames rows of
/// kPoseDim values.
struct SegmentFeatures {
  std::string talk_id;
  std::uint32_t segment_index = 0;
  std::vector<float> pose = std::vector<float>(kFrames * kPoseDim);
  std::vector<float> face = std::vector<float>(kFaceDim);
  std::vector<float> voice = std::vector<float>(kVoiceDim);
  std::vector<float> baseline;  // volume_mean, volume_var, filled_pause_rate, reserved

  float pose_at(std::size_t frame, std::size_t column) const { return pose[frame * kPoseDim + column]; }

  friend bool operator==(const SegmentFeatures&, const SegmentFeatures&) = default;
};

struct CorpusStats {
  std::size_t n_talks = 0;
  std::size_t n_segments = 0;
  double view_min = 0, view_max = 0, view_median = 0, view_mean = 0;
  std::map<int, std::size_t> per_year_counts;
};

// ---------------------------------------------------------------------------
// validation

inline void validate_segment(const SegmentFeatures& s, std::size_t record_index) {
  const std::string where = "segment record " + std::to_string(record_index);
  if (s.talk_id.empty()) throw FormatError(where + ": empty talk_id");
  if (s.pose.size() != kFrames * kPoseDim) throw ShapeError(where + ": pose is not 120x51");
  if (s.face.size() != kFaceDim) throw ShapeError(where + ": face vector is not 512-d");
  if (s.voice.size() != kVoiceDim) throw ShapeError(where + ": voice vector is not 512-d");
  if (s.baseline.size() > kMaxBaselineDim) throw ShapeError(where + ": baseline block longer than 4");
  auto finite = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  if (!finite(s.pose) || !finite(s.face) || !finite(s.voice) || !finite(s.baseline)) {
    throw FormatError(where + ": non-finite feature value");
  }
}

/// Checks segment uniqueness and that every talk's segment_count matches the
/// records present.
inline void validate_corpus(const std::vector<TalkRecord>& talks,
                            const std::vector<SegmentFeatures>& segments) {
  std::set<std::pair<std::string, std::uint32_t>> seen;
  std::unordered_map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!seen.emplace(segments[i].talk_id, segments[i].segment_index).second) {
      throw FormatError("segment record " + std::to_string(i) + ": duplicate (" +
                        segments[i].talk_id + ", " + std::to_string(segments[i].segment_index) + ")");
    }
    ++counts[segments[i].talk_id];
  }
  for (const TalkRecord& t : talks) {
    const auto it = counts.find(t.talk_id);
    const std::size_t have = it == counts.end() ? 0 : it->second;
    if (have != t.segment_count) {
      throw FormatError("talk " + t.talk_id + ": manifest declares " + std::to_string(t.segment_count) +
                        " segments, segment file has " + std::to_string(have));
    }
  }
}

// ---------------------------------------------------------------------------
// manifest

inline std::vector<TalkRecord> parse_manifest(std::istream& in) {
  std::vector<TalkRecord> records;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    TalkRecord r;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      r.talk_id = j.at("talk_id").get<std::string>();
      r.year = j.at("year").get<int>();
      r.view_count = j.at("view_count").get<std::int64_t>();
      r.segment_count = j.at("segment_count").get<std::size_t>();
      if (j.contains("label") && !j["label"].is_null()) {
        const int label = j["label"].get<int>();
        if (label != 0 && label != 1) throw FormatError(where + ": label must be 0 or 1");
        r.label = label;
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (r.talk_id.empty()) throw FormatError(where + ": empty talk_id");
    if (r.view_count < 0) throw FormatError(where + ": negative view_count");
    if (r.segment_count < 1) throw FormatError(where + ": segment_count must be at least 1");
    const auto [it, fresh] = first_line.emplace(r.talk_id, line_no);
    if (!fresh) {
      throw FormatError("duplicate talk_id '" + r.talk_id + "' on manifest lines " +
                        std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<TalkRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  return parse_manifest(in);
}

inline nlohmann::json to_json(const TalkRecord& r) {
  nlohmann::json j = {{"talk_id", r.talk_id},
                      {"year", r.year},
                      {"view_count", r.view_count},
                      {"segment_count", r.segment_count}};
  if (r.label) j["label"] = *r.label;
  return j;
}

inline void write_manifest(const std::vector<TalkRecord>& records, std::ostream& out) {
  for (const TalkRecord& r : records) out << to_json(r).dump() << '\n';
}

inline void write_manifest(const std::vector<TalkRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  write_manifest(records, out);
  if (!out) throw Error("I/O failure writing " + path.string());
}

// ---------------------------------------------------------------------------
// segment file

inline constexpr char kSegmentMagic[4] = {'O', 'S', 'F', '1'};
inline constexpr std::uint16_t kSegmentVersion = 1;

inline void write_segments(const std::vector<SegmentFeatures>& records, std::ostream& out) {
  io::LeWriter w(out);
  w.bytes(std::string_view(kSegmentMagic, 4));
  w.u16(kSegmentVersion);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SegmentFeatures& s = records[i];
    validate_segment(s, i);
    w.u16(static_cast<std::uint16_t>(s.talk_id.size()));
    w.bytes(s.talk_id);
    w.u32(s.segment_index);
    w.u32(kFrames);
    w.u32(kPoseDim);
    w.u32(kFaceDim);
    w.u32(kVoiceDim);
    w.u32(static_cast<std::uint32_t>(s.baseline.size()));
    w.f32s(std::span<const float>(s.pose));
    w.f32s(std::span<const float>(s.face));
    w.f32s(std::span<const float>(s.voice));
    w.f32s(std::span<const float>(s.baseline));
  }
}

inline void write_segments(const std::vector<SegmentFeatures>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write segment file " + path.string());
  write_segments(records, out);
  out.flush();
  if (!out) throw Error("I/O failure writing " + path.string());
}

inline std::vector<SegmentFeatures> read_segments(std::istream& in) {
  io::LeReader r(in, "segment file");
  if (r.bytes(4) != std::string_view(kSegmentMagic, 4)) throw FormatError("segment file: bad magic");
  const std::uint16_t version = r.u16();
  if (version != kSegmentVersion) {
    throw FormatError("segment file: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  std::vector<SegmentFeatures> records;
  records.reserve(std::min<std::uint32_t>(count, 1u << 16));
  std::set<std::pair<std::string, std::uint32_t>> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "segment record " + std::to_string(i);
    SegmentFeatures s;
    s.talk_id = r.bytes(r.u16());
    s.segment_index = r.u32();
    const std::uint32_t frames = r.u32(), pose_dim = r.u32(), face_dim = r.u32(), voice_dim = r.u32();
    const std::uint32_t baseline_dim = r.u32();
    if (frames != kFrames || pose_dim != kPoseDim || face_dim != kFaceDim || voice_dim != kVoiceDim) {
      throw ShapeError(where + ": dimension header (" + std::to_string(frames) + ", " +
                       std::to_string(pose_dim) + ", " + std::to_string(face_dim) + ", " +
                       std::to_string(voice_dim) + ") != (120, 51, 512, 512)");
    }
    if (baseline_dim > kMaxBaselineDim) throw ShapeError(where + ": baseline_dim > 4");
    s.baseline.resize(baseline_dim);
    r.f32s(std::span<float>(s.pose));
    r.f32s(std::span<float>(s.face));
    r.f32s(std::span<float>(s.voice));
    r.f32s(std::span<float>(s.baseline));
    validate_segment(s, i);
    if (!seen.emplace(s.talk_id, s.segment_index).second) {
      throw FormatError(where + ": duplicate (talk_id, segment_index)");
    }
    records.push_back(std::move(s));
  }
  return records;
}

inline std::vector<SegmentFeatures> read_segments(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open segment file " + path.string());
  return read_segments(in);
}

// ---------------------------------------------------------------------------
// statistics

inline CorpusStats corpus_stats(const std::vector<TalkRecord>& manifest) {
  if (manifest.empty()) throw ArgumentError("corpus_stats: empty manifest");
  CorpusStats st;
  st.n_talks = manifest.size();
  std::vector<std::int64_t> views;
  views.reserve(manifest.size());
  long double sum = 0;
  for (const TalkRecord& t : manifest) {
    views.push_back(t.view_count);
    sum += t.view_count;
    st.n_segments += t.segment_count;
    ++st.per_year_counts[t.year];
  }
  std::sort(views.begin(), views.end());
  st.view_min = static_cast<double>(views.front());
  st.view_max = static_cast<double>(views.back());
  st.view_median = static_cast<double>(views[(views.size() + 1) / 2 - 1]);
  st.view_mean = static_cast<double>(sum / static_cast<long double>(views.size()));
  return st;
}

// ---------------------------------------------------------------------------
// synthetic corpora

/// Class-signal strength per modality, in units of the noise standard deviation.
struct ModalityStrengths {
  double pose = 1.0;
  double face = 1.0;
  double voice = 1.0;
};

struct SynthConfig {
  std::size_t n_talks = 200;
  std::size_t segments_per_talk = 10;
  double signal_strength = 0.0;
  ModalityStrengths weights;      // multiplied by signal_strength
  double posture_signal = 0.0;    // class gap of the wrist/shoulder distance ratio
  std::uint64_t seed = 42;
  int first_year = 2006;
  int n_years = 12;
};

struct SynthCorpus {
  std::vector<TalkRecord> talks;
  std::vector<SegmentFeatures> segments;
  std::vector<int> planted;  // hidden class of each talk, aligned with `talks`
};

namespace detail {

// Neutral standing skeleton, shoulder width 6, wrists directly below shoulders.
inline constexpr float kSkeleton[kKeypoints][3] = {
    {0.0f, 9.0f, 0.5f},   {0.6f, 9.5f, 0.3f},   {-0.6f, 9.5f, 0.3f},  {1.2f, 9.2f, -0.2f},
    {-1.2f, 9.2f, -0.2f}, {3.0f, 6.0f, 0.0f},   {-3.0f, 6.0f, 0.0f},  {3.5f, 2.0f, 0.5f},
    {-3.5f, 2.0f, 0.5f},  {3.0f, -1.5f, 1.5f},  {-3.0f, -1.5f, 1.5f}, {2.0f, -3.0f, 0.0f},
    {-2.0f, -3.0f, 0.0f}, {2.0f, -8.0f, 0.3f},  {-2.0f, -8.0f, 0.3f}, {2.0f, -13.0f, 0.0f},
    {-2.0f, -13.0f, 0.0f}};

inline std::vector<double> unit_direction(std::size_t dim, Rng& rng) {
  std::vector<double> u(dim);
  double norm = 0;
  for (double& v : u) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : u) v /= norm;
  return u;
}

inline std::int64_t log_uniform_views(Rng& rng, double lo, double hi) {
  return static_cast<std::int64_t>(std::exp(rng.uniform(std::log(lo), std::log(hi))));
}

}  // namespace detail

/// Seeded synthetic corpus. Talks alternate bad/good; within every year the
/// bad talks' view counts all lie below the good talks', so percentile
/// labeling recovers the planted class of each talk it keeps. Features are
/// unit Gaussian noise plus, for each modality, a class mean shift of
/// +-strength/2 along a fixed random unit direction (per frame for pose).
inline SynthCorpus synth_corpus(const SynthConfig& cfg) {
  if (cfg.n_talks < 2) throw ArgumentError("synth_corpus: need at least 2 talks");
  if (cfg.segments_per_talk < 1) throw ArgumentError("synth_corpus: need at least 1 segment per talk");
  if (cfg.signal_strength < 0) throw ArgumentError("synth_corpus: signal_strength must be >= 0");
  if (cfg.n_years < 1) throw ArgumentError("synth_corpus: need at least one year");

  Rng rng(cfg.seed, "synth");
  const std::vector<double> pose_dir = detail::unit_direction(kPoseDim, rng);
  const std::vector<double> face_dir = detail::unit_direction(kFaceDim, rng);
  const std::vector<double> voice_dir = detail::unit_direction(kVoiceDim, rng);

  const double pose_shift = 0.5 * cfg.signal_strength * cfg.weights.pose;
  const double face_shift = 0.5 * cfg.signal_strength * cfg.weights.face;
  const double voice_shift = 0.5 * cfg.signal_strength * cfg.weights.voice;
  const double shoulder_width =
      detail::kSkeleton[keypoint::left_shoulder][0] - detail::kSkeleton[keypoint::right_shoulder][0];

  SynthCorpus out;
  const int digits = std::max<int>(4, static_cast<int>(std::to_string(cfg.n_talks - 1).size()));
  for (std::size_t i = 0; i < cfg.n_talks; ++i) {
    const int cls = static_cast<int>(i % 2);
    const double sign = cls == 1 ? 1.0 : -1.0;
    TalkRecord t;
    std::string num = std::to_string(i);
    t.talk_id = "talk" + std::string(static_cast<std::size_t>(digits) - num.size(), '0') + num;
    t.year = cfg.first_year + static_cast<int>((i / 2) % static_cast<std::size_t>(cfg.n_years));
    t.view_count = cls == 1 ? detail::log_uniform_views(rng, 2.0e6, 4.7e7)
                            : detail::log_uniform_views(rng, 1.5e5, 9.0e5);
    t.segment_count = cfg.segments_per_talk;

    // Wrists move outwards (good) or inwards (bad) so that the class means of
    // the wrist/shoulder distance ratio differ by posture_signal.
    const double wrist_shift = sign * 0.25 * cfg.posture_signal * shoulder_width;

    for (std::size_t s = 0; s < cfg.segments_per_talk; ++s) {
      SegmentFeatures seg;
      seg.talk_id = t.talk_id;
      seg.segment_index = static_cast<std::uint32_t>(s);
      for (std::size_t f = 0; f < kFrames; ++f) {
        for (std::size_t k = 0; k < kKeypoints; ++k) {
          for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t col = k * 3 + c;
            double v = detail::kSkeleton[k][c] + rng.normal() + sign * pose_shift * pose_dir[col];
            if (c == 0 && k == keypoint::left_wrist) v += wrist_shift;
            if (c == 0 && k == keypoint::right_wrist) v -= wrist_shift;
            seg.pose[f * kPoseDim + col] = static_cast<float>(v);
          }
        }
      }
      for (std::size_t d = 0; d < kFaceDim; ++d) {
        seg.face[d] = static_cast<float>(rng.normal() + sign * face_shift * face_dir[d]);
      }
      for (std::size_t d = 0; d < kVoiceDim; ++d) {
        seg.voice[d] = static_cast<float>(rng.normal() + sign * voice_shift * voice_dir[d]);
      }
      // Label-independent audio descriptors for the interpretable baseline.
      seg.baseline = {static_cast<float>(rng.normal()), static_cast<float>(std::abs(rng.normal())),
                      static_cast<float>(rng.uniform())};
      out.segments.push_back(std::move(seg));
    }
    out.talks.push_back(std::move(t));
    out.planted.push_back(cls);
  }
  return out;
}

inline SynthCorpus synth_corpus(std::size_t n_talks, std::size_t segments_per_talk,
                                double signal_strength, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_talks = n_talks;
  cfg.segments_per_talk = segments_per_talk;
  cfg.signal_strength = signal_strength;
  cfg.seed = seed;
  return synth_corpus(cfg);
}

}  // namespace oratory
