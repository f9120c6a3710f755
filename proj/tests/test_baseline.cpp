#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "oratory/baseline.hpp"

using namespace oratory;
using Catch::Approx;

namespace {

// Frames identical: shoulders at x = +-0.5 (unit width), wrists placed by the caller.
SegmentFeatures static_pose(float wrist_x) {
  SegmentFeatures s;
  s.talk_id = "s";
  for (std::size_t f = 0; f < kFrames; ++f) {
    auto set = [&](std::size_t k, float x, float y) {
      s.pose[f * kPoseDim + 3 * k] = x;
      s.pose[f * kPoseDim + 3 * k + 1] = y;
    };
    for (std::size_t k = 0; k < kKeypoints; ++k) set(k, 0.1f * static_cast<float>(k), -0.2f * static_cast<float>(k));
    set(keypoint::left_shoulder, 0.5f, 1.0f);
    set(keypoint::right_shoulder, -0.5f, 1.0f);
    set(keypoint::left_wrist, wrist_x, 1.0f);
    set(keypoint::right_wrist, -wrist_x, 1.0f);
  }
  return s;
}

LabeledDataset one_year_corpus(SynthConfig cfg, std::vector<SegmentFeatures>& segments) {
  cfg.n_years = 1;
  auto c = synth_corpus(cfg);
  segments = std::move(c.segments);
  return label_by_year(c.talks);
}

}  // namespace

TEST_CASE("interpretable features") {
  SECTION("static pose has no energy; wrists at shoulders give ratio one") {
    const auto f = derive_baseline_features(static_pose(0.5f));
    CHECK(f.body_energy == 0.0);
    REQUIRE(f.posture_openness);
    CHECK(*f.posture_openness == Approx(1.0).epsilon(1e-12));
    CHECK(*derive_baseline_features(static_pose(1.5f)).posture_openness == Approx(3.0).epsilon(1e-6));
  }
  SECTION("audio fields follow the optional block") {
    auto s = static_pose(0.5f);
    auto f = derive_baseline_features(s);
    CHECK_FALSE(f.volume_mean);
    CHECK_FALSE(f.filled_pause_rate);
    s.baseline = {0.7f};
    f = derive_baseline_features(s);
    CHECK(*f.volume_mean == Approx(0.7));
    CHECK_FALSE(f.filled_pause_rate);
    s.baseline = {0.7f, 0.1f, 0.25f};
    CHECK(*derive_baseline_features(s).filled_pause_rate == 0.25);
  }
  SECTION("degenerate shoulders make posture absent") {
    SegmentFeatures s;
    s.talk_id = "zero";
    const auto f = derive_baseline_features(s);
    CHECK_FALSE(f.posture_openness);
    CHECK(f.body_energy == 0.0);
  }
  SECTION("translation and scale invariance") {
    SegmentFeatures s = synth_corpus(2, 1, 1.0, 9).segments[0];
    const auto f = derive_baseline_features(s);
    CHECK(f.body_energy > 0.0);
    SegmentFeatures moved = s, scaled = s;
    const float shift[3] = {3.0f, -2.0f, 0.5f};
    for (std::size_t i = 0; i < s.pose.size(); ++i) {
      moved.pose[i] += shift[i % 3];
      scaled.pose[i] *= 4.0f;
    }
    CHECK(derive_baseline_features(moved).body_energy == Approx(f.body_energy).epsilon(1e-5));
    CHECK(*derive_baseline_features(scaled).posture_openness == Approx(*f.posture_openness).epsilon(1e-6));
  }
}

TEST_CASE("standardization and column handling") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<std::array<double, 4>> rows = {{1, 10, nan, 0}, {3, 20, nan, 0}, {nan, 30, nan, 0}};
  const auto m = prepare_baseline(rows, BaselineInputs::video_audio);
  CHECK(m.columns == std::vector<std::size_t>{0, 1, 3});
  REQUIRE(m.warnings.size() == 1);
  CHECK(m.warnings[0].find("volume_mean") != std::string::npos);
  CHECK(m.mean[0] == 2);
  CHECK(m.scale[0] == 1);
  CHECK(m.mean[1] == 20);
  CHECK(m.scale[2] == 1);  // constant column
  const auto z = m.standardize({nan, 30, 5, 0});
  CHECK(z[0] == 0.0);  // imputed with the training mean
  CHECK(z[1] == Approx(std::sqrt(1.5)));
  CHECK(prepare_baseline(rows, BaselineInputs::video).columns == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(prepare_baseline(std::vector<std::array<double, 4>>{{1, 2, nan, nan}}, BaselineInputs::audio),
                  ArgumentError);
}

TEST_CASE("zero learning rate keeps the initial weights") {
  SynthConfig cfg;
  cfg.n_talks = 30;
  cfg.segments_per_talk = 2;
  std::vector<SegmentFeatures> segments;
  const auto data = one_year_corpus(cfg, segments);
  const auto ls = select_segments(data.talks, segments);
  std::vector<std::array<double, 4>> rows;
  for (const auto* s : ls.segments) rows.push_back(baseline_row(derive_baseline_features(*s)));
  BaselineConfig bc;
  bc.learning_rate = 0;
  bc.max_epochs = 4;
  const auto fit = fit_baseline(ls, rows, ls, rows, bc, 77);
  nn::LinearLayer<double> init(fit.model.columns.size(), 1);
  Rng rng(77, "init");
  nn::init_layer(init, rng);
  CHECK(fit.model.layer.weight == init.weight);
  CHECK(fit.model.layer.bias == init.bias);
}

TEST_CASE("baseline cross-validation on planted signals") {
  SECTION("posture signal is recovered") {
    SynthConfig cfg;
    cfg.n_talks = 120;
    cfg.segments_per_talk = 4;
    cfg.posture_signal = 0.5;
    std::vector<SegmentFeatures> segments;
    const auto data = one_year_corpus(cfg, segments);
    const auto cv = train_baseline(data, segments, {});
    REQUIRE(cv.fold_reports.size() == 5);
    CHECK(cv.averaged.size() == 3);
    CHECK(cv.averaged[0].roc_auc >= 0.9);
    CHECK(cv.averaged[0].n_talks == data.talks.size());
    CHECK(cv.warnings.empty());
  }
  SECTION("face signal is invisible to it") {
    SynthConfig cfg;
    cfg.n_talks = 120;
    cfg.segments_per_talk = 4;
    cfg.signal_strength = 5.0;
    cfg.weights = {0.0, 1.0, 0.0};
    std::vector<SegmentFeatures> segments;
    const auto data = one_year_corpus(cfg, segments);
    const auto cv = train_baseline(data, segments, {});
    CHECK(cv.averaged[0].roc_auc == Approx(0.5).margin(0.2));
  }
  SECTION("same folds as the main model") {
    SynthConfig cfg;
    cfg.n_talks = 60;
    cfg.segments_per_talk = 2;
    std::vector<SegmentFeatures> segments;
    const auto data = one_year_corpus(cfg, segments);
    BaselineConfig bc;
    bc.seed = 13;
    const auto cv = train_baseline(data, segments, bc);
    const auto split = make_folds(data, 5, 13);
    for (std::size_t f = 0; f < 5; ++f) {
      const auto expected = talk_ids(split.talks_in(data.talks, f));
      std::vector<std::string> got;
      for (const auto& [id, s] : cv.fold_reports[f][0].per_talk_scores) got.push_back(id);
      CHECK(std::set<std::string>(expected.begin(), expected.end()) == std::set<std::string>(got.begin(), got.end()));
    }
  }
}
