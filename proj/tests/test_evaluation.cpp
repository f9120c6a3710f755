#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "oracles.hpp"
#include "oratory/evaluation.hpp"
#include "oratory/random.hpp"

using namespace oratory;
using Catch::Approx;

TEST_CASE("talk score aggregation") {
  const std::vector<double> s = {0.2, 0.9, 0.4};
  CHECK(aggregate_talk_score(s, Aggregation::max) == 0.9);
  CHECK(aggregate_talk_score(s, Aggregation::mean) == Approx(0.5).epsilon(1e-15));
  CHECK(aggregate_talk_score(s, Aggregation::median) == 0.4);
  CHECK(aggregate_talk_score(std::vector<double>{0.1, 0.7, 0.3, 0.5}, Aggregation::median) == 0.3);
  for (Aggregation a : kAllAggregations) CHECK(aggregate_talk_score(std::vector<double>{0.37}, a) == 0.37);
  CHECK_THROWS_AS(aggregate_talk_score(std::vector<double>{}, Aggregation::max), ArgumentError);
  CHECK(parse_aggregation("median") == Aggregation::median);
  CHECK_THROWS_AS(parse_aggregation("mode"), ArgumentError);

  SECTION("max is monotone and bounds mean") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> v(1 + rng.below(12));
      for (double& x : v) x = rng.uniform();
      const double mx = aggregate_talk_score(v, Aggregation::max);
      const double mean = aggregate_talk_score(v, Aggregation::mean);
      CHECK(mx >= mean);
      CHECK(mean >= *std::min_element(v.begin(), v.end()));
      v[rng.below(v.size())] += rng.uniform();
      CHECK(aggregate_talk_score(v, Aggregation::max) >= mx);
    }
  }
}

TEST_CASE("roc auc") {
  CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
  CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.3}, std::vector<int>{1, 0, 1}) == 0.5);
  CHECK(roc_auc(std::vector<double>{0.4, 0.4, 0.4, 0.4}, std::vector<int>{0, 1, 1, 0}) == 0.5);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ArgumentError);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1}, std::vector<int>{1, 0}), ArgumentError);

  SECTION("rank sum equals the pairwise oracle, complement and monotone invariance") {
    Rng rng(17);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t n = 2 + rng.below(400);
      std::vector<double> s(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        // Coarse grid so ties are common.
        s[i] = static_cast<double>(rng.below(trial % 2 ? 10 : 1000)) / 10.0;
        y[i] = static_cast<int>(rng.below(2));
      }
      y[0] = 0;
      y[1] = 1;
      const double auc = roc_auc(s, y);
      CHECK(std::abs(auc - oracle::pairwise_auc(s, y)) <= 1e-12);
      std::vector<int> flipped(n);
      for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - y[i];
      CHECK(auc + roc_auc(s, flipped) == Approx(1.0).epsilon(1e-12));
      std::vector<double> t(n);
      for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7;
      CHECK(roc_auc(t, y) == auc);
    }
  }
}

TEST_CASE("f1 score") {
  CHECK(f1_score(std::vector<double>{0.9, 0.1, 0.8}, std::vector<int>{1, 0, 1}) == 1.0);
  CHECK(f1_score(std::vector<double>{0.9, 0.6, 0.2}, std::vector<int>{1, 0, 0}) == Approx(2.0 / 3.0));
  CHECK(f1_score(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 0}) == 0.0);
  // Exactly 0.5 is not a positive prediction.
  CHECK(f1_score(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) == 0.0);
  CHECK_THROWS_AS(f1_score(std::vector<double>{}, std::vector<int>{}), ArgumentError);

  SECTION("threshold zero gives recall one") {
    const std::vector<double> s = {0.1, 0.3, 0.2, 0.05};
    const std::vector<int> y = {1, 0, 1, 0};
    // precision 1/2, recall 1.
    CHECK(f1_score(s, y, 0.0) == Approx(2.0 / 3.0));
  }
  SECTION("confusion-matrix oracle") {
    Rng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 1 + rng.below(200);
      std::vector<double> s(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = static_cast<double>(rng.below(21)) / 20.0;
        y[i] = static_cast<int>(rng.below(2));
      }
      CHECK(f1_score(s, y) == oracle::f1_confusion(s, y, 0.5));
    }
  }
}

namespace {

struct Fixture {
  std::vector<TalkRecord> talks;
  std::vector<SegmentFeatures> segments;
};

Fixture small_corpus() {
  Fixture f;
  for (int t = 0; t < 6; ++t) {
    TalkRecord r{"t" + std::to_string(t), 2010, 100, static_cast<std::size_t>(1 + t % 3), t % 2};
    for (std::size_t s = 0; s < r.segment_count; ++s) {
      SegmentFeatures seg;
      seg.talk_id = r.talk_id;
      seg.segment_index = static_cast<std::uint32_t>(s);
      f.segments.push_back(std::move(seg));
    }
    f.talks.push_back(r);
  }
  return f;
}

}  // namespace

TEST_CASE("talk-level reports") {
  const Fixture f = small_corpus();
  const auto segs = segments_of(f.talks, f.segments);
  REQUIRE(segs.size() == f.segments.size());
  std::vector<double> scores;
  for (std::size_t i = 0; i < segs.size(); ++i) scores.push_back(0.1 * static_cast<double>(i % 7) + 0.05);

  const auto reports = talk_reports(f.talks, segs, scores, kAllAggregations);
  REQUIRE(reports.size() == 3);
  for (const auto& r : reports) {
    CHECK(r.n_talks == 6);
    CHECK(r.per_talk_scores.size() == 6);
    CHECK(r.roc_auc >= 0.0);
    CHECK(r.roc_auc <= 1.0);
  }
  for (const auto& t : f.talks) {
    CHECK(reports[0].per_talk_scores.at(t.talk_id) >= reports[1].per_talk_scores.at(t.talk_id));
  }

  SECTION("talk without segments is an error") {
    auto talks = f.talks;
    talks.push_back({"ghost", 2010, 1, 1, 1});
    CHECK_THROWS_AS(talk_reports(talks, segs, scores, kAllAggregations), ArgumentError);
  }
  SECTION("constant scores give chance under every strategy") {
    const std::vector<double> half(segs.size(), 0.5);
    for (const auto& r : talk_reports(f.talks, segs, half, kAllAggregations)) {
      CHECK(r.roc_auc == 0.5);
      CHECK(r.f1 == 0.0);
    }
  }
  SECTION("zero-head model through evaluate()") {
    auto model = FusionModel<float>::initialize(Architecture::with_modalities(false, true, true), 1);
    model.head().weight.fill(0.0f);
    model.head().bias.fill(0.0f);
    const auto a = evaluate(model, f.talks, f.segments);
    const auto b = evaluate(model, f.talks, f.segments);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].roc_auc == 0.5);
      CHECK(a[i].roc_auc == b[i].roc_auc);
      CHECK(a[i].per_talk_scores == b[i].per_talk_scores);
    }
  }
}

TEST_CASE("averaging and output formats") {
  EvaluationReport a{Aggregation::max, 0.8, 0.6, 10, {{"x", 0.9}}};
  EvaluationReport b{Aggregation::max, 0.6, 0.4, 12, {{"y", 0.1}}};
  const auto avg = average_reports({{a}, {b}});
  REQUIRE(avg.size() == 1);
  CHECK(avg[0].roc_auc == Approx(0.7));
  CHECK(avg[0].f1 == Approx(0.5));
  CHECK(avg[0].n_talks == 22);
  CHECK(avg[0].per_talk_scores.size() == 2);

  const auto j = to_json(a);
  CHECK(j["strategy"] == "max");
  CHECK(j["roc_auc"] == 0.8);
  CHECK_FALSE(j.contains("per_talk_scores"));
  CHECK(to_json(a, true)["per_talk_scores"]["x"] == 0.9);

  std::ostringstream csv;
  write_report_csv(csv, {a, b});
  CHECK(csv.str().rfind("strategy,roc_auc,f1,n_talks\nmax,0.8", 0) == 0);
  std::ostringstream table;
  write_report_csv(table, {a}, "baseline", "video");
  CHECK(table.str().rfind("model,inputs,strategy,roc_auc,f1,n_talks\nbaseline,video,max,", 0) == 0);
}
