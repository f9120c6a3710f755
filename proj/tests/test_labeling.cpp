#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "oracles.hpp"
#include "oratory/labeling.hpp"
#include "oratory/random.hpp"

using namespace oratory;

namespace {

std::vector<TalkRecord> one_year(const std::vector<std::int64_t>& views, int year = 2010) {
  std::vector<TalkRecord> out;
  for (std::size_t i = 0; i < views.size(); ++i) {
    out.push_back({"t" + std::to_string(i) + "_" + std::to_string(year), year, views[i], 1, std::nullopt});
  }
  return out;
}

std::set<std::int64_t> views_with(const LabeledDataset& d, int label) {
  std::set<std::int64_t> out;
  for (const auto& t : d.talks)
    if (t.label == label) out.insert(t.view_count);
  return out;
}

}  // namespace

TEST_CASE("nearest-rank percentile") {
  const std::vector<double> v = {60, 10, 40, 30, 50, 20};
  CHECK(percentile_nearest_rank(v, 33) == 20);
  CHECK(percentile_nearest_rank(v, 66) == 40);
  CHECK(percentile_nearest_rank(std::vector<double>{7}, 1) == 7);
  CHECK(percentile_nearest_rank(std::vector<double>{7}, 99.5) == 7);
  CHECK_THROWS_AS(percentile_nearest_rank(std::vector<double>{}, 50), ArgumentError);
  CHECK_THROWS_AS(percentile_nearest_rank(v, 0), ArgumentError);
  CHECK_THROWS_AS(percentile_nearest_rank(v, 100), ArgumentError);

  SECTION("matches sort-and-index oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t n = 1 + rng.below(300);
      std::vector<std::int64_t> values(n);
      for (auto& x : values) x = static_cast<std::int64_t>(rng.below(1000));
      const int p = 1 + static_cast<int>(rng.below(99));
      REQUIRE(percentile_nearest_rank(values, p) == oracle::nearest_rank(values, p));
    }
  }
}

TEST_CASE("per-year labeling") {
  SECTION("six views") {
    const auto d = label_by_year(one_year({10, 20, 30, 40, 50, 60}));
    CHECK(views_with(d, 0) == std::set<std::int64_t>{10});
    CHECK(views_with(d, 1) == std::set<std::int64_t>{50, 60});
    CHECK(d.dropped.size() == 3);
  }
  SECTION("all equal views are dropped") {
    const auto d = label_by_year(one_year({5, 5, 5, 5}));
    CHECK(d.talks.empty());
    CHECK(d.dropped.size() == 4);
  }
  SECTION("single talk in a year is dropped") {
    const auto d = label_by_year(one_year({123}));
    CHECK(d.talks.empty());
    CHECK(d.dropped.size() == 1);
  }
  SECTION("years are independent of input order") {
    auto m = one_year({10, 20, 30, 40, 50, 60}, 2010);
    const auto m2 = one_year({1000, 1, 500, 2, 999, 3}, 2011);
    m.insert(m.end(), m2.begin(), m2.end());
    auto label_map = [](const LabeledDataset& d) {
      std::map<std::string, int> out;
      for (const auto& t : d.talks) out[t.talk_id] = *t.label;
      return out;
    };
    const auto ref = label_map(label_by_year(m));
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      rng.shuffle(std::span<TalkRecord>(m));
      CHECK(label_map(label_by_year(m)) == ref);
    }
  }
  SECTION("labeled_from_manifest keeps existing labels") {
    auto m = one_year({1, 2, 3});
    m[1].label = 1;
    const auto d = labeled_from_manifest(m);
    REQUIRE(d.talks.size() == 1);
    CHECK(d.talks[0].talk_id == m[1].talk_id);
    CHECK(d.dropped.size() == 2);
  }
}

TEST_CASE("labeling invariants on random manifests") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TalkRecord> m;
    const std::size_t n = 1 + rng.below(80);
    for (std::size_t i = 0; i < n; ++i) {
      m.push_back({"t" + std::to_string(i), 2000 + static_cast<int>(rng.below(4)),
                   static_cast<std::int64_t>(rng.below(50)), 1, std::nullopt});
    }
    const auto d = label_by_year(m);
    REQUIRE(d.talks.size() + d.dropped.size() == n);

    std::map<int, std::size_t> per_year;
    for (const auto& t : m) ++per_year[t.year];
    for (const auto& [year, count] : per_year) {
      std::int64_t max_bad = -1, min_good = std::numeric_limits<std::int64_t>::max();
      std::size_t bad = 0, good = 0;
      for (const auto& t : d.talks) {
        if (t.year != year) continue;
        if (*t.label == 0) {
          ++bad;
          max_bad = std::max(max_bad, t.view_count);
        } else {
          ++good;
          min_good = std::min(min_good, t.view_count);
        }
      }
      CHECK(max_bad < min_good);
      const double nd = static_cast<double>(count);
      CHECK(bad <= static_cast<std::size_t>(std::ceil(0.33 * nd)));
      CHECK(good <= count - static_cast<std::size_t>(std::ceil(66.0 * nd / 100.0)));
    }

    // A constant shift within a year leaves labels unchanged.
    auto shifted = m;
    for (auto& t : shifted) t.view_count += 1000 * (t.year - 1999);
    const auto ds = label_by_year(shifted);
    REQUIRE(ds.talks.size() == d.talks.size());
    for (std::size_t i = 0; i < d.talks.size(); ++i) {
      CHECK(ds.talks[i].talk_id == d.talks[i].talk_id);
      CHECK(ds.talks[i].label == d.talks[i].label);
    }
  }
}
