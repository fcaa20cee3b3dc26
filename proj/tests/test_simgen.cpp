#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <doctest.h>

#include "fixtures.hpp"
#include "wearmi/classify.hpp"
#include "wearmi/errors.hpp"
#include "wearmi/io.hpp"
#include "wearmi/simgen.hpp"
#include "wearmi/stats.hpp"

using namespace wearmi;

TEST_CASE("bootstrap without replacement") {
  Engine rng(8);
  const auto idx = bootstrap_without_replacement(150, 120, rng);
  CHECK(idx.size() == 120);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 120);
  CHECK(*std::max_element(idx.begin(), idx.end()) < 150);
  CHECK(bootstrap_without_replacement(5, 5, rng).size() == 5);
  CHECK_THROWS_AS(bootstrap_without_replacement(10, 11, rng), InsufficientPool);
}

TEST_CASE("a nonwear entry zeroes exactly its span") {
  const auto s = fixtures::awake_week_with_zeros("p", Timepoint::followup, DayOfWeek::tue, {});
  MissingnessPattern pat;
  pat.source_id = "x";
  pat.entries.push_back({2, hm(10), hm(12), MissingSource::nonwear});
  const auto out = apply_pattern(s, pat, classify_series(s, ClassifierConfig{}));
  int zeroed = 0;
  for (std::int64_t t = 0; t < kEpochsPerWeek; ++t) {
    if (out.vm_at(t) != s.vm_at(t)) {
      ++zeroed;
      CHECK(out.vm_at(t) == 0.0f);
      CHECK(out.steps_at(t) == 0);
    }
  }
  CHECK(zeroed == 2 * kEpochsPerHour);
  CHECK(out.day(3).vm[static_cast<std::size_t>(hm(10))] == 0.0f);
  CHECK(out.day(3).vm[static_cast<std::size_t>(hm(12))] != 0.0f);
}

TEST_CASE("extracted patterns reproduce their periods") {
  std::vector<ClassifiedPeriod> periods{{100, 800, 700 * kMinutesPerEpoch, PeriodClass::inactive, false},
                                        {kEpochsPerDay + hm(9), kEpochsPerDay + hm(13), 240, PeriodClass::nonwear, false},
                                        {hm(20), kEpochsPerDay + hm(12), 960, PeriodClass::sleep_extra, false}};
  const auto p = extract_pattern("src", periods);
  REQUIRE(p.entries.size() == 2);
  for (const auto& e : p.entries) {
    if (e.kind == MissingSource::nonwear) {
      CHECK(e.abs_start() == kEpochsPerDay + hm(9));
      CHECK(e.abs_end() == kEpochsPerDay + hm(13));
    } else {
      CHECK(e.abs_start() == hm(20));
      CHECK(e.abs_end() == kEpochsPerDay + hm(12));
    }
  }
  periods.erase(periods.begin() + 1, periods.end());
  CHECK_THROWS_AS(extract_pattern("src", periods), NoMissingness);
}

TEST_CASE("pattern library text round trip") {
  std::vector<MissingnessPattern> lib(2);
  lib[0].source_id = "a";
  lib[0].entries = {{0, 100, 2000, MissingSource::nonwear}, {3, hm(21), kEpochsPerDay + hm(13), MissingSource::sleep_extra}};
  lib[1].source_id = "b";
  lib[1].entries = {{6, 0, kEpochsPerDay, MissingSource::sleep_extra}};
  std::stringstream ss;
  write_pattern_library(ss, lib);
  const auto back = read_pattern_library(ss, "mem");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].source_id == lib[i].source_id);
    CHECK(back[i].entries == lib[i].entries);
  }
}

TEST_CASE("generated data follows the profile") {
  ActivityProfile prof;
  const std::vector<Timepoint> tps{Timepoint::baseline, Timepoint::followup};
  const auto g = generate_complete_dataset(prof, 80, tps, 2024);
  REQUIRE(g.dataset.participants.size() == 240);
  REQUIRE(g.dataset.series.size() == 480);
  std::array<std::vector<double>, 3> base, fu;
  std::vector<double> all_fu, all_base;
  std::vector<Arm> arms;
  for (const auto& p : g.dataset.participants) {
    CHECK(p.age >= prof.age_min);
    CHECK(p.age <= prof.age_max);
    CHECK(p.bmi >= prof.bmi_min);
    CHECK(p.bmi <= prof.bmi_max);
    const auto k = static_cast<std::size_t>(p.arm);
    const double b = mean_daily_steps(*g.dataset.series[static_cast<std::size_t>(g.dataset.find_series(p.id, Timepoint::baseline))]);
    const double f = mean_daily_steps(*g.dataset.series[static_cast<std::size_t>(g.dataset.find_series(p.id, Timepoint::followup))]);
    base[k].push_back(b);
    fu[k].push_back(f);
    all_base.push_back(b);
    all_fu.push_back(f);
    arms.push_back(p.arm);
  }
  for (std::size_t k = 0; k < 3; ++k) {
    double m = 0;
    for (double v : fu[k]) m += v / static_cast<double>(fu[k].size());
    CHECK(g.truth.arm_mean_followup[k] == doctest::Approx(m));
  }
  // Control-arm correlation near the target: SE of r is about 0.05 at n=80.
  CHECK(std::abs(pearson_correlation(base[0], fu[0]) - prof.baseline_followup_corr) < 0.2);
  CHECK(g.truth.regression == followup_regression(all_fu, all_base, arms));
  const auto again = generate_complete_dataset(prof, 80, tps, 2024);
  CHECK(*again.dataset.series[17] == *g.dataset.series[17]);
}

TEST_CASE("profile validation") {
  ActivityProfile p;
  p.age_min = 80;
  CHECK_THROWS_AS(p.validate(), ProfileError);
  ActivityProfile q;
  q.baseline_followup_corr = 0.999;
  CHECK_THROWS_AS(q.latent_correlation(), ProfileError);
}
