#include <cmath>

#include <doctest.h>

#include "fixtures.hpp"
#include "wearmi/errors.hpp"
#include "wearmi/impute_param.hpp"

using namespace wearmi;

TEST_CASE("daily aggregation") {
  auto s = fixtures::awake_week_with_zeros("p", Timepoint::followup, DayOfWeek::mon,
                                           {{2 * kEpochsPerDay, 3 * kEpochsPerDay}});
  const std::vector<MissingInterval> iv{{1, hm(10), hm(12), MissingSource::nonwear},
                                        {3, 0, kEpochsPerDay, MissingSource::sleep_extra}};
  const auto days = aggregate_daily(s, iv);
  REQUIRE(days.size() == 7);
  CHECK(days[0].status == DayStatus::partial);
  CHECK(days[0].lambda == 2 * kEpochsPerHour);
  std::int64_t expected = 0;
  for (int e = 0; e < kEpochsPerDay; ++e) {
    if (e < hm(10) || e >= hm(12)) expected += s.day(1).steps[static_cast<std::size_t>(e)];
  }
  CHECK(days[0].y_obs == double(expected));
  CHECK(days[1].status == DayStatus::complete);
  CHECK(days[1].lambda == 0);
  CHECK(days[1].y_obs == double(s.day(2).total_steps()));
  CHECK(days[2].status == DayStatus::missing);
  CHECK(days[2].lambda == kEpochsPerDay);
}

TEST_CASE("a day with only silent observed epochs counts as missing") {
  auto s = fixtures::awake_week_with_zeros("p", Timepoint::followup, DayOfWeek::mon,
                                           {{kEpochsPerDay, kEpochsPerDay + hm(20)}});
  const std::vector<MissingInterval> iv{{2, hm(20), kEpochsPerDay, MissingSource::nonwear}};
  const auto days = aggregate_daily(s, iv);
  CHECK(days[1].status == DayStatus::missing);
  CHECK(days[1].lambda == kEpochsPerDay);
}

TEST_CASE("outcome bounds") {
  const BoundsConfig cfg;
  DayOutcome o;
  o.y_obs = 4000;
  SUBCASE("complete") {
    const auto b = outcome_bounds(o, BoundMode::generic, cfg);
    CHECK(b.is_point());
    CHECK(b.lower == doctest::Approx(std::log(4001.0)));
  }
  SUBCASE("partial") {
    o.status = DayStatus::partial;
    o.lambda = 720;
    const auto s = outcome_bounds(o, BoundMode::specific, cfg);
    CHECK(s.lower == doctest::Approx(std::log(4001.0)));
    CHECK(s.upper == doctest::Approx(std::log(4000.0 + 5.0 * 720 + 1.0)));
    const auto g = outcome_bounds(o, BoundMode::generic, cfg);
    CHECK(g.upper == 10.5);
  }
  SUBCASE("missing") {
    o.status = DayStatus::missing;
    o.y_obs = 0;
    o.lambda = kEpochsPerDay;
    for (BoundMode m : {BoundMode::specific, BoundMode::generic}) {
      const auto b = outcome_bounds(o, m, cfg);
      CHECK(b.lower == 0.0);
      CHECK(b.upper == 10.5);
    }
  }
  SUBCASE("generic upper never below the observed total") {
    o.status = DayStatus::partial;
    o.y_obs = 60000;
    o.lambda = 10;
    const auto b = outcome_bounds(o, BoundMode::generic, cfg);
    CHECK(b.upper == b.lower);
  }
}

TEST_CASE("chained imputation keeps observed days and respects bounds") {
  ParTable t;
  t.covariate_names = {"age"};
  const int n = 30;
  t.covariates.resize(n, 1);
  for (int d = 1; d <= 3; ++d) {
    t.column_names.push_back("followup_d" + std::to_string(d));
    t.column_timepoints.push_back(Timepoint::followup);
  }
  Engine rng(5);
  for (int i = 0; i < n; ++i) {
    t.participant_ids.push_back("p" + std::to_string(i));
    t.arms.push_back(i % 2 ? Arm::postal : Arm::control);
    t.covariates(i, 0) = 40 + i;
    const double level = 6000 + 3000 * uniform01(rng);
    std::vector<DayOutcome> row;
    for (int d = 1; d <= 3; ++d) {
      DayOutcome o;
      o.day_index = d;
      o.y_obs = std::round(level * (0.8 + 0.4 * uniform01(rng)));
      if ((i + d) % 5 == 0) {
        o.status = DayStatus::partial;
        o.lambda = 1000;
        o.y_obs *= 0.5;
      }
      row.push_back(o);
    }
    t.outcomes.push_back(row);
  }
  ParMiConfig cfg;
  cfg.m = 3;
  cfg.cycles = 3;
  cfg.seed = 17;
  const auto res = run_par_mi(t, cfg);
  REQUIRE(res.completed.size() == 3);
  bool moved = false;
  for (const auto& c : res.completed) {
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < 3; ++d) {
        const DayOutcome& o = t.outcomes[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
        if (o.status == DayStatus::complete) {
          CHECK(c(i, d) == o.y_obs);
        } else {
          CHECK(c(i, d) >= o.y_obs);
          CHECK(c(i, d) <= o.y_obs + 5.0 * o.lambda + 1e-6);
          moved |= c(i, d) > o.y_obs;
        }
      }
    }
  }
  CHECK(moved);
  const auto again = run_par_mi(t, cfg);
  for (int m = 0; m < 3; ++m) CHECK(again.completed[static_cast<std::size_t>(m)] == res.completed[static_cast<std::size_t>(m)]);
  cfg.threads = 4;
  const auto threaded = run_par_mi(t, cfg);
  for (int m = 0; m < 3; ++m) CHECK(threaded.completed[static_cast<std::size_t>(m)] == res.completed[static_cast<std::size_t>(m)]);
}
