#include <doctest.h>

#include "fixtures.hpp"
#include "wearmi/core.hpp"
#include "wearmi/errors.hpp"

using namespace wearmi;

TEST_CASE("clock arithmetic") {
  CHECK(epoch_to_clock(0) == ClockTime{0, 0, 0});
  CHECK(epoch_to_clock(hm(23, 30) + 3) == ClockTime{23, 30, 15});
  CHECK(clock_to_epoch({7, 15, 5 * 11}) == hm(7, 15) + 11);
  CHECK(format_clock(epoch_to_clock(kEpochsPerDay - 1)) == "23:59:55");
  CHECK(parse_clock("08:00:00") == ClockTime{8, 0, 0});
  CHECK_FALSE(parse_clock("25:00:00"));
  CHECK_THROWS_AS(epoch_to_clock(kEpochsPerDay), InvalidArgument);
  for (int e = 0; e < kEpochsPerDay; e += 997) CHECK(clock_to_epoch(epoch_to_clock(e)) == e);
}

TEST_CASE("day of week arithmetic") {
  CHECK(shift_day(DayOfWeek::fri, 1) == DayOfWeek::sat);
  CHECK(shift_day(DayOfWeek::mon, -1) == DayOfWeek::sun);
  CHECK(shift_day(DayOfWeek::sun, 8) == DayOfWeek::mon);
  CHECK(is_weekend(DayOfWeek::sat));
  CHECK_FALSE(is_weekend(DayOfWeek::fri));
}

TEST_CASE("enum text round trips") {
  for (Arm a : kArms) CHECK(parse_arm(to_string(a)) == a);
  CHECK(parse_timepoint("followup") == Timepoint::followup);
  CHECK(parse_mask("imputed") == EpochMask::imputed);
  CHECK_FALSE(parse_sex("x"));
}

TEST_CASE("series invariants") {
  std::vector<DayRecord> days;
  for (int d = 1; d <= kDaysPerWeek; ++d) days.push_back(DayRecord::zeros(d, shift_day(DayOfWeek::wed, d - 1)));
  SUBCASE("well formed") {
    const EpochSeries s("p", Timepoint::baseline, days);
    CHECK(s.day_of_week(0) == DayOfWeek::tue);
    CHECK(s.day_of_week(8) == DayOfWeek::wed);
  }
  SUBCASE("six days") {
    days.pop_back();
    CHECK_THROWS_AS(EpochSeries("p", Timepoint::baseline, days), InvalidArgument);
  }
  SUBCASE("day of week out of sequence") {
    days[3].day_of_week = DayOfWeek::mon;
    CHECK_THROWS_AS(EpochSeries("p", Timepoint::baseline, days), InvalidArgument);
  }
  SUBCASE("negative vm") {
    days[0].vm[10] = -1.0f;
    CHECK_THROWS_AS(EpochSeries("p", Timepoint::baseline, days), InvalidArgument);
  }
  SUBCASE("short day") {
    days[2].steps.pop_back();
    CHECK_THROWS_AS(EpochSeries("p", Timepoint::baseline, days), InvalidArgument);
  }
}

TEST_CASE("wear time and daily totals") {
  EpochSeries s = fixtures::awake_week_with_zeros("p", Timepoint::followup, DayOfWeek::mon, {{hm(10), hm(12)}});
  const ClassifiedPeriod p{hm(10), hm(12), 120.0, PeriodClass::nonwear, false};
  CHECK(weartime_minutes(s.day(1), std::span(&p, 1)) == doctest::Approx(1320.0));
  CHECK(weartime_minutes(s.day(2), std::span(&p, 1)) == doctest::Approx(1440.0));

  // A period crossing midnight counts on both days.
  const ClassifiedPeriod night{kEpochsPerDay - hm(1), kEpochsPerDay + hm(7), 480.0, PeriodClass::sleep, false};
  CHECK(weartime_minutes(s.day(1), std::span(&night, 1)) == doctest::Approx(1380.0));
  CHECK(weartime_minutes(s.day(2), std::span(&night, 1)) == doctest::Approx(1020.0));

  double total = 0.0;
  for (const auto& d : s.days()) total += static_cast<double>(d.total_steps());
  CHECK(mean_daily_steps(s) == doctest::Approx(total / 7.0));

  s.mark_missing(1, hm(10), hm(12));
  CHECK(s.day(1).count_mask(EpochMask::missing) == hm(2));
  CHECK(s.day(1).observed_steps() == s.day(1).total_steps());
}

TEST_CASE("timeline positions") {
  CHECK(start_position(0).day_index == 1);
  CHECK(start_position(kEpochsPerDay).day_index == 2);
  const auto e = end_position(kEpochsPerDay);
  CHECK(e.day_index == 1);
  CHECK(e.epoch == kEpochsPerDay);
}
