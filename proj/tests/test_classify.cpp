#include <algorithm>

#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "wearmi/classify.hpp"
#include "wearmi/errors.hpp"
#include "wearmi/simgen.hpp"

using namespace wearmi;

namespace {

std::vector<ZeroRun> to_runs(const std::vector<oracle::Span>& spans) {
  std::vector<ZeroRun> out;
  for (const auto& s : spans) out.push_back({s.start, s.end});
  return out;
}

// Zero run of `len` epochs inside awake data, optionally with a spike just
// outside its start.
PeriodClass class_of(std::int64_t len, bool spike) {
  std::vector<float> vm(static_cast<std::size_t>(len + 200), 50.0f);
  std::fill(vm.begin() + 100, vm.begin() + 100 + len, 0.0f);
  if (spike) vm[95] = 900.0f;
  const ClassifierConfig cfg;
  const auto runs = detect_zero_runs(vm, cfg);
  REQUIRE(runs.size() == 1);
  const auto p = classify_period(runs[0], vm, cfg);
  CHECK(p.boundary_spike == spike);
  return p.cls;
}

}  // namespace

TEST_CASE("zero-run detection agrees with a brute-force scan") {
  Engine rng = make_stream(123, {});
  for (double min_run : {30.0, 60.0, 90.0}) {
    for (double tol : {1.0, 2.0, 5.0}) {
      ClassifierConfig cfg;
      cfg.min_zero_run_min = min_run;
      cfg.spike_tolerance_min = tol;
      for (int i = 0; i < 40; ++i) {
        const auto vm = fixtures::random_zero_sequence(rng, 3 * kEpochsPerDay);
        const auto expected = oracle::zero_runs(vm, cfg.min_run_epochs(), cfg.tolerance_epochs());
        REQUIRE(detect_zero_runs(vm, cfg) == to_runs(expected));
      }
    }
  }
}

TEST_CASE("interruptions longer than the tolerance split a run") {
  std::vector<float> vm(3000, 0.0f);
  const ClassifierConfig cfg;
  std::fill(vm.begin() + 800, vm.begin() + 824, 5.0f);
  CHECK(detect_zero_runs(vm, cfg).size() == 1);
  vm[824] = 5.0f;
  const auto split = detect_zero_runs(vm, cfg);
  REQUIRE(split.size() == 2);
  CHECK(split[0] == ZeroRun{0, 800});
  CHECK(split[1] == ZeroRun{825, 3000});
}

TEST_CASE("duration bins at every boundary") {
  for (double h : {1.0, 3.0, 5.0, 15.0}) {
    const auto at = static_cast<std::int64_t>(h * kEpochsPerHour);
    for (std::int64_t len : {at - 1, at, at + 1}) {
      if (len < kEpochsPerHour) continue;
      for (bool spike : {false, true}) {
        CAPTURE(len);
        CAPTURE(spike);
        CHECK(class_of(len, spike) == oracle::period_class(len, spike));
      }
    }
  }
}

TEST_CASE("spikes beyond the window do not count") {
  std::vector<float> vm(2000, 50.0f);
  std::fill(vm.begin() + 100, vm.begin() + 1000, 0.0f);
  vm[100 - 25] = 900.0f;
  const ClassifierConfig cfg;
  const auto p = classify_period(detect_zero_runs(vm, cfg).at(0), vm, cfg);
  CHECK_FALSE(p.boundary_spike);
  CHECK(p.cls == PeriodClass::inactive);
}

TEST_CASE("short runs cannot be classified") {
  std::vector<float> vm(1000, 0.0f);
  CHECK_THROWS_AS(classify_period(ZeroRun{0, 100}, vm, ClassifierConfig{}), InvalidArgument);
}

TEST_CASE("invalid thresholds are rejected") {
  ClassifierConfig cfg;
  cfg.sleep_range_h = {6.0, 15.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

namespace {

// Monday start; weekday nights 23:00-07:00, weekend nights 00:00-08:00.
std::vector<fixtures::SpanSpec> nights() {
  std::vector<fixtures::SpanSpec> z;
  for (int d = 1; d <= 7; ++d) {
    const std::int64_t day0 = std::int64_t{d - 1} * kEpochsPerDay;
    const bool weekend = d >= 6;
    const std::int64_t bed = weekend ? day0 - kEpochsPerDay + hm(24) : day0 - kEpochsPerDay + hm(23);
    const std::int64_t wake = day0 + (weekend ? hm(8) : hm(7));
    z.push_back({std::max<std::int64_t>(0, bed), wake});
  }
  return z;
}

SeriesClassification classify_one(const EpochSeries& s) {
  Dataset data;
  data.participants.push_back({s.participant_id(), Arm::control, Sex::female, 50, 27});
  data.series.push_back(std::make_shared<const EpochSeries>(s));
  return classify_dataset(data, ClassifierConfig{}).at(0);
}

}  // namespace

TEST_CASE("sleep-extra minus the sleep window") {
  auto zeros = nights();
  // Night ending on Wednesday (day 3) stretched to 20:00-11:00.
  zeros.push_back({kEpochsPerDay + hm(20), 2 * kEpochsPerDay + hm(11)});
  const auto c = classify_one(fixtures::awake_week_with_zeros("a", Timepoint::followup, DayOfWeek::mon, zeros));
  REQUIRE(c.windows.weekday);
  CHECK(c.windows.weekday->bed_epoch == hm(23));
  CHECK(c.windows.weekday->wake_epoch == hm(7));
  REQUIRE(c.windows.weekend);
  CHECK(c.windows.weekend->bed_epoch == 0);
  CHECK(c.windows.weekend->wake_epoch == hm(8));
  const std::vector<MissingInterval> expected{{2, hm(20), hm(23), MissingSource::sleep_extra},
                                              {3, hm(7), hm(11), MissingSource::sleep_extra}};
  CHECK(c.intervals == expected);
}

TEST_CASE("weekend window falls back to weekday plus one hour") {
  auto zeros = nights();
  zeros.push_back({4 * kEpochsPerDay + hm(23), 5 * kEpochsPerDay + hm(15)});  // Fri night into Sat
  zeros.push_back({5 * kEpochsPerDay + hm(23), 6 * kEpochsPerDay + hm(15)});  // Sat night into Sun
  const auto c = classify_one(fixtures::awake_week_with_zeros("b", Timepoint::followup, DayOfWeek::mon, zeros));
  REQUIRE(c.windows.weekday);
  REQUIRE(c.windows.weekend);
  CHECK(c.windows.weekend->scope == SleepScope::weekend);
  CHECK(c.windows.weekend->bed_epoch == (c.windows.weekday->bed_epoch + hm(1)) % kEpochsPerDay);
  CHECK(c.windows.weekend->wake_epoch == c.windows.weekday->wake_epoch + hm(1));
  CHECK(c.windows.weekend->bed_epoch == 0);
  CHECK(c.windows.weekend->wake_epoch == hm(8));
  // The weekend window starts at midnight, so the hour before it is missing too.
  const std::vector<MissingInterval> expected{{5, hm(23), kEpochsPerDay, MissingSource::sleep_extra},
                                              {6, hm(8), hm(15), MissingSource::sleep_extra},
                                              {6, hm(23), kEpochsPerDay, MissingSource::sleep_extra},
                                              {7, hm(8), hm(15), MissingSource::sleep_extra}};
  CHECK(c.intervals == expected);
}

TEST_CASE("nonwear becomes a missing interval verbatim, split at midnight") {
  auto zeros = nights();
  zeros.push_back({hm(10), hm(14)});
  zeros.push_back({3 * kEpochsPerDay + hm(12), 3 * kEpochsPerDay + hm(16)});
  const auto c = classify_one(fixtures::awake_week_with_zeros("c", Timepoint::followup, DayOfWeek::mon, zeros));
  const std::vector<MissingInterval> expected{{1, hm(10), hm(14), MissingSource::nonwear},
                                              {4, hm(12), hm(16), MissingSource::nonwear}};
  CHECK(c.intervals == expected);
  CHECK(missing_type(c) == MissingType::nonwear_only);
}

TEST_CASE("complete generated data yields no missing intervals") {
  const std::vector<Timepoint> tps{Timepoint::followup};
  const auto g = generate_complete_dataset(ActivityProfile{}, 10, tps, 42);
  const auto cls = classify_dataset(g.dataset, ClassifierConfig{}, 2);
  REQUIRE(cls.size() == 30);
  for (const auto& c : cls) {
    CHECK(c.intervals.empty());
    CHECK_FALSE(c.whole_week);
  }
  const Census census_ = census(cls, ClassifierConfig{});
  CHECK(census_.total == 30);
  CHECK(census_.by_type[static_cast<std::size_t>(MissingType::complete)] == 30);
  CHECK(classify_dataset(g.dataset, ClassifierConfig{}, 1).at(7).periods == cls[7].periods);
}
