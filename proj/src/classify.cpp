#include "wearmi/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

#include <fmt/format.h>

#include "wearmi/errors.hpp"
#include "wearmi/rng.hpp"

namespace wearmi {

namespace {

int to_epochs(double minutes) { return static_cast<int>(std::lround(minutes * kEpochsPerMinute)); }
std::int64_t hours_to_epochs(double hours) { return std::llround(hours * kEpochsPerHour); }

int wrap_epoch(std::int64_t e) {
  return static_cast<int>(((e % kEpochsPerDay) + kEpochsPerDay) % kEpochsPerDay);
}

int circular_mean(std::span<const int> epochs) {
  double s = 0.0, c = 0.0;
  for (int e : epochs) {
    const double a = 2.0 * std::numbers::pi * e / kEpochsPerDay;
    s += std::sin(a);
    c += std::cos(a);
  }
  double a = std::atan2(s, c);
  if (a < 0) a += 2.0 * std::numbers::pi;
  // Two clock times an odd number of epochs apart average to an exact half;
  // summation noise must not pick the side, so near-ties round up.
  const double x = a / (2.0 * std::numbers::pi) * kEpochsPerDay;
  const double lo = std::floor(x);
  if (std::abs(x - lo - 0.5) < 1e-6) return wrap_epoch(static_cast<std::int64_t>(lo) + 1);
  return wrap_epoch(std::llround(x));
}

// Median of signed offsets around the circular mean.
int circular_median(std::vector<int> epochs) {
  const int centre = circular_mean(epochs);
  std::vector<int> offsets;
  offsets.reserve(epochs.size());
  for (int e : epochs) {
    int d = wrap_epoch(e - centre);
    if (d >= kEpochsPerDay / 2) d -= kEpochsPerDay;
    offsets.push_back(d);
  }
  std::sort(offsets.begin(), offsets.end());
  const std::size_t n = offsets.size();
  const double mid = n % 2 == 1 ? offsets[n / 2] : 0.5 * (offsets[n / 2 - 1] + offsets[n / 2]);
  return wrap_epoch(centre + std::llround(mid));
}

std::int64_t day_start(int day_index) { return std::int64_t{day_index - 1} * kEpochsPerDay; }

void push_split(std::vector<MissingInterval>& out, std::int64_t s, std::int64_t e, MissingSource src) {
  s = std::max<std::int64_t>(s, 0);
  e = std::min<std::int64_t>(e, kEpochsPerWeek);
  while (s < e) {
    const int day = static_cast<int>(s / kEpochsPerDay) + 1;
    const std::int64_t boundary = day_start(day + 1);
    const std::int64_t piece_end = std::min(e, boundary);
    out.push_back({day, static_cast<int>(s - day_start(day)), static_cast<int>(piece_end - day_start(day)), src});
    s = piece_end;
  }
}

}  // namespace

void ClassifierConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(fmt::format("{} must be positive", name));
  };
  positive(min_zero_run_min, "min_zero_run_min");
  positive(vm_spike_threshold, "vm_spike_threshold");
  positive(weekend_shift_min, "weekend_shift_min");
  positive(whole_week_weartime_min, "whole_week_weartime_min");
  positive(complete_case_weartime_min, "complete_case_weartime_min");
  if (spike_tolerance_min < 0.0 || spike_window_min < 0.0) {
    throw ConfigError("spike tolerance and window must be non-negative");
  }
  if (whole_week_day_count < 1 || whole_week_day_count > kDaysPerWeek) {
    throw ConfigError("whole_week_day_count must be in 1..7");
  }
  const bool ordered = inactive_range_h.first > 0 && inactive_range_h.first < inactive_range_h.second &&
                       nonwear_range_h.first == inactive_range_h.first &&
                       inactive_range_h.second < nonwear_range_h.second &&
                       nonwear_range_h.second == sleep_range_h.first &&
                       sleep_range_h.first < sleep_range_h.second &&
                       sleep_range_h.second == sleep_extra_min_h;
  if (!ordered) throw ConfigError("duration ranges must be contiguous and ordered");
}

int ClassifierConfig::min_run_epochs() const { return to_epochs(min_zero_run_min); }
int ClassifierConfig::tolerance_epochs() const { return to_epochs(spike_tolerance_min); }
int ClassifierConfig::spike_window_epochs() const { return to_epochs(spike_window_min); }

std::vector<ZeroRun> detect_zero_runs(std::span<const float> vm, const ClassifierConfig& cfg) {
  const std::int64_t n = static_cast<std::int64_t>(vm.size());
  const std::int64_t tolerance = cfg.tolerance_epochs();
  const std::int64_t min_len = cfg.min_run_epochs();
  std::vector<ZeroRun> runs;
  bool in_run = false;
  std::int64_t run_start = 0, last_zero = 0, interruption = 0;
  auto close = [&] {
    if (last_zero + 1 - run_start >= min_len) runs.push_back({run_start, last_zero + 1});
    in_run = false;
  };
  for (std::int64_t t = 0; t < n; ++t) {
    if (vm[static_cast<std::size_t>(t)] == 0.0f) {
      if (!in_run) {
        in_run = true;
        run_start = t;
      }
      last_zero = t;
      interruption = 0;
    } else if (in_run && ++interruption > tolerance) {
      close();
    }
  }
  if (in_run) close();
  return runs;
}

std::vector<ZeroRun> detect_zero_count_periods(const EpochSeries& series, const ClassifierConfig& cfg) {
  const std::vector<float> vm = series.concatenated_vm();
  return detect_zero_runs(vm, cfg);
}

ClassifiedPeriod classify_period(const ZeroRun& run, std::span<const float> vm,
                                 const ClassifierConfig& cfg) {
  const std::int64_t len = run.end - run.start;
  const std::int64_t one_h = hours_to_epochs(cfg.inactive_range_h.first);
  if (len < one_h) {
    throw InvalidArgument(fmt::format("zero-count period of {} epochs is shorter than {} h", len,
                                      cfg.inactive_range_h.first));
  }
  const std::int64_t n = static_cast<std::int64_t>(vm.size());
  const std::int64_t w = cfg.spike_window_epochs();
  bool spike = false;
  for (std::int64_t t = std::max<std::int64_t>(0, run.start - w); t < run.start && !spike; ++t) {
    spike = vm[static_cast<std::size_t>(t)] >= cfg.vm_spike_threshold;
  }
  for (std::int64_t t = run.end; t < std::min(n, run.end + w) && !spike; ++t) {
    spike = vm[static_cast<std::size_t>(t)] >= cfg.vm_spike_threshold;
  }

  PeriodClass cls;
  if (len < hours_to_epochs(cfg.inactive_range_h.second)) {
    cls = spike ? PeriodClass::nonwear : PeriodClass::inactive;
  } else if (len < hours_to_epochs(cfg.nonwear_range_h.second)) {
    cls = PeriodClass::nonwear;
  } else if (len < hours_to_epochs(cfg.sleep_range_h.second)) {
    cls = PeriodClass::sleep;
  } else {
    cls = PeriodClass::sleep_extra;
  }
  return {run.start, run.end, static_cast<double>(len) * kMinutesPerEpoch, cls, spike};
}

ClassifiedPeriod classify_period(const ZeroRun& run, const EpochSeries& series,
                                 const ClassifierConfig& cfg) {
  const std::vector<float> vm = series.concatenated_vm();
  return classify_period(run, vm, cfg);
}

std::vector<ClassifiedPeriod> classify_series(const EpochSeries& series, const ClassifierConfig& cfg) {
  const std::vector<float> vm = series.concatenated_vm();
  std::vector<ClassifiedPeriod> out;
  for (const ZeroRun& r : detect_zero_runs(vm, cfg)) out.push_back(classify_period(r, vm, cfg));
  return out;
}

std::array<bool, kDaysPerWeek> fully_observed_days(std::span<const ClassifiedPeriod> periods) {
  std::array<bool, kDaysPerWeek> ok;
  ok.fill(true);
  for (const auto& p : periods) {
    if (p.cls != PeriodClass::nonwear && p.cls != PeriodClass::sleep_extra) continue;
    const int first = start_position(p.start).day_index;
    const int last = end_position(p.end).day_index;
    for (int d = first; d <= last; ++d) ok[static_cast<std::size_t>(d - 1)] = false;
  }
  return ok;
}

SleepWindow estimate_sleep_window(const EpochSeries& series,
                                  std::span<const ClassifiedPeriod> classified, SleepScope scope,
                                  const ClassifierConfig& cfg) {
  const auto observed = fully_observed_days(classified);
  std::vector<int> beds, wakes;
  for (const auto& p : classified) {
    if (p.cls != PeriodClass::sleep) continue;
    const int first = start_position(p.start).day_index;
    const int last = end_position(p.end).day_index;
    bool usable = true;
    for (int d = first; d <= last; ++d) usable = usable && observed[static_cast<std::size_t>(d - 1)];
    // The night belongs to the day it ends on; a night running to the end of
    // the recording would have ended the following morning.
    const int wake_day = p.end >= kEpochsPerWeek ? kDaysPerWeek + 1 : start_position(p.end).day_index;
    if (!usable || scope_of(series.day_of_week(wake_day)) != scope) continue;
    if (p.start > 0) beds.push_back(wrap_epoch(p.start));
    if (p.end < kEpochsPerWeek) wakes.push_back(wrap_epoch(p.end));
  }
  if (!beds.empty() && !wakes.empty()) {
    SleepWindow w{circular_mean(beds), circular_mean(wakes), scope};
    if (w.bed_epoch != w.wake_epoch) return w;
  }
  if (scope == SleepScope::weekend) {
    const SleepWindow weekday = estimate_sleep_window(series, classified, SleepScope::weekday, cfg);
    SleepWindow w = weekday.shifted(to_epochs(cfg.weekend_shift_min));
    w.scope = SleepScope::weekend;
    return w;
  }
  throw NoObservedSleep(fmt::format("{} ({}): no fully observed {} night with a sleep period",
                                    series.participant_id(), to_string(series.timepoint()),
                                    to_string(scope)));
}

std::vector<MissingInterval> derive_missing_intervals(const EpochSeries& series,
                                                      std::span<const ClassifiedPeriod> classified,
                                                      const SleepWindows& windows,
                                                      const ClassifierConfig& /*cfg*/) {
  std::vector<MissingInterval> out;
  for (const auto& p : classified) {
    if (p.cls == PeriodClass::nonwear) {
      push_split(out, p.start, p.end, MissingSource::nonwear);
      continue;
    }
    if (p.cls != PeriodClass::sleep_extra) continue;

    // Remove every sleep-window instance. The instance for day d is the night
    // that ends on day d, using the window of d's scope.
    std::vector<std::pair<std::int64_t, std::int64_t>> pieces{{p.start, p.end}};
    const int first = start_position(p.start).day_index - 1;
    const int last = end_position(p.end).day_index + 1;
    for (int d = first; d <= last; ++d) {
      const SleepScope scope = scope_of(series.day_of_week(d));
      const auto& w = windows.for_scope(scope);
      std::int64_t lo, hi;
      const std::int64_t base = day_start(d);
      if (!w) {
        // Only needed if the instance could intersect the span.
        const std::int64_t reach_lo = base - kEpochsPerDay, reach_hi = base + kEpochsPerDay;
        if (reach_hi <= p.start || reach_lo >= p.end) continue;
        throw NoObservedSleep(fmt::format("{} ({}): no {} sleep window available",
                                          series.participant_id(), to_string(series.timepoint()),
                                          to_string(scope)));
      }
      if (w->bed_epoch > w->wake_epoch) {
        lo = base - kEpochsPerDay + w->bed_epoch;
        hi = base + w->wake_epoch;
      } else {
        lo = base + w->bed_epoch;
        hi = base + w->wake_epoch;
      }
      std::vector<std::pair<std::int64_t, std::int64_t>> next;
      for (auto [s, e] : pieces) {
        if (hi <= s || lo >= e) {
          next.emplace_back(s, e);
          continue;
        }
        if (s < lo) next.emplace_back(s, lo);
        if (hi < e) next.emplace_back(hi, e);
      }
      pieces = std::move(next);
    }
    for (auto [s, e] : pieces) push_split(out, s, e, MissingSource::sleep_extra);
  }
  std::sort(out.begin(), out.end(), [](const MissingInterval& a, const MissingInterval& b) {
    return a.abs_start() < b.abs_start();
  });
  return out;
}

std::array<double, kDaysPerWeek> daily_weartime(const EpochSeries& series,
                                                std::span<const ClassifiedPeriod> classified) {
  std::array<double, kDaysPerWeek> out{};
  for (int d = 1; d <= kDaysPerWeek; ++d) {
    out[static_cast<std::size_t>(d - 1)] = weartime_minutes(series.day(d), classified);
  }
  return out;
}

bool needs_whole_week(const EpochSeries& series, std::span<const ClassifiedPeriod> classified,
                      const ClassifierConfig& cfg) {
  int low = 0;
  for (double w : daily_weartime(series, classified)) {
    if (w < cfg.whole_week_weartime_min) ++low;
  }
  return low >= cfg.whole_week_day_count;
}

bool SeriesClassification::has_class(PeriodClass c) const {
  return std::any_of(periods.begin(), periods.end(), [c](const ClassifiedPeriod& p) { return p.cls == c; });
}

std::vector<SeriesClassification> classify_dataset(const Dataset& dataset,
                                                   const ClassifierConfig& cfg, int threads) {
  cfg.validate();
  std::vector<SeriesClassification> out(dataset.series.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const EpochSeries& s = *dataset.series[i];
    SeriesClassification& c = out[i];
    c.series_index = i;
    c.participant_id = s.participant_id();
    c.timepoint = s.timepoint();
    c.arm = dataset.participant(s.participant_id()).arm;
    c.periods = classify_series(s, cfg);
    c.weartime = daily_weartime(s, c.periods);
    c.whole_week = needs_whole_week(s, c.periods, cfg);
    if (c.whole_week) return;
    for (SleepScope scope : {SleepScope::weekday, SleepScope::weekend}) {
      try {
        (scope == SleepScope::weekday ? c.windows.weekday : c.windows.weekend) =
            estimate_sleep_window(s, c.periods, scope, cfg);
      } catch (const NoObservedSleep&) {
      }
    }
  });

  // Population medians of own-data windows, built lazily per (arm, tp, scope).
  using Key = std::tuple<Arm, Timepoint, SleepScope>;
  std::map<Key, std::optional<SleepWindow>> medians;
  auto population = [&](Arm arm, Timepoint tp, SleepScope scope) -> std::optional<SleepWindow> {
    const Key key{arm, tp, scope};
    if (auto it = medians.find(key); it != medians.end()) return it->second;
    std::vector<int> beds, wakes;
    for (const auto& c : out) {
      const auto& w = c.windows.for_scope(scope);
      if (c.arm == arm && c.timepoint == tp && !c.whole_week && !c.window_from_population && w) {
        beds.push_back(w->bed_epoch);
        wakes.push_back(w->wake_epoch);
      }
    }
    std::optional<SleepWindow> result;
    if (!beds.empty()) result = SleepWindow{circular_median(beds), circular_median(wakes), scope};
    medians[key] = result;
    return result;
  };

  // Pass 2 is sequential so the fallback is independent of thread count.
  std::vector<std::size_t> need_fallback;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& c = out[i];
    if (!c.whole_week && (!c.windows.weekday || !c.windows.weekend) &&
        c.has_class(PeriodClass::sleep_extra)) {
      need_fallback.push_back(i);
    }
  }
  std::vector<SleepWindows> fallback(out.size());
  for (std::size_t i : need_fallback) {
    const auto& c = out[i];
    fallback[i] = c.windows;
    if (!fallback[i].weekday) fallback[i].weekday = population(c.arm, c.timepoint, SleepScope::weekday);
    if (!fallback[i].weekend) fallback[i].weekend = population(c.arm, c.timepoint, SleepScope::weekend);
  }
  for (std::size_t i : need_fallback) {
    out[i].windows = fallback[i];
    out[i].window_from_population = true;
  }

  parallel_for(out.size(), threads, [&](std::size_t i) {
    SeriesClassification& c = out[i];
    if (c.whole_week) {
      for (int d = 1; d <= kDaysPerWeek; ++d) {
        c.intervals.push_back({d, 0, kEpochsPerDay, MissingSource::sleep_extra});
      }
      return;
    }
    c.intervals = derive_missing_intervals(*dataset.series[i], c.periods, c.windows, cfg);
  });
  return out;
}

Dataset with_missing_marked(const Dataset& dataset,
                            std::span<const SeriesClassification> classification) {
  Dataset out;
  out.participants = dataset.participants;
  out.series = dataset.series;
  for (const auto& c : classification) {
    if (c.intervals.empty()) continue;
    auto copy = std::make_shared<EpochSeries>(*dataset.series[c.series_index]);
    for (const auto& iv : c.intervals) copy->mark_missing(iv.day_index, iv.epoch_start, iv.epoch_end);
    out.series[c.series_index] = std::move(copy);
  }
  return out;
}

std::string_view to_string(MissingType t) {
  static constexpr std::array<std::string_view, 5> names{
      "Completely observed", "Non-wear only", "Sleep-extra only", "Non-wear and sleep-extra",
      "Whole week imputation"};
  return names[static_cast<std::size_t>(t)];
}

MissingType missing_type(const SeriesClassification& c) {
  if (c.whole_week) return MissingType::whole_week;
  bool nonwear = false, extra = false;
  for (const auto& iv : c.intervals) {
    (iv.source == MissingSource::nonwear ? nonwear : extra) = true;
  }
  if (nonwear && extra) return MissingType::both;
  if (nonwear) return MissingType::nonwear_only;
  if (extra) return MissingType::sleep_extra_only;
  return MissingType::complete;
}

Census census(std::span<const SeriesClassification> classified, const ClassifierConfig& cfg) {
  Census c;
  for (const auto& s : classified) {
    ++c.total;
    ++c.by_type[static_cast<std::size_t>(missing_type(s))];
    int low = 0;
    for (double w : s.weartime) {
      if (w < cfg.complete_case_weartime_min) ++low;
    }
    ++c.by_low_days[low == 0 ? 0 : (low <= 5 ? 1 : 2)];
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> Census::rows() const {
  auto cell = [this](int n) {
    const double pct = total > 0 ? 100.0 * n / total : 0.0;
    return fmt::format("{} ({:.3g}%)", n, pct);
  };
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < by_type.size(); ++i) {
    out.emplace_back(std::string(to_string(static_cast<MissingType>(i))), cell(by_type[i]));
  }
  out.emplace_back("0", cell(by_low_days[0]));
  out.emplace_back("Between 1 and 5", cell(by_low_days[1]));
  out.emplace_back("Greater than 5", cell(by_low_days[2]));
  out.emplace_back("Total", std::to_string(total));
  return out;
}

}  // namespace wearmi
