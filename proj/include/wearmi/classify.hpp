#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wearmi/core.hpp"

namespace wearmi {

/// Thresholds for zero-count detection and classification. Duration bins are
/// half-open, in hours: inactive/nonwear-with-spike [1,3), nonwear [3,5),
/// sleep [5,15), sleep-extra [15, inf).
struct ClassifierConfig {
  double min_zero_run_min = 60.0;
  double spike_tolerance_min = 2.0;
  double spike_window_min = 2.0;
  double vm_spike_threshold = 600.0;
  std::pair<double, double> inactive_range_h{1.0, 3.0};
  std::pair<double, double> nonwear_range_h{1.0, 5.0};
  std::pair<double, double> sleep_range_h{5.0, 15.0};
  double sleep_extra_min_h = 15.0;
  double weekend_shift_min = 60.0;
  double whole_week_weartime_min = 300.0;
  int whole_week_day_count = 5;
  double complete_case_weartime_min = 540.0;

  /// Throws ConfigError unless thresholds are positive and ranges contiguous.
  void validate() const;

  int min_run_epochs() const;
  int tolerance_epochs() const;
  int spike_window_epochs() const;
};

/// A maximal zero-VM run on the concatenated timeline, end exclusive.
struct ZeroRun {
  std::int64_t start = 0;
  std::int64_t end = 0;
  friend bool operator==(const ZeroRun&, const ZeroRun&) = default;
};

/// Maximal runs of vm == 0 in which every interruption (a maximal stretch of
/// nonzero epochs) lasts at most the spike tolerance. Runs start and end on
/// zero epochs; only runs of at least `min_zero_run_min` are returned.
std::vector<ZeroRun> detect_zero_runs(std::span<const float> vm, const ClassifierConfig& cfg);
std::vector<ZeroRun> detect_zero_count_periods(const EpochSeries& series, const ClassifierConfig& cfg);

ClassifiedPeriod classify_period(const ZeroRun& run, std::span<const float> vm,
                                 const ClassifierConfig& cfg);
ClassifiedPeriod classify_period(const ZeroRun& run, const EpochSeries& series,
                                 const ClassifierConfig& cfg);

/// Detects and classifies every zero-count period of a series.
std::vector<ClassifiedPeriod> classify_series(const EpochSeries& series, const ClassifierConfig& cfg);

/// Whether each day has no nonwear or sleep-extra period touching it.
std::array<bool, kDaysPerWeek> fully_observed_days(std::span<const ClassifiedPeriod> periods);

/// Average bed-to-wake window for one scope, from sleep periods on fully
/// observed days (circular means of start and end clock times). A night is
/// attributed to the day it ends on. Weekend scope falls back to the weekday
/// window shifted later by `weekend_shift_min`. Throws NoObservedSleep when
/// no usable night exists.
SleepWindow estimate_sleep_window(const EpochSeries& series,
                                  std::span<const ClassifiedPeriod> classified, SleepScope scope,
                                  const ClassifierConfig& cfg);

struct SleepWindows {
  std::optional<SleepWindow> weekday;
  std::optional<SleepWindow> weekend;

  const std::optional<SleepWindow>& for_scope(SleepScope s) const {
    return s == SleepScope::weekday ? weekday : weekend;
  }
};

/// Missing intervals: nonwear spans verbatim, sleep-extra spans minus the
/// applicable sleep window instances, all split at midnight.
std::vector<MissingInterval> derive_missing_intervals(const EpochSeries& series,
                                                      std::span<const ClassifiedPeriod> classified,
                                                      const SleepWindows& windows,
                                                      const ClassifierConfig& cfg);

std::array<double, kDaysPerWeek> daily_weartime(const EpochSeries& series,
                                                std::span<const ClassifiedPeriod> classified);

bool needs_whole_week(const EpochSeries& series, std::span<const ClassifiedPeriod> classified,
                      const ClassifierConfig& cfg);

/// Everything the imputation modules need to know about one series.
struct SeriesClassification {
  std::size_t series_index = 0;
  std::string participant_id;
  Timepoint timepoint = Timepoint::baseline;
  Arm arm = Arm::control;
  std::vector<ClassifiedPeriod> periods;
  SleepWindows windows;
  bool window_from_population = false;
  bool whole_week = false;
  std::vector<MissingInterval> intervals;
  std::array<double, kDaysPerWeek> weartime{};

  bool has_class(PeriodClass c) const;
};

/// Classifies every series. A participant with sleep-extra periods but no
/// usable own night gets the population median window of the same arm,
/// timepoint and scope. Whole-week cases get all seven days as missing.
std::vector<SeriesClassification> classify_dataset(const Dataset& dataset,
                                                   const ClassifierConfig& cfg, int threads = 1);

/// Copy of the dataset with the derived intervals flagged missing. Series
/// without intervals are shared, not copied.
Dataset with_missing_marked(const Dataset& dataset,
                            std::span<const SeriesClassification> classification);

// ---------------------------------------------------------------------------
// Census

enum class MissingType { complete, nonwear_only, sleep_extra_only, both, whole_week };
std::string_view to_string(MissingType t);
MissingType missing_type(const SeriesClassification& c);

struct Census {
  int total = 0;
  std::array<int, 5> by_type{};      // indexed by MissingType
  std::array<int, 3> by_low_days{};  // 0, 1-5, >5 days below the complete-case wear time

  /// Table rows in the layout "Completely observed  554 (54.2%)".
  std::vector<std::pair<std::string, std::string>> rows() const;
};

Census census(std::span<const SeriesClassification> classified, const ClassifierConfig& cfg);

}  // namespace wearmi
