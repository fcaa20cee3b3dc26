#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wearmi/classify.hpp"
#include "wearmi/core.hpp"
#include "wearmi/rng.hpp"

namespace wearmi {

/// Parameters of the synthetic step-count generator.
struct ActivityProfile {
  // Covariates
  double age_min = 45.0;
  double age_max = 75.0;
  double bmi_mean = 28.0;
  double bmi_sd = 4.5;
  double bmi_min = 18.0;
  double bmi_max = 45.0;
  double prop_male = 0.5;

  // Daily step level: log(level) = log(base_steps) + age/bmi/sex effects + person effect.
  double base_steps = 7000.0;
  double age_effect = -0.01;  // per year above age_min
  double bmi_effect = -0.02;  // per unit above bmi_mean
  double male_effect = 0.05;
  double person_sd = 0.38;    // log-scale SD of the person effect
  double day_cv = 0.35;       // lognormal day-to-day variation
  double weekend_factor = 0.85;
  /// Additive daily-step shift at follow-up by arm (control, postal, nurse).
  std::array<double, 3> arm_shift{0.0, 650.0, 700.0};
  double arm_shift_sd = 300.0;  // person-level spread of the shift in treated arms
  /// Target correlation of weekly mean steps between timepoints (control arm).
  double baseline_followup_corr = 0.75;

  // Sleep schedule, hours on the 24 h clock (bed may exceed 24).
  double wake_mean_h = 7.0;
  double bed_mean_h = 23.0;
  double sleep_person_sd_h = 0.6;
  double night_jitter_h = 0.33;
  double weekend_sleep_shift_h = 1.0;

  // Epoch texture
  double spike_prob = 0.055;
  double awake_vm_mean = 40.0;
  double bout_mean_epochs = 16.0;
  int cadence_min = 7;
  int cadence_max = 11;
  int max_steps_per_epoch = 25;

  /// Throws ProfileError on inconsistent values.
  void validate() const;
  /// Person-effect correlation between timepoints that yields the requested
  /// weekly-mean correlation. Throws ProfileError if none exists.
  double latent_correlation() const;
};

/// Known truth stored alongside a generated dataset.
struct GeneratedTruth {
  std::array<double, 3> arm_mean_followup{};  // weekly mean steps, complete data
  std::array<double, 3> arm_mean_baseline{};
  /// Follow-up on baseline regression (intercept, baseline, postal, nurse),
  /// present when both timepoints were generated.
  std::vector<double> regression;
};

struct GeneratedDataset {
  Dataset dataset;
  GeneratedTruth truth;
};

/// Complete seven-day series for n_per_arm participants in each arm at the
/// requested timepoints. Follow-up days carry the arm shift.
GeneratedDataset generate_complete_dataset(const ActivityProfile& profile, int n_per_arm,
                                           std::span<const Timepoint> timepoints, std::uint64_t seed);

/// Regression of follow-up on baseline weekly means plus arm dummies.
std::vector<double> followup_regression(std::span<const double> followup, std::span<const double> baseline,
                                        std::span<const Arm> arms);

// ---------------------------------------------------------------------------
// Missingness patterns

struct PatternEntry {
  int day_offset = 0;   // 0-based day of the span start
  int epoch_start = 0;  // within that day
  int epoch_end = 0;    // exclusive; may exceed 17280 for multi-day spans
  MissingSource kind = MissingSource::nonwear;

  std::int64_t abs_start() const { return std::int64_t{day_offset} * kEpochsPerDay + epoch_start; }
  std::int64_t abs_end() const { return std::int64_t{day_offset} * kEpochsPerDay + epoch_end; }
  friend bool operator==(const PatternEntry&, const PatternEntry&) = default;
};

struct MissingnessPattern {
  std::string source_id;
  std::vector<PatternEntry> entries;
};

/// Nonwear and sleep-extra spans of a classified series. Throws NoMissingness
/// when there are none.
MissingnessPattern extract_pattern(const std::string& source_id, std::span<const ClassifiedPeriod> periods);

/// Zeroes every pattern span. A sleep-extra span that touches none of the
/// target's own sleep periods is extended to the nearest one, so the zero run
/// merges with a night as it would in real data. `own_periods` come from
/// classifying the complete series.
EpochSeries apply_pattern(const EpochSeries& series, const MissingnessPattern& pattern,
                          std::span<const ClassifiedPeriod> own_periods);

/// Proportions of the synthetic incomplete regime used to build a pattern
/// library.
struct IncompleteRegime {
  double prop_nonwear_only = 0.59;
  double prop_sleep_extra_only = 0.21;  // remainder: both kinds
  double nonwear_extra_episodes_mean = 0.8;
  double prop_long_nonwear = 0.30;
  double prop_whole_day = 0.15;
};

/// Generates participants under the incomplete regime, classifies them and
/// keeps their patterns until `count` have been collected.
std::vector<MissingnessPattern> build_pattern_library(const ActivityProfile& profile,
                                                      const IncompleteRegime& regime, int count,
                                                      std::uint64_t seed,
                                                      const ClassifierConfig& cfg = {});

/// `n` distinct indices from [0, pool_size). Throws InsufficientPool.
std::vector<std::size_t> bootstrap_without_replacement(std::size_t pool_size, std::size_t n, Engine& rng);

/// Seven empty days (all zeros) in place of the series' data.
EpochSeries empty_week(const EpochSeries& series);

}  // namespace wearmi
