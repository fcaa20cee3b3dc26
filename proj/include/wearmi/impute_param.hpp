#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wearmi/classify.hpp"
#include "wearmi/core.hpp"
#include "wearmi/interval_regression.hpp"

namespace wearmi {

enum class DayStatus : std::uint8_t { complete, partial, missing };
std::string_view to_string(DayStatus s);

enum class BoundMode : std::uint8_t { specific, generic };
std::string_view to_string(BoundMode m);
std::optional<BoundMode> parse_bound_mode(std::string_view s);

struct DayOutcome {
  std::string participant_id;
  Timepoint timepoint = Timepoint::baseline;
  int day_index = 1;
  double y_obs = 0.0;
  int lambda = 0;  // missing epochs
  DayStatus status = DayStatus::complete;
};

struct BoundsConfig {
  double offset = 1.0;          // steps added before taking logs
  double generic_upper = 10.5;  // log scale
  double max_steps_per_epoch = 5.0;
};

/// Daily observed totals and missing-epoch counts. A day with missing epochs
/// and no recorded activity on its observed epochs is `missing`, with lambda
/// set to the whole day.
std::vector<DayOutcome> aggregate_daily(const EpochSeries& series, std::span<const MissingInterval> intervals);

/// Log-scale bounds: a point for complete days, [log(y+o), log(y+5*lambda+o)]
/// or [log(y+o), generic_upper] for partial days, [log(o), generic_upper] for
/// missing days. The upper bound never falls below the lower.
Bounds outcome_bounds(const DayOutcome& outcome, BoundMode mode, const BoundsConfig& cfg = {});

/// Wide day-level table: one row per participant, one column per day and
/// timepoint, plus baseline covariates.
struct ParTable {
  std::vector<std::string> participant_ids;
  std::vector<Arm> arms;
  std::vector<std::string> covariate_names;
  Eigen::MatrixXd covariates;  // rows x covariates, no intercept
  std::vector<std::string> column_names;
  std::vector<Timepoint> column_timepoints;
  std::vector<std::vector<DayOutcome>> outcomes;  // [row][column]

  std::size_t rows() const { return participant_ids.size(); }
  std::size_t columns() const { return column_names.size(); }
  /// Column indices belonging to one timepoint.
  std::vector<std::size_t> columns_at(Timepoint tp) const;
};

struct ParTableOptions {
  /// Timepoints whose seven days become outcome columns.
  std::vector<Timepoint> timepoints{Timepoint::baseline, Timepoint::followup};
  /// Adds each participant's baseline mean steps as a covariate.
  bool baseline_mean_covariate = false;
};

/// Builds the table from classified series. Participants lacking a series at
/// a requested timepoint get seven missing days there.
ParTable build_par_table(const Dataset& dataset, std::span<const SeriesClassification> classification,
                         const ParTableOptions& opt = {});

struct ParMiConfig {
  BoundMode mode = BoundMode::specific;
  int m = 10;
  int cycles = 10;
  std::uint64_t seed = 0;
  int threads = 1;
  BoundsConfig bounds;
  IntervalRegressionOptions fit;
};

struct FitDiagnostic {
  Arm arm = Arm::control;
  int m = 1;
  int cycle = 1;
  std::string column;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
};

struct ParMiResult {
  /// completed[m-1](row, column) is the daily step total.
  std::vector<Eigen::MatrixXd> completed;
  std::vector<FitDiagnostic> diagnostics;

  /// Mean over the columns of one timepoint, per row.
  Eigen::VectorXd weekly_mean(const ParTable& table, int m, Timepoint tp) const;
};

/// Chained interval regressions within each arm: every day column holding
/// non-point rows is regressed on the covariates and the other day columns,
/// then its non-point rows are redrawn from truncated normals within their
/// bounds. Fit errors are rethrown with arm, column and imputation context.
ParMiResult run_par_mi(const ParTable& table, const ParMiConfig& cfg);

}  // namespace wearmi
