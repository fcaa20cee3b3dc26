#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wearmi/classify.hpp"
#include "wearmi/core.hpp"
#include "wearmi/impute_np.hpp"
#include "wearmi/impute_param.hpp"
#include "wearmi/simgen.hpp"
#include "wearmi/stats.hpp"

namespace wearmi {

struct ScenarioConfig;
struct ScenarioResult;

namespace fs = std::filesystem;

/// Reads and validates the participant table. Throws SchemaError listing every
/// bad line.
std::vector<Participant> read_participants(const fs::path& path);

/// Reads epoch rows and assembles them per (participant, timepoint) as soon as
/// a block is complete, so sorted input needs memory for one block only.
/// Violations are collected across the whole file and raised as SchemaError,
/// then CompletenessError, then CrossRefError. A `mask` column, when present,
/// is honoured.
Dataset ingest(const fs::path& epochs, const fs::path& participants);
Dataset ingest_epochs(std::istream& in, std::vector<Participant> participants, const std::string& label = "epochs");

/// Shortest round-trip decimal text; "NA" for NaN.
std::string format_number(double x);
std::string format_number(float x);

void write_participants(std::ostream& out, const std::vector<Participant>& participants);
void write_epochs(std::ostream& out, const Dataset& data, bool with_mask);

void write_periods(std::ostream& out, std::span<const SeriesClassification> classification);
void write_intervals(std::ostream& out, std::span<const SeriesClassification> classification);
void write_sleep_windows(std::ostream& out, std::span<const SeriesClassification> classification);
void write_census(std::ostream& out, const Census& census);
void write_daily_weartime(std::ostream& out, std::span<const SeriesClassification> classification);

void write_provenance(std::ostream& out, const ImputationSet& set);
/// Day-level table for one imputation.
void write_par_completed(std::ostream& out, const ParTable& table, const ParMiResult& result, int m,
                         BoundMode mode, const BoundsConfig& bounds);
void write_fit_diagnostics(std::ostream& out, const std::vector<FitDiagnostic>& diagnostics);

void write_pattern_library(std::ostream& out, std::span<const MissingnessPattern> patterns);
std::vector<MissingnessPattern> read_pattern_library(const fs::path& path);
std::vector<MissingnessPattern> read_pattern_library(std::istream& in, const std::string& label);

/// key = value lines; '#' starts a comment. Unknown keys and bad values throw
/// ConfigError.
ScenarioConfig read_scenario_config(const fs::path& path);
ScenarioConfig parse_scenario_config(std::istream& in, const std::string& label);
void write_scenario_config(std::ostream& out, const ScenarioConfig& cfg);

/// Settings shared by the classify, impute and analysis commands.
struct PipelineConfig {
  int m = 10;
  std::uint64_t seed = 0;
  int threads = 1;
  BoundMode mode = BoundMode::specific;
  bool same_arm = true;
  std::vector<MatchVar> match_vars{MatchVar::age, MatchVar::bmi};
  int self_pool_threshold = 4;
  bool match_baseline_summaries = true;
  bool average_baseline_summaries = true;
  bool allow_relaxation = true;
  int par_cycles = 10;
  bool baseline_mean_covariate = false;
  BoundsConfig bounds;
  IntervalRegressionOptions fit;
  std::string model = "arm_means";  // arm_means | trial
  bool practice = false;            // practice dummies in the trial model
  IntervalMethod interval = IntervalMethod::t;
  double level = 0.95;
  ClassifierConfig classifier;
};
PipelineConfig read_pipeline_config(const fs::path& path, PipelineConfig base = {});
PipelineConfig parse_pipeline_config(std::istream& in, const std::string& label, PipelineConfig base = {});
void write_pipeline_config(std::ostream& out, const PipelineConfig& cfg);

void write_scenario_summary(std::ostream& out, const ScenarioResult& result);
void write_replicate_estimates(std::ostream& out, const ScenarioResult& result);
/// Long-format method x estimand x statistic table for plotting.
void write_plot_data(std::ostream& out, const ScenarioResult& result);

/// A simple delimited-text table read fully into memory.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(std::string_view name) const;  // throws SchemaError
};
CsvTable read_csv(const fs::path& path);
std::vector<std::string> split_csv_line(std::string_view line);

/// Output bundle written into a staging directory next to the target and
/// moved into place by commit(). Without commit the staging directory is
/// removed, so a failed run leaves no partial outputs.
class StagedOutput {
 public:
  explicit StagedOutput(fs::path target);
  ~StagedOutput();
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;

  fs::path path(const std::string& name) const { return staging_ / name; }
  /// Writes a file via a callback; the stream is checked after the call.
  void write(const std::string& name, const std::function<void(std::ostream&)>& body);
  void commit();

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

}  // namespace wearmi
