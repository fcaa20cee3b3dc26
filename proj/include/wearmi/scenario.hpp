#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wearmi/classify.hpp"
#include "wearmi/simgen.hpp"

namespace wearmi {

enum class Method : std::uint8_t { available, complete_case, np_mi, par_mi_specific, par_mi_generic };
std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view s);
inline constexpr std::array<Method, 5> kAllMethods{Method::available, Method::complete_case, Method::np_mi,
                                                   Method::par_mi_specific, Method::par_mi_generic};

struct ScenarioConfig {
  std::string name = "scenario";
  int n_per_arm = 120;
  int pool_per_arm = 150;
  double prop_pattern = 0.45;
  double prop_whole_week = 0.0;
  int timepoints = 1;  // 1: follow-up only; 2: baseline and follow-up
  int m = 10;
  int replications = 100;
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  std::uint64_t master_seed = 1;
  bool stratified = false;  // pattern assignment within each arm
  int par_cycles = 10;
  int threads = 1;
  /// Pattern library CSV; empty to build one in memory from the profile.
  std::string pattern_library;
  int library_size = 250;
  std::uint64_t library_seed = 2024;
  ActivityProfile profile;
  IncompleteRegime regime;
  ClassifierConfig classifier;

  /// Throws ConfigError on invalid settings.
  void validate() const;
};

/// One estimate from one method in one replicate.
struct ReplicateEstimate {
  int replicate = 0;
  Method method = Method::available;
  std::string estimand;
  double truth = 0.0;
  double estimate = 0.0;
  double se = 0.0;  // NaN where no standard error applies
  double truth_se = 0.0;
  bool ok = true;
  std::string error;
};

struct SummaryRow {
  Method method = Method::available;
  std::string estimand;
  double truth = 0.0;          // mean over replicates of the complete-data value
  double mean_estimate = 0.0;
  double bias = 0.0;
  double mc_error = 0.0;       // sd(estimates) / sqrt(R)
  double bias_mc_error = 0.0;  // sd(estimate - truth) / sqrt(R)
  double mean_se = 0.0;        // NaN where no standard error applies
  double truth_se = 0.0;       // mean complete-data SE
  int n_ok = 0;
  int n_failed = 0;
};

struct ScenarioResult {
  std::vector<ReplicateEstimate> estimates;  // sorted by (replicate, method, estimand)
  std::vector<SummaryRow> summary;           // by method, then estimand

  const SummaryRow* find(Method m, std::string_view estimand) const;
};

/// Estimand names for a configuration, in output order.
std::vector<std::string> scenario_estimands(const ScenarioConfig& cfg);

/// Runs every replicate: bootstrap from the complete pool, induce patterns
/// and empty weeks, apply each method, pool MI fits with Rubin's rules.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Summaries from per-replicate estimates.
std::vector<SummaryRow> summarize(const std::vector<ReplicateEstimate>& estimates,
                                  const std::vector<Method>& methods, const std::vector<std::string>& estimands);

}  // namespace wearmi
