#pragma once

#include <span>
#include <string>
#include <vector>

#include "wearmi/core.hpp"

namespace wearmi {

struct Coefficient {
  std::string term;
  double estimate = 0.0;
  double se = 0.0;
};

/// Intercept-only regression per arm; terms "mean_<arm>".
std::vector<Coefficient> fit_arm_means(std::span<const double> y, std::span<const Arm> arms);

/// Follow-up on baseline plus postal and nurse dummies; terms "intercept",
/// "baseline", "postal", "nurse". Non-empty `practice` labels add one dummy
/// per label except the first in sorted order ("practice_<label>").
std::vector<Coefficient> fit_trial_model(std::span<const double> followup, std::span<const double> baseline,
                                         std::span<const Arm> arms,
                                         std::span<const std::string> practice = {});

/// Within-arm Pearson correlations of baseline and follow-up; terms
/// "corr_<arm>", no standard error (NaN).
std::vector<Coefficient> arm_correlations(std::span<const double> followup, std::span<const double> baseline,
                                          std::span<const Arm> arms);

}  // namespace wearmi
