#include "wearmi/analysis.hpp"

#include <limits>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "wearmi/errors.hpp"
#include "wearmi/stats.hpp"

namespace wearmi {

std::vector<Coefficient> fit_arm_means(std::span<const double> y, std::span<const Arm> arms) {
  if (y.size() != arms.size()) throw InvalidArgument("fit_arm_means: length mismatch");
  std::vector<Coefficient> out;
  for (Arm a : kArms) {
    std::vector<double> v;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (arms[i] == a) v.push_back(y[i]);
    }
    if (v.size() < 2) {
      throw InsufficientPool(fmt::format("arm {} has fewer than two analysable participants", to_string(a)));
    }
    const auto n = static_cast<Eigen::Index>(v.size());
    const OlsFit fit = ols_fit(Eigen::MatrixXd::Ones(n, 1), Eigen::Map<const Eigen::VectorXd>(v.data(), n));
    out.push_back({fmt::format("mean_{}", to_string(a)), fit.coefficients(0), fit.se(0)});
  }
  return out;
}

std::vector<Coefficient> fit_trial_model(std::span<const double> followup, std::span<const double> baseline,
                                         std::span<const Arm> arms, std::span<const std::string> practice) {
  const std::size_t n = followup.size();
  if (baseline.size() != n || arms.size() != n || (!practice.empty() && practice.size() != n)) {
    throw InvalidArgument("fit_trial_model: length mismatch");
  }
  std::vector<std::string> levels;
  if (!practice.empty()) {
    const std::set<std::string> all(practice.begin(), practice.end());
    levels.assign(std::next(all.begin()), all.end());
  }
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(4 + levels.size());
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd Y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto k = static_cast<std::size_t>(i);
    X(i, 0) = 1.0;
    X(i, 1) = baseline[k];
    X(i, 2) = arms[k] == Arm::postal ? 1.0 : 0.0;
    X(i, 3) = arms[k] == Arm::nurse ? 1.0 : 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      if (practice[k] == levels[l]) X(i, static_cast<Eigen::Index>(4 + l)) = 1.0;
    }
    Y(i) = followup[k];
  }
  const OlsFit fit = ols_fit(X, Y);
  std::vector<std::string> names{"intercept", "baseline", "postal", "nurse"};
  for (const auto& l : levels) names.push_back("practice_" + l);
  std::vector<Coefficient> out;
  for (Eigen::Index j = 0; j < cols; ++j) {
    out.push_back({names[static_cast<std::size_t>(j)], fit.coefficients(j), fit.se(j)});
  }
  return out;
}

std::vector<Coefficient> arm_correlations(std::span<const double> followup, std::span<const double> baseline,
                                          std::span<const Arm> arms) {
  std::vector<Coefficient> out;
  for (Arm a : kArms) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < arms.size(); ++i) {
      if (arms[i] == a) {
        x.push_back(baseline[i]);
        y.push_back(followup[i]);
      }
    }
    out.push_back({fmt::format("corr_{}", to_string(a)), pearson_correlation(x, y),
                   std::numeric_limits<double>::quiet_NaN()});
  }
  return out;
}

}  // namespace wearmi
