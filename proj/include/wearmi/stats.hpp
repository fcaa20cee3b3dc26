#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wearmi {

struct OlsFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd se;
  double sigma2 = 0.0;  // RSS / (n - p)
  Eigen::VectorXd residuals;
};

/// Least squares with classical standard errors. Throws RankDeficientDesign
/// unless the design has full column rank and n > p.
OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Sample Pearson correlation; ConstantInput if either input is constant,
/// InvalidArgument on length mismatch or fewer than three points.
double pearson_correlation(std::span<const double> a, std::span<const double> b);

struct PooledResult {
  double estimate = 0.0;
  double within_var = 0.0;
  double between_var = 0.0;
  double total_var = 0.0;
  double se = 0.0;
  double df = 0.0;  // infinity when between_var == 0
  int m = 0;
};

/// Rubin's rules over M >= 2 completed-data estimates and their variances.
PooledResult rubin_pool(std::span<const double> estimates, std::span<const double> variances);

enum class IntervalMethod { t, normal };

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Two-sided interval around a pooled estimate, using t with Rubin df
/// (normal when df is infinite) or the normal approximation.
ConfidenceInterval confidence_interval(const PooledResult& r, double level = 0.95,
                                       IntervalMethod method = IntervalMethod::t);

/// Standard error of a mean over simulation replicates: sd / sqrt(R).
double mc_error(std::span<const double> replicates);

double mean(std::span<const double> x);
/// Sample standard deviation (denominator n - 1).
double sample_sd(std::span<const double> x);

}  // namespace wearmi
