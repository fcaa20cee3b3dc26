#pragma once

#include <vector>

#include <Eigen/Dense>

#include "wearmi/rng.hpp"

namespace wearmi {

/// Per-row outcome bounds. lower == upper is an exactly observed value;
/// either bound may be infinite.
struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
  bool is_point() const { return lower == upper; }
};

struct IntervalRegressionOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 500;
};

struct IntervalRegressionFit {
  Eigen::VectorXd beta;
  double log_sigma = 0.0;
  /// Covariance of (beta, log_sigma), inverse of the negative Hessian.
  Eigen::MatrixXd vcov;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;

  double sigma() const;
  Eigen::VectorXd theta() const;  // (beta, log_sigma)
};

/// Log-likelihood of the censored normal model at theta = (beta, log sigma).
/// Point rows contribute log density, interval rows log(Phi(b) - Phi(a)).
double interval_loglik(const Eigen::MatrixXd& X, const std::vector<Bounds>& y, const Eigen::VectorXd& theta);

struct LoglikDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};
LoglikDerivatives interval_loglik_derivatives(const Eigen::MatrixXd& X, const std::vector<Bounds>& y,
                                              const Eigen::VectorXd& theta, bool with_hessian = true);

/// Maximum likelihood fit by BFGS with backtracking, polished by Newton steps.
/// Throws RankDeficientDesign, NonConvergence or FactorizationError.
IntervalRegressionFit fit_interval_regression(const Eigen::MatrixXd& X, const std::vector<Bounds>& y,
                                              const IntervalRegressionOptions& opt = {});

struct ParameterDraw {
  Eigen::VectorXd beta;
  double sigma = 1.0;
};

/// Draw of (beta, log sigma) from the asymptotic normal around the MLE.
ParameterDraw draw_parameters(const IntervalRegressionFit& fit, Engine& rng);

}  // namespace wearmi
