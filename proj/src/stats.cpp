#include "wearmi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "wearmi/errors.hpp"

namespace wearmi {

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("mean of empty input");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("standard deviation needs at least two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw InvalidArgument("ols_fit: dimension mismatch");
  if (n < p + 1) throw RankDeficientDesign("ols_fit: need more rows than columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) throw RankDeficientDesign("ols_fit: design is rank deficient");

  OlsFit fit;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - X * fit.coefficients;
  fit.sigma2 = fit.residuals.squaredNorm() / static_cast<double>(n - p);
  // (X'X)^-1 = P R^-1 R^-T P^T
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = Rinv * Rinv.transpose();
  const Eigen::MatrixXd xtx_inv = qr.colsPermutation() * inner * qr.colsPermutation().transpose();
  fit.se = (fit.sigma2 * xtx_inv.diagonal()).cwiseMax(0.0).cwiseSqrt();
  return fit;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("pearson_correlation: length mismatch");
  if (a.size() < 3) throw InvalidArgument("pearson_correlation: need at least three points");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw ConstantInput("pearson_correlation: constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

PooledResult rubin_pool(std::span<const double> estimates, std::span<const double> variances) {
  if (estimates.size() != variances.size()) throw InvalidArgument("rubin_pool: length mismatch");
  if (estimates.size() < 2) throw InvalidArgument("rubin_pool: need at least two imputations");
  const double m = static_cast<double>(estimates.size());
  PooledResult r;
  r.m = static_cast<int>(estimates.size());
  r.estimate = mean(estimates);
  r.within_var = mean(variances);
  double ss = 0.0;
  for (double e : estimates) ss += (e - r.estimate) * (e - r.estimate);
  r.between_var = ss / (m - 1.0);
  const double inflated = (1.0 + 1.0 / m) * r.between_var;
  r.total_var = r.within_var + inflated;
  r.se = std::sqrt(r.total_var);
  if (r.between_var > 0.0) {
    const double ratio = 1.0 + r.within_var / inflated;
    r.df = (m - 1.0) * ratio * ratio;
  } else {
    r.df = std::numeric_limits<double>::infinity();
  }
  return r;
}

ConfidenceInterval confidence_interval(const PooledResult& r, double level, IntervalMethod method) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
  const double p = 0.5 + 0.5 * level;
  double q;
  if (method == IntervalMethod::normal || !std::isfinite(r.df)) {
    q = boost::math::quantile(boost::math::normal_distribution<double>(), p);
  } else {
    q = boost::math::quantile(boost::math::students_t_distribution<double>(r.df), p);
  }
  return {r.estimate - q * r.se, r.estimate + q * r.se};
}

double mc_error(std::span<const double> replicates) {
  return sample_sd(replicates) / std::sqrt(static_cast<double>(replicates.size()));
}

}  // namespace wearmi
