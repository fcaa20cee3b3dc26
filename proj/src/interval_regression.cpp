#include "wearmi/interval_regression.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "wearmi/errors.hpp"

namespace wearmi {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kInvSqrt2 = 0.70710678118654752440;

double log_phi(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

// log of the upper tail Q(x) = 1 - Phi(x).
double log_upper_tail(double x) {
  if (x == std::numeric_limits<double>::infinity()) return -std::numeric_limits<double>::infinity();
  if (x < 30.0) return std::log(0.5 * std::erfc(x * kInvSqrt2));
  // Asymptotic series; erfc underflows this far out.
  const double x2 = x * x;
  return log_phi(x) - std::log(x) + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
}

// log(Phi(b) - Phi(a)) for a < b, accurate in both tails.
double log_normal_mass(double a, double b) {
  if (a >= 0.0) {
    const double qa = log_upper_tail(a);
    const double qb = log_upper_tail(b);
    return qa + std::log1p(-std::exp(qb - qa));
  }
  if (b <= 0.0) return log_normal_mass(-b, -a);
  const double lower_tail = 0.5 * std::erfc(-a * kInvSqrt2);  // Phi(a)
  const double upper_tail = 0.5 * std::erfc(b * kInvSqrt2);   // 1 - Phi(b)
  return std::log1p(-(lower_tail + upper_tail));
}

struct Standardization {
  Eigen::VectorXd center;  // zero for the intercept and when no intercept exists
  Eigen::VectorXd scale;
  Eigen::MatrixXd X;

  // beta = A * beta_std
  Eigen::MatrixXd to_original() const {
    const Eigen::Index p = scale.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p + 1, p + 1);
    Eigen::Index intercept = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (center(j) == 0.0 && scale(j) == 1.0 && (X.col(j).array() == 1.0).all()) intercept = j;
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      A(j, j) = 1.0 / scale(j);
      if (intercept >= 0 && j != intercept) A(intercept, j) = -center(j) / scale(j);
    }
    A(p, p) = 1.0;
    return A;
  }
};

Standardization standardize(const Eigen::MatrixXd& X) {
  Standardization s;
  const Eigen::Index p = X.cols();
  const double n = static_cast<double>(X.rows());
  s.center = Eigen::VectorXd::Zero(p);
  s.scale = Eigen::VectorXd::Ones(p);
  bool has_intercept = false;
  for (Eigen::Index j = 0; j < p; ++j) has_intercept |= (X.col(j).array() == 1.0).all();
  for (Eigen::Index j = 0; j < p; ++j) {
    if ((X.col(j).array() == 1.0).all()) continue;
    const double mean = X.col(j).mean();
    const double c = has_intercept ? mean : 0.0;
    const double ss = (X.col(j).array() - c).square().sum() / n;
    if (ss > 0.0) {
      s.center(j) = c;
      s.scale(j) = std::sqrt(ss);
    }
  }
  s.X = (X.rowwise() - s.center.transpose()).array().rowwise() / s.scale.transpose().array();
  return s;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

double IntervalRegressionFit::sigma() const { return std::exp(log_sigma); }

Eigen::VectorXd IntervalRegressionFit::theta() const {
  Eigen::VectorXd t(beta.size() + 1);
  t << beta, log_sigma;
  return t;
}

LoglikDerivatives interval_loglik_derivatives(const Eigen::MatrixXd& X, const std::vector<Bounds>& y,
                                              const Eigen::VectorXd& theta, bool with_hessian) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (static_cast<Eigen::Index>(y.size()) != n || theta.size() != p + 1) {
    throw InvalidArgument("interval regression: dimension mismatch");
  }
  const double tau = theta(p);
  const double sigma = std::exp(tau);
  const Eigen::VectorXd eta = X * theta.head(p);

  // Per-row derivatives with respect to (eta, tau).
  Eigen::VectorXd g_eta(n), h_ee(n), h_et(n);
  double g_tau = 0.0, h_tt = 0.0, value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Bounds& b = y[static_cast<std::size_t>(i)];
    if (b.is_point()) {
      const double z = (b.lower - eta(i)) / sigma;
      value += -tau + log_phi(z);
      g_eta(i) = z / sigma;
      g_tau += -1.0 + z * z;
      h_ee(i) = -1.0 / (sigma * sigma);
      h_et(i) = -2.0 * z / sigma;
      h_tt += -2.0 * z * z;
      continue;
    }
    const double a = (b.lower - eta(i)) / sigma;
    const double c = (b.upper - eta(i)) / sigma;
    const double log_p = log_normal_mass(a, c);
    value += log_p;
    // Density-to-mass ratios; an infinite bound contributes nothing.
    const double ra = std::isfinite(a) ? std::exp(log_phi(a) - log_p) : 0.0;
    const double rc = std::isfinite(c) ? std::exp(log_phi(c) - log_p) : 0.0;
    const double a_ra = std::isfinite(a) ? a * ra : 0.0;
    const double c_rc = std::isfinite(c) ? c * rc : 0.0;
    const double pe = (ra - rc) / sigma;
    const double pt = a_ra - c_rc;
    g_eta(i) = pe;
    g_tau += pt;
    if (with_hessian) {
      const double pee = (a_ra - c_rc) / (sigma * sigma);
      const double a2 = std::isfinite(a) ? a * a_ra : 0.0;
      const double c2 = std::isfinite(c) ? c * c_rc : 0.0;
      const double pet = (a2 - c2) / sigma - pe;
      const double a3 = std::isfinite(a) ? a * a2 : 0.0;
      const double c3 = std::isfinite(c) ? c * c2 : 0.0;
      const double ptt = -(a_ra - a3) + (c_rc - c3);
      h_ee(i) = pee - pe * pe;
      h_et(i) = pet - pe * pt;
      h_tt += ptt - pt * pt;
    }
  }

  LoglikDerivatives out;
  out.value = value;
  out.gradient.resize(p + 1);
  out.gradient.head(p) = X.transpose() * g_eta;
  out.gradient(p) = g_tau;
  if (with_hessian) {
    out.hessian.resize(p + 1, p + 1);
    out.hessian.topLeftCorner(p, p) = X.transpose() * h_ee.asDiagonal() * X;
    const Eigen::VectorXd cross = X.transpose() * h_et;
    out.hessian.topRightCorner(p, 1) = cross;
    out.hessian.bottomLeftCorner(1, p) = cross.transpose();
    out.hessian(p, p) = h_tt;
  }
  return out;
}

double interval_loglik(const Eigen::MatrixXd& X, const std::vector<Bounds>& y, const Eigen::VectorXd& theta) {
  return interval_loglik_derivatives(X, y, theta, false).value;
}

IntervalRegressionFit fit_interval_regression(const Eigen::MatrixXd& X, const std::vector<Bounds>& y,
                                              const IntervalRegressionOptions& opt) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (static_cast<Eigen::Index>(y.size()) != n) throw InvalidArgument("interval regression: dimension mismatch");
  if (n <= p) throw RankDeficientDesign("interval regression: fewer rows than coefficients");
  for (const Bounds& b : y) {
    if (std::isnan(b.lower) || std::isnan(b.upper) || b.lower > b.upper) {
      throw InvalidArgument("interval regression: malformed bounds");
    }
    if (b.is_point() && !std::isfinite(b.lower)) throw InvalidArgument("interval regression: infinite point");
  }

  const Standardization st = standardize(X);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(st.X);
  if (qr.rank() < p) throw RankDeficientDesign("interval regression: design is rank deficient");

  // Least squares on midpoints; an open side is replaced by the finite bound
  // moved one unit outward.
  Eigen::VectorXd mid(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Bounds& b = y[static_cast<std::size_t>(i)];
    const bool lo = std::isfinite(b.lower), hi = std::isfinite(b.upper);
    if (lo && hi) mid(i) = 0.5 * (b.lower + b.upper);
    else if (lo) mid(i) = b.lower + 1.0;
    else if (hi) mid(i) = b.upper - 1.0;
    else mid(i) = 0.0;
  }
  Eigen::VectorXd theta(p + 1);
  theta.head(p) = qr.solve(mid);
  const double rss = (mid - st.X * theta.head(p)).squaredNorm();
  theta(p) = 0.5 * std::log(std::max(rss / static_cast<double>(n), 1e-8));

  auto eval = [&](const Eigen::VectorXd& t, bool hess) { return interval_loglik_derivatives(st.X, y, t, hess); };

  // Minimize f = -loglik.
  LoglikDerivatives cur = eval(theta, false);
  if (!std::isfinite(cur.value)) throw NonConvergence("interval regression: non-finite start");
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(p + 1, p + 1);
  int iter = 0;
  bool converged = false;
  bool fresh_metric = true;

  auto newton_step = [&]() -> bool {
    LoglikDerivatives full = eval(theta, true);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-full.hessian);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) return false;
    const Eigen::VectorXd dir = ldlt.solve(full.gradient);
    double step = 1.0;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      const Eigen::VectorXd cand = theta + step * dir;
      LoglikDerivatives next = eval(cand, false);
      if (std::isfinite(next.value) && next.value >= cur.value - 1e-12 * (1.0 + std::fabs(cur.value))) {
        theta = cand;
        cur = std::move(next);
        return true;
      }
    }
    return false;
  };

  while (iter < opt.max_iterations) {
    if (max_abs(cur.gradient) < opt.gradient_tolerance) {
      converged = true;
      break;
    }
    ++iter;
    if (max_abs(cur.gradient) < 1e-4) {
      if (newton_step()) continue;
    }
    Eigen::VectorXd dir = Hinv * cur.gradient;  // ascent direction on loglik
    if (dir.dot(cur.gradient) <= 0.0) {
      Hinv = Eigen::MatrixXd::Identity(p + 1, p + 1);
      dir = cur.gradient;
      fresh_metric = true;
    }
    if (fresh_metric) {
      // Keep the first step modest in size.
      const double norm = dir.norm();
      if (norm > 1.0) dir /= norm;
    }
    double step = 1.0;
    bool accepted = false;
    LoglikDerivatives next;
    Eigen::VectorXd cand;
    const double slope = dir.dot(cur.gradient);
    for (int k = 0; k < 50; ++k, step *= 0.5) {
      cand = theta + step * dir;
      next = eval(cand, false);
      if (std::isfinite(next.value) && next.value >= cur.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (newton_step()) {
        Hinv = Eigen::MatrixXd::Identity(p + 1, p + 1);
        fresh_metric = true;
        continue;
      }
      break;
    }
    const Eigen::VectorXd s = cand - theta;
    const Eigen::VectorXd yv = cur.gradient - next.gradient;  // gradient change of f = -loglik
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (fresh_metric) {
        Hinv *= sy / yv.squaredNorm();
        fresh_metric = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p + 1, p + 1);
      Hinv = (I - rho * s * yv.transpose()) * Hinv * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    theta = cand;
    cur = std::move(next);
  }
  if (!converged && max_abs(cur.gradient) < opt.gradient_tolerance) converged = true;
  if (!converged) {
    throw NonConvergence(fmt::format("interval regression stopped after {} of {} iterations with gradient {:.3g}, "
                                     "log sigma {:.3g}",
                                     iter, opt.max_iterations, max_abs(cur.gradient), theta(p)));
  }

  const LoglikDerivatives final_d = eval(theta, true);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(-final_d.hessian);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
    throw FactorizationError("interval regression: information matrix is not positive definite");
  }
  const Eigen::MatrixXd vcov_std = ldlt.solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
  const Eigen::MatrixXd A = st.to_original();
  const Eigen::VectorXd theta_orig = A * theta;

  IntervalRegressionFit fit;
  fit.beta = theta_orig.head(p);
  fit.log_sigma = theta_orig(p);
  fit.vcov = A * vcov_std * A.transpose();
  fit.vcov = 0.5 * (fit.vcov + fit.vcov.transpose());
  fit.loglik = final_d.value;
  fit.converged = true;
  fit.iterations = iter;
  return fit;
}

ParameterDraw draw_parameters(const IntervalRegressionFit& fit, Engine& rng) {
  const Eigen::Index k = fit.vcov.rows();
  if (k != fit.beta.size() + 1 || fit.vcov.cols() != k) throw InvalidArgument("draw_parameters: bad vcov");
  if (!fit.vcov.allFinite()) throw FactorizationError("draw_parameters: non-finite covariance");
  Eigen::VectorXd z(k);
  for (Eigen::Index i = 0; i < k; ++i) z(i) = standard_normal(rng);

  Eigen::VectorXd delta;
  Eigen::LLT<Eigen::MatrixXd> llt(fit.vcov);
  if (llt.info() == Eigen::Success) {
    delta = llt.matrixL() * z;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.vcov);
    if (es.info() != Eigen::Success) throw FactorizationError("draw_parameters: eigen decomposition failed");
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    delta = es.eigenvectors() * root.asDiagonal() * z;
  }
  ParameterDraw d;
  d.beta = fit.beta + delta.head(k - 1);
  d.sigma = std::exp(fit.log_sigma + delta(k - 1));
  return d;
}

}  // namespace wearmi
