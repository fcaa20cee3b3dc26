#include <cmath>
#include <limits>

#include <doctest.h>

#include "oracles.hpp"
#include "wearmi/errors.hpp"
#include "wearmi/interval_regression.hpp"
#include "wearmi/rng.hpp"

using namespace wearmi;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  std::vector<Bounds> y;
};

Problem make_problem(std::uint64_t seed, int n, bool censor) {
  Engine rng = make_stream(seed, {});
  Problem p;
  p.X.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    p.X(i, 0) = 1.0;
    p.X(i, 1) = standard_normal(rng);
    p.X(i, 2) = uniform01(rng) * 4.0;
    const double v = 1.0 + 0.5 * p.X(i, 1) - 0.3 * p.X(i, 2) + 0.8 * standard_normal(rng);
    const double u = uniform01(rng);
    if (!censor || u < 0.5) {
      p.y.push_back({v, v});
    } else if (u < 0.7) {
      p.y.push_back({std::floor(v), std::floor(v) + 1.0});
    } else if (u < 0.85) {
      p.y.push_back({v - 0.5, std::numeric_limits<double>::infinity()});
    } else {
      p.y.push_back({-std::numeric_limits<double>::infinity(), v + 0.5});
    }
  }
  return p;
}

}  // namespace

TEST_CASE("analytic gradient agrees with finite differences") {
  const Problem p = make_problem(5, 80, true);
  Engine rng(99);
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd theta(4);
    for (int j = 0; j < 4; ++j) theta(j) = standard_normal(rng) * 0.5;
    const auto d = interval_loglik_derivatives(p.X, p.y, theta, false);
    const auto f = [&](const std::vector<double>& v) {
      return interval_loglik(p.X, p.y, Eigen::Map<const Eigen::VectorXd>(v.data(), 4));
    };
    const auto fd = oracle::central_gradient(f, {theta.data(), theta.data() + 4}, 1e-6);
    for (int j = 0; j < 4; ++j) CHECK(d.gradient(j) == doctest::Approx(fd[j]).epsilon(1e-5).scale(1.0));
    CHECK(d.value == doctest::Approx(interval_loglik(p.X, p.y, theta)));
  }
}

TEST_CASE("uncensored fit is least squares") {
  const Problem p = make_problem(8, 150, false);
  const auto fit = fit_interval_regression(p.X, p.y);
  CHECK(fit.converged);
  oracle::Matrix X;
  std::vector<double> y;
  for (int i = 0; i < p.X.rows(); ++i) {
    X.push_back({p.X(i, 0), p.X(i, 1), p.X(i, 2)});
    y.push_back(p.y[static_cast<std::size_t>(i)].lower);
  }
  const auto ols = oracle::ols(X, y);
  for (int j = 0; j < 3; ++j) CHECK(fit.beta(j) == doctest::Approx(ols.beta[j]).epsilon(1e-6));
  CHECK(fit.sigma() == doctest::Approx(std::sqrt(ols.rss / 150.0)).epsilon(1e-6));
}

TEST_CASE("censored fit recovers coefficients") {
  const Problem p = make_problem(21, 2000, true);
  const auto fit = fit_interval_regression(p.X, p.y);
  REQUIRE(fit.converged);
  const double truth[] = {1.0, 0.5, -0.3};
  for (int j = 0; j < 3; ++j) CHECK(std::abs(fit.beta(j) - truth[j]) < 4.0 * std::sqrt(fit.vcov(j, j)));
  CHECK(fit.sigma() == doctest::Approx(0.8).epsilon(0.1));
}

TEST_CASE("rank deficient design is rejected") {
  Problem p = make_problem(2, 40, false);
  p.X.col(2) = 2.0 * p.X.col(1);
  CHECK_THROWS_AS(fit_interval_regression(p.X, p.y), RankDeficientDesign);
}

TEST_CASE("parameter draws centre on the estimate") {
  const Problem p = make_problem(13, 300, true);
  const auto fit = fit_interval_regression(p.X, p.y);
  Engine rng(4);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  const int n = 4000;
  for (int i = 0; i < n; ++i) mean += draw_parameters(fit, rng).beta / n;
  for (int j = 0; j < 3; ++j) CHECK(std::abs(mean(j) - fit.beta(j)) < 5.0 * std::sqrt(fit.vcov(j, j) / n));
}
