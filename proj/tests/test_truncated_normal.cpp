#include <cmath>
#include <limits>
#include <numbers>

#include <doctest.h>

#include "wearmi/rng.hpp"
#include "wearmi/truncated_normal.hpp"

using namespace wearmi;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("draws respect finite, one-sided and two-sided bounds") {
  Engine rng = make_stream(7, {1});
  struct Case {
    double mu, sigma, lo, hi;
  };
  const Case cases[] = {{0, 1, -0.5, 0.5}, {2, 0.3, 2.9, kInf}, {-1, 2, -kInf, -4}, {5, 1, -1, 0}, {0, 1, 3, 3.001}};
  for (const auto& c : cases) {
    for (int i = 0; i < 20000; ++i) {
      const double x = sample_truncated_normal(c.mu, c.sigma, c.lo, c.hi, rng);
      REQUIRE(std::isfinite(x));
      REQUIRE(x >= c.lo);
      REQUIRE(x <= c.hi);
    }
  }
}

TEST_CASE("half-normal mean") {
  Engine rng = make_stream(11, {2});
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_truncated_std_normal(0.0, kInf, rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean - std::sqrt(2.0 / std::numbers::pi)) < 4.0 * sd / std::sqrt(double(n)));
}

TEST_CASE("deep tail stays finite and in range") {
  Engine rng = make_stream(3, {3});
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = sample_truncated_std_normal(8.0, 9.0, rng);
    REQUIRE(std::isfinite(x));
    REQUIRE(x >= 8.0);
    REQUIRE(x <= 9.0);
    sum += x;
  }
  // Mass concentrates just above the lower bound: E ~ a + 1/a.
  CHECK(sum / 10000 == doctest::Approx(8.0 + 1.0 / 8.0).epsilon(0.01));
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_truncated_std_normal(-9.0, -8.0, rng);
    REQUIRE(x >= -9.0);
    REQUIRE(x <= -8.0);
  }
}

TEST_CASE("degenerate interval returns the point") {
  Engine rng(1);
  CHECK(sample_truncated_normal(0.0, 1.0, 2.5, 2.5, rng) == 2.5);
}
