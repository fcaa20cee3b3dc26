#include "wearmi/truncated_normal.hpp"

#include <cmath>
#include <limits>

#include "wearmi/errors.hpp"

namespace wearmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exponential proposal for [a, b] with a > 0 (Robert 1995).
double tail_exponential(double a, double b, Engine& rng) {
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log1p(-uniform01(rng)) / alpha;
    if (z > b) continue;
    const double d = z - alpha;
    if (uniform01(rng) <= std::exp(-0.5 * d * d)) return z;
  }
}

// Uniform proposal for a narrow [a, b] with a >= 0.
double tail_uniform(double a, double b, Engine& rng) {
  for (;;) {
    const double z = a + (b - a) * uniform01(rng);
    if (uniform01(rng) <= std::exp(0.5 * (a * a - z * z))) return z;
  }
}

// [a, b] with a >= 0.
double positive_side(double a, double b, Engine& rng) {
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  // Uniform rejection wins when the interval is short relative to the
  // exponential proposal's expected overshoot.
  const double uniform_cut = std::sqrt(std::exp(1.0)) / alpha * std::exp(0.5 * (a * a - a * alpha));
  if (std::isfinite(b) && b - a < uniform_cut) return tail_uniform(a, b, rng);
  if (a < 0.25 && !std::isfinite(b)) {
    for (;;) {
      const double z = std::fabs(standard_normal(rng));
      if (z >= a) return z;
    }
  }
  return tail_exponential(a, b, rng);
}

}  // namespace

double sample_truncated_std_normal(double a, double b, Engine& rng) {
  if (std::isnan(a) || std::isnan(b) || a > b) throw InvalidArgument("truncated normal: need lower <= upper");
  if (a == b) return a;
  if (a >= 0.0) return positive_side(a, b, rng);
  if (b <= 0.0) return -positive_side(-b, -a, rng);
  // Interval straddles zero.
  if (b - a > 2.5 || !std::isfinite(a) || !std::isfinite(b)) {
    for (;;) {
      const double z = standard_normal(rng);
      if (z >= a && z <= b) return z;
    }
  }
  for (;;) {
    const double z = a + (b - a) * uniform01(rng);
    if (uniform01(rng) <= std::exp(-0.5 * z * z)) return z;
  }
}

double sample_truncated_normal(double mu, double sigma, double lower, double upper, Engine& rng) {
  if (!(sigma > 0.0)) throw InvalidArgument("truncated normal: sigma must be positive");
  if (lower > upper) throw InvalidArgument("truncated normal: need lower <= upper");
  if (lower == upper) return lower;
  const double a = lower == -kInf ? -kInf : (lower - mu) / sigma;
  const double b = upper == kInf ? kInf : (upper - mu) / sigma;
  const double z = sample_truncated_std_normal(a, b, rng);
  const double x = mu + sigma * z;
  // Guard against rounding pushing the result a hair outside the bounds.
  return std::fmin(std::fmax(x, lower), upper);
}

}  // namespace wearmi
