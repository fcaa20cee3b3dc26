#pragma once

#include "wearmi/rng.hpp"

namespace wearmi {

/// One draw from N(mu, sigma^2) restricted to [lower, upper]. Bounds may be
/// infinite. Uses exponential-proposal rejection for tails, so bounds many
/// standard deviations out stay finite and in range. lower == upper returns
/// the point.
double sample_truncated_normal(double mu, double sigma, double lower, double upper, Engine& rng);

/// Standardized version on [a, b].
double sample_truncated_std_normal(double a, double b, Engine& rng);

}  // namespace wearmi
