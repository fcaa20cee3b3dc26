#pragma once

// Independent reference implementations used only by the tests. They favour
// obviousness over speed and share no code with the library beyond types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "wearmi/core.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

struct Span {
  std::int64_t start;
  std::int64_t end;
  bool operator==(const Span&) const = default;
};

// Exact-zero blocks, merged while the nonzero gap between neighbours is at
// most `tolerance` epochs, then filtered by length.
inline std::vector<Span> zero_runs(const std::vector<float>& vm, std::int64_t min_len, std::int64_t tolerance) {
  std::vector<Span> blocks;
  const auto n = static_cast<std::int64_t>(vm.size());
  for (std::int64_t t = 0; t < n;) {
    if (vm[static_cast<std::size_t>(t)] != 0.0f) {
      ++t;
      continue;
    }
    std::int64_t e = t;
    while (e < n && vm[static_cast<std::size_t>(e)] == 0.0f) ++e;
    blocks.push_back({t, e});
    t = e;
  }
  std::vector<Span> merged;
  for (const Span& b : blocks) {
    if (!merged.empty() && b.start - merged.back().end <= tolerance) {
      merged.back().end = b.end;
    } else {
      merged.push_back(b);
    }
  }
  std::vector<Span> out;
  for (const Span& s : merged) {
    if (s.end - s.start >= min_len) out.push_back(s);
  }
  return out;
}

// Rule table for a period of `epochs` length with or without a boundary spike.
inline wearmi::PeriodClass period_class(std::int64_t epochs, bool spike) {
  const double hours = static_cast<double>(epochs) / wearmi::kEpochsPerHour;
  if (hours < 1.0) throw std::invalid_argument("not a zero-count period");
  if (hours < 3.0) return spike ? wearmi::PeriodClass::nonwear : wearmi::PeriodClass::inactive;
  if (hours < 5.0) return wearmi::PeriodClass::nonwear;
  if (hours < 15.0) return wearmi::PeriodClass::sleep;
  return wearmi::PeriodClass::sleep_extra;
}

// Gauss-Jordan inverse with partial pivoting.
inline Matrix inverse(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (a[pivot][col] == 0.0) throw std::runtime_error("singular matrix");
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    const double d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

// Inverse-distance weights; row 0 of `x` is the target, rows 1.. the pool.
// Covariance is the sample covariance of all rows.
inline std::vector<double> mahalanobis_weights(const Matrix& x) {
  const std::size_t n = x.size(), p = x[0].size();
  std::vector<double> mean(p, 0.0);
  for (const auto& row : x) {
    for (std::size_t j = 0; j < p; ++j) mean[j] += row[j] / static_cast<double>(n);
  }
  Matrix s(p, std::vector<double>(p, 0.0));
  for (const auto& row : x) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) s[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]) / static_cast<double>(n - 1);
    }
  }
  const Matrix si = inverse(s);
  std::vector<double> d;
  for (std::size_t k = 1; k < n; ++k) {
    double q = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) q += (x[k][i] - x[0][i]) * si[i][j] * (x[k][j] - x[0][j]);
    }
    d.push_back(std::sqrt(q));
  }
  double total = 0.0;
  for (double v : d) total += 1.0 / v;
  std::vector<double> w;
  for (double v : d) w.push_back((1.0 / v) / total);
  return w;
}

// (X'X)^-1 X'y and sigma^2 = RSS / (n - p) from the normal equations.
struct Ols {
  std::vector<double> beta;
  std::vector<double> se;
  double rss = 0.0;
};

inline Ols ols(const Matrix& X, const std::vector<double>& y) {
  const std::size_t n = X.size(), p = X[0].size();
  Matrix xtx(p, std::vector<double>(p, 0.0));
  std::vector<double> xty(p, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      xty[i] += X[r][i] * y[r];
      for (std::size_t j = 0; j < p; ++j) xtx[i][j] += X[r][i] * X[r][j];
    }
  }
  const Matrix inv = inverse(xtx);
  Ols out;
  out.beta.assign(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) out.beta[i] += inv[i][j] * xty[j];
  }
  for (std::size_t r = 0; r < n; ++r) {
    double fit = 0.0;
    for (std::size_t i = 0; i < p; ++i) fit += X[r][i] * out.beta[i];
    out.rss += (y[r] - fit) * (y[r] - fit);
  }
  const double s2 = out.rss / static_cast<double>(n - p);
  for (std::size_t i = 0; i < p; ++i) out.se.push_back(std::sqrt(s2 * inv[i][i]));
  return out;
}

inline std::vector<double> central_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double up = f(x);
    x[i] = xi - h;
    const double down = f(x);
    x[i] = xi;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Window membership of an absolute epoch under nightly instances: the night
// ending on day k uses the window for k's scope. A window crossing midnight
// covers [bed, 24h) of day k-1 and [0, wake) of day k; otherwise [bed, wake)
// of day k.
struct Window {
  int bed;
  int wake;
};

inline bool in_sleep(std::int64_t t, const std::function<Window(int day_index)>& window_for_day) {
  const int day = static_cast<int>(t / wearmi::kEpochsPerDay) + 1;
  const int c = static_cast<int>(t % wearmi::kEpochsPerDay);
  const Window today = window_for_day(day);
  if (today.bed > today.wake) {
    if (c < today.wake) return true;
  } else if (c >= today.bed && c < today.wake) {
    return true;
  }
  const Window tomorrow = window_for_day(day + 1);
  return tomorrow.bed > tomorrow.wake && c >= tomorrow.bed;
}

}  // namespace oracle
