#include "wearmi/impute_param.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "wearmi/errors.hpp"
#include "wearmi/rng.hpp"
#include "wearmi/truncated_normal.hpp"

namespace wearmi {

std::string_view to_string(DayStatus s) {
  switch (s) {
    case DayStatus::complete: return "complete";
    case DayStatus::partial: return "partial";
    case DayStatus::missing: return "missing";
  }
  return "?";
}

std::string_view to_string(BoundMode m) { return m == BoundMode::specific ? "specific" : "generic"; }

std::optional<BoundMode> parse_bound_mode(std::string_view s) {
  if (s == "specific") return BoundMode::specific;
  if (s == "generic") return BoundMode::generic;
  return std::nullopt;
}

std::vector<DayOutcome> aggregate_daily(const EpochSeries& series, std::span<const MissingInterval> intervals) {
  std::array<std::vector<bool>, kDaysPerWeek> missing;
  for (auto& m : missing) m.assign(kEpochsPerDay, false);
  for (const auto& iv : intervals) {
    if (iv.day_index < 1 || iv.day_index > kDaysPerWeek) throw InvalidArgument("interval day out of range");
    auto& m = missing[static_cast<std::size_t>(iv.day_index - 1)];
    for (int e = iv.epoch_start; e < iv.epoch_end; ++e) m[static_cast<std::size_t>(e)] = true;
  }
  std::vector<DayOutcome> out;
  for (const auto& day : series.days()) {
    const auto& m = missing[static_cast<std::size_t>(day.day_index - 1)];
    DayOutcome o;
    o.participant_id = series.participant_id();
    o.timepoint = series.timepoint();
    o.day_index = day.day_index;
    std::int64_t steps = 0;
    bool recorded = false;
    for (std::size_t e = 0; e < static_cast<std::size_t>(kEpochsPerDay); ++e) {
      if (m[e]) {
        ++o.lambda;
        continue;
      }
      steps += day.steps[e];
      recorded |= day.vm[e] > 0.0f;
    }
    o.y_obs = static_cast<double>(steps);
    if (o.lambda == 0) {
      o.status = DayStatus::complete;
    } else if (!recorded) {
      o.status = DayStatus::missing;
      o.lambda = kEpochsPerDay;
    } else {
      o.status = DayStatus::partial;
    }
    out.push_back(o);
  }
  return out;
}

Bounds outcome_bounds(const DayOutcome& o, BoundMode mode, const BoundsConfig& cfg) {
  const double lo = std::log(o.y_obs + cfg.offset);
  switch (o.status) {
    case DayStatus::complete: return {lo, lo};
    case DayStatus::missing: return {std::log(cfg.offset), std::max(cfg.generic_upper, std::log(cfg.offset))};
    case DayStatus::partial: break;
  }
  const double hi = mode == BoundMode::specific
                        ? std::log(o.y_obs + cfg.max_steps_per_epoch * o.lambda + cfg.offset)
                        : cfg.generic_upper;
  return {lo, std::max(hi, lo)};
}

std::vector<std::size_t> ParTable::columns_at(Timepoint tp) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < column_timepoints.size(); ++c) {
    if (column_timepoints[c] == tp) out.push_back(c);
  }
  return out;
}

ParTable build_par_table(const Dataset& dataset, std::span<const SeriesClassification> classification,
                         const ParTableOptions& opt) {
  if (opt.timepoints.empty()) throw InvalidArgument("no timepoints requested");
  std::map<std::size_t, const SeriesClassification*> by_series;
  for (const auto& c : classification) by_series[c.series_index] = &c;

  ParTable t;
  t.covariate_names = {"age", "bmi", "male"};
  if (opt.baseline_mean_covariate) t.covariate_names.push_back("baseline_mean_steps");
  for (Timepoint tp : opt.timepoints) {
    for (int d = 1; d <= kDaysPerWeek; ++d) {
      t.column_names.push_back(fmt::format("{}_d{}", to_string(tp), d));
      t.column_timepoints.push_back(tp);
    }
  }
  std::vector<std::vector<double>> cov_rows;
  for (const Participant& p : dataset.participants) {
    bool any = false;
    for (Timepoint tp : opt.timepoints) any |= dataset.find_series(p.id, tp) >= 0;
    if (!any) continue;
    std::vector<DayOutcome> row;
    for (Timepoint tp : opt.timepoints) {
      const int s = dataset.find_series(p.id, tp);
      if (s < 0) {
        for (int d = 1; d <= kDaysPerWeek; ++d) {
          row.push_back({p.id, tp, d, 0.0, kEpochsPerDay, DayStatus::missing});
        }
        continue;
      }
      const auto it = by_series.find(static_cast<std::size_t>(s));
      if (it == by_series.end()) throw InvalidArgument("series " + p.id + " was not classified");
      const auto days = aggregate_daily(*dataset.series[static_cast<std::size_t>(s)], it->second->intervals);
      row.insert(row.end(), days.begin(), days.end());
    }
    std::vector<double> cov{p.age, p.bmi, p.sex == Sex::male ? 1.0 : 0.0};
    if (opt.baseline_mean_covariate) {
      if (p.baseline_mean_steps) {
        cov.push_back(*p.baseline_mean_steps);
      } else {
        const int s = dataset.find_series(p.id, Timepoint::baseline);
        if (s < 0) throw InvalidArgument("participant " + p.id + " has no baseline mean steps");
        cov.push_back(mean_daily_steps(*dataset.series[static_cast<std::size_t>(s)]));
      }
    }
    t.participant_ids.push_back(p.id);
    t.arms.push_back(p.arm);
    t.outcomes.push_back(std::move(row));
    cov_rows.push_back(std::move(cov));
  }
  t.covariates.resize(static_cast<Eigen::Index>(cov_rows.size()), static_cast<Eigen::Index>(t.covariate_names.size()));
  for (std::size_t i = 0; i < cov_rows.size(); ++i) {
    for (std::size_t j = 0; j < cov_rows[i].size(); ++j) {
      t.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov_rows[i][j];
    }
  }
  return t;
}

Eigen::VectorXd ParMiResult::weekly_mean(const ParTable& table, int m, Timepoint tp) const {
  const auto cols = table.columns_at(tp);
  if (cols.empty()) throw InvalidArgument("timepoint not present in table");
  const Eigen::MatrixXd& c = completed.at(static_cast<std::size_t>(m - 1));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(c.rows());
  for (std::size_t col : cols) out += c.col(static_cast<Eigen::Index>(col));
  return out / static_cast<double>(cols.size());
}

namespace {

struct ArmChain {
  std::vector<Eigen::DenseIndex> rows;
  Eigen::MatrixXd covariates;  // non-constant covariates of these rows
};

// One chained-equation run for one arm and one imputation. Writes the arm's
// completed rows into `out` (log scale).
void run_chain(const ParTable& table, const ArmChain& arm, Arm arm_label,
               const std::vector<std::vector<Bounds>>& bounds, int m, const ParMiConfig& cfg,
               Eigen::MatrixXd& values, std::vector<FitDiagnostic>& diags) {
  const Eigen::Index n = static_cast<Eigen::Index>(arm.rows.size());
  const Eigen::Index C = static_cast<Eigen::Index>(table.columns());
  const Eigen::Index K = arm.covariates.cols();
  Engine rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(arm_label), static_cast<std::uint64_t>(m)});

  values.resize(n, C);
  std::vector<Eigen::Index> targets;
  for (Eigen::Index c = 0; c < C; ++c) {
    double point_sum = 0.0, lower_sum = 0.0;
    int points = 0;
    bool has_open = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Bounds& b = bounds[static_cast<std::size_t>(arm.rows[static_cast<std::size_t>(i)])][static_cast<std::size_t>(c)];
      lower_sum += b.lower;
      if (b.is_point()) {
        point_sum += b.lower;
        ++points;
      } else {
        has_open = true;
      }
    }
    const double fill = points > 0 ? point_sum / points : lower_sum / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Bounds& b = bounds[static_cast<std::size_t>(arm.rows[static_cast<std::size_t>(i)])][static_cast<std::size_t>(c)];
      values(i, c) = b.is_point() ? b.lower : std::min(std::max(b.lower, fill), b.upper);
    }
    if (has_open) targets.push_back(c);
  }

  Eigen::MatrixXd X(n, 1 + K + C - 1);
  X.col(0).setOnes();
  if (K > 0) X.middleCols(1, K) = arm.covariates;
  for (int cycle = 1; cycle <= cfg.cycles; ++cycle) {
    for (Eigen::Index c : targets) {
      Eigen::Index k = 1 + K;
      for (Eigen::Index o = 0; o < C; ++o) {
        if (o != c) X.col(k++) = values.col(o);
      }
      std::vector<Bounds> y(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] =
            bounds[static_cast<std::size_t>(arm.rows[static_cast<std::size_t>(i)])][static_cast<std::size_t>(c)];
      }
      IntervalRegressionFit fit;
      try {
        fit = fit_interval_regression(X, y, cfg.fit);
      } catch (const Error& e) {
        throw ImputationError(fmt::format("arm {}, column {}, imputation {}, cycle {}: {}: {}",
                                          to_string(arm_label), table.column_names[static_cast<std::size_t>(c)],
                                          m, cycle, e.code(), e.what()));
      }
      diags.push_back({arm_label, m, cycle, table.column_names[static_cast<std::size_t>(c)], fit.converged,
                       fit.iterations, fit.loglik});
      const ParameterDraw draw = draw_parameters(fit, rng);
      const Eigen::VectorXd mu = X * draw.beta;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Bounds& b = y[static_cast<std::size_t>(i)];
        if (b.is_point()) continue;
        values(i, c) = sample_truncated_normal(mu(i), draw.sigma, b.lower, b.upper, rng);
      }
    }
  }
}

}  // namespace

ParMiResult run_par_mi(const ParTable& table, const ParMiConfig& cfg) {
  if (cfg.m < 1) throw ConfigError("number of imputations must be positive");
  if (cfg.cycles < 1) throw ConfigError("number of chained-equation cycles must be positive");
  const std::size_t n = table.rows();
  const std::size_t C = table.columns();
  if (table.outcomes.size() != n || table.arms.size() != n ||
      static_cast<std::size_t>(table.covariates.rows()) != n) {
    throw InvalidArgument("parametric table is inconsistent");
  }

  std::vector<std::vector<Bounds>> bounds(n, std::vector<Bounds>(C));
  for (std::size_t i = 0; i < n; ++i) {
    if (table.outcomes[i].size() != C) throw InvalidArgument("parametric table row has wrong width");
    for (std::size_t c = 0; c < C; ++c) bounds[i][c] = outcome_bounds(table.outcomes[i][c], cfg.mode, cfg.bounds);
  }

  // Per-arm row sets, dropping covariates that are constant within the arm.
  std::vector<std::pair<Arm, ArmChain>> arms;
  for (Arm a : kArms) {
    ArmChain chain;
    for (std::size_t i = 0; i < n; ++i) {
      if (table.arms[i] == a) chain.rows.push_back(static_cast<Eigen::DenseIndex>(i));
    }
    if (chain.rows.empty()) continue;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < table.covariates.cols(); ++j) {
      const double first = table.covariates(chain.rows.front(), j);
      for (auto r : chain.rows) {
        if (table.covariates(r, j) != first) {
          keep.push_back(j);
          break;
        }
      }
    }
    chain.covariates.resize(static_cast<Eigen::Index>(chain.rows.size()), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < chain.rows.size(); ++i) {
      for (std::size_t k = 0; k < keep.size(); ++k) {
        chain.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            table.covariates(chain.rows[i], keep[k]);
      }
    }
    arms.emplace_back(a, std::move(chain));
  }

  const std::size_t tasks = arms.size() * static_cast<std::size_t>(cfg.m);
  std::vector<Eigen::MatrixXd> values(tasks);
  std::vector<std::vector<FitDiagnostic>> diags(tasks);
  parallel_for(tasks, cfg.threads, [&](std::size_t t) {
    const auto& [label, chain] = arms[t / static_cast<std::size_t>(cfg.m)];
    const int m = static_cast<int>(t % static_cast<std::size_t>(cfg.m)) + 1;
    run_chain(table, chain, label, bounds, m, cfg, values[t], diags[t]);
  });

  ParMiResult result;
  result.completed.assign(static_cast<std::size_t>(cfg.m),
                          Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(C)));
  for (std::size_t t = 0; t < tasks; ++t) {
    const ArmChain& chain = arms[t / static_cast<std::size_t>(cfg.m)].second;
    Eigen::MatrixXd& out = result.completed[t % static_cast<std::size_t>(cfg.m)];
    for (std::size_t i = 0; i < chain.rows.size(); ++i) {
      const std::size_t row = static_cast<std::size_t>(chain.rows[i]);
      for (std::size_t c = 0; c < C; ++c) {
        const DayOutcome& o = table.outcomes[row][c];
        const Bounds& b = bounds[row][c];
        double steps;
        if (b.is_point()) {
          steps = o.y_obs;
        } else {
          const double v = values[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
          steps = std::exp(v) - cfg.bounds.offset;
          steps = std::clamp(steps, o.y_obs, std::exp(b.upper) - cfg.bounds.offset);
          steps = std::max(steps, 0.0);
        }
        out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = steps;
      }
    }
  }
  // Diagnostics in (arm, m) order regardless of scheduling.
  for (auto& d : diags) result.diagnostics.insert(result.diagnostics.end(), d.begin(), d.end());
  return result;
}

}  // namespace wearmi
