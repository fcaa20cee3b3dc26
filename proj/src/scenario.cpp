#include "wearmi/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "wearmi/analysis.hpp"
#include "wearmi/errors.hpp"
#include "wearmi/impute_np.hpp"
#include "wearmi/impute_param.hpp"
#include "wearmi/io.hpp"
#include "wearmi/stats.hpp"

namespace wearmi {

namespace {

constexpr std::uint64_t kTagPool = 0x9001;
constexpr std::uint64_t kTagReplicate = 0x7e9;
constexpr std::uint64_t kTagNp = 0x4e9;
constexpr std::uint64_t kTagPar = 0x9a7;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Estimate {
  double value = 0.0;
  double se = kNaN;
};
using EstimateMap = std::map<std::string, Estimate>;

EstimateMap to_map(const std::vector<Coefficient>& coefs, EstimateMap out = {}) {
  for (const auto& c : coefs) out[c.term] = {c.estimate, c.se};
  return out;
}

std::vector<double> subset(const std::vector<double>& x, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(x[i]);
  return out;
}

// Per-arm means (one timepoint) or the follow-up on baseline model with
// within-arm correlations (two timepoints), over the included rows.
EstimateMap analyse_rows(const std::vector<double>& fu, const std::vector<double>& base, const std::vector<Arm>& arms,
                         const std::vector<bool>& include, bool two, bool with_correlation) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fu.size(); ++i) {
    if (include[i]) rows.push_back(i);
  }
  std::vector<Arm> a;
  for (std::size_t i : rows) a.push_back(arms[i]);
  const auto y = subset(fu, rows);
  if (!two) return to_map(fit_arm_means(y, a));
  const auto x = subset(base, rows);
  EstimateMap out = to_map(fit_trial_model(y, x, a));
  if (with_correlation) out = to_map(arm_correlations(y, x, a), std::move(out));
  return out;
}

// Pools per-imputation estimate maps; correlations come from m = 1 only.
EstimateMap pool_imputations(const std::vector<EstimateMap>& per_m) {
  EstimateMap out;
  for (const auto& [name, first] : per_m.front()) {
    if (std::isnan(first.se)) {
      out[name] = first;
      continue;
    }
    std::vector<double> est, var;
    for (const auto& m : per_m) {
      est.push_back(m.at(name).value);
      var.push_back(m.at(name).se * m.at(name).se);
    }
    if (per_m.size() < 2) {
      out[name] = first;
      continue;
    }
    const PooledResult r = rubin_pool(est, var);
    out[name] = {r.estimate, r.se};
  }
  return out;
}

struct Pool {
  Dataset complete;  // both timepoints when requested
  std::vector<std::size_t> followup_series;  // by participant index
  std::vector<std::size_t> baseline_series;
  std::vector<std::vector<ClassifiedPeriod>> followup_periods;
  std::vector<double> followup_mean;
  std::vector<double> baseline_mean;
  std::vector<double> baseline_weartime;
  std::vector<std::array<double, kDaysPerWeek>> baseline_day_wear;
  std::array<std::vector<std::size_t>, 3> by_arm;
};

Pool build_pool(const ScenarioConfig& cfg) {
  std::vector<Timepoint> tps;
  if (cfg.timepoints == 2) tps.push_back(Timepoint::baseline);
  tps.push_back(Timepoint::followup);
  Pool pool;
  pool.complete = generate_complete_dataset(cfg.profile, cfg.pool_per_arm, tps,
                                            derive_seed(cfg.master_seed, {kTagPool})).dataset;
  const std::size_t n = pool.complete.participants.size();
  pool.followup_series.resize(n);
  pool.baseline_series.resize(n);
  pool.followup_periods.resize(n);
  pool.followup_mean.resize(n);
  pool.baseline_mean.assign(n, 0.0);
  pool.baseline_weartime.assign(n, 0.0);
  pool.baseline_day_wear.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const Participant& p = pool.complete.participants[i];
    pool.by_arm[static_cast<std::size_t>(p.arm)].push_back(i);
    pool.followup_series[i] = static_cast<std::size_t>(pool.complete.find_series(p.id, Timepoint::followup));
    if (cfg.timepoints == 2) {
      pool.baseline_series[i] = static_cast<std::size_t>(pool.complete.find_series(p.id, Timepoint::baseline));
    }
  }
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const EpochSeries& fu = *pool.complete.series[pool.followup_series[i]];
    pool.followup_periods[i] = classify_series(fu, cfg.classifier);
    pool.followup_mean[i] = mean_daily_steps(fu);
    if (cfg.timepoints == 2) {
      const EpochSeries& b = *pool.complete.series[pool.baseline_series[i]];
      const auto periods = classify_series(b, cfg.classifier);
      pool.baseline_mean[i] = mean_daily_steps(b);
      pool.baseline_day_wear[i] = daily_weartime(b, periods);
      double w = 0.0;
      for (double x : pool.baseline_day_wear[i]) w += x;
      pool.baseline_weartime[i] = w / kDaysPerWeek;
    }
  });
  return pool;
}

std::vector<ReplicateEstimate> run_replicate(const ScenarioConfig& cfg, const Pool& pool,
                                             const std::vector<MissingnessPattern>& library, int r,
                                             const std::vector<std::string>& estimands) {
  Engine rng = make_stream(cfg.master_seed, {kTagReplicate, static_cast<std::uint64_t>(r)});
  const bool two = cfg.timepoints == 2;

  // Bootstrap sample, arm by arm.
  std::vector<std::size_t> sample;
  for (Arm a : kArms) {
    const auto& members = pool.by_arm[static_cast<std::size_t>(a)];
    for (std::size_t k : bootstrap_without_replacement(members.size(), static_cast<std::size_t>(cfg.n_per_arm), rng)) {
      sample.push_back(members[k]);
    }
  }
  const std::size_t N = sample.size();

  // Missingness assignment.
  std::vector<int> pattern_of(N, -1);
  std::vector<bool> emptied(N, false);
  auto choose = [&](std::vector<std::size_t> eligible, std::size_t k) {
    std::vector<std::size_t> picked;
    for (std::size_t j : bootstrap_without_replacement(eligible.size(), k, rng)) picked.push_back(eligible[j]);
    return picked;
  };
  std::vector<std::size_t> all(N);
  for (std::size_t i = 0; i < N; ++i) all[i] = i;
  std::vector<std::size_t> patterned;
  if (cfg.stratified) {
    const auto per_arm = static_cast<std::size_t>(std::llround(cfg.prop_pattern * cfg.n_per_arm));
    for (std::size_t a = 0; a < kArms.size(); ++a) {
      std::vector<std::size_t> arm_rows(all.begin() + static_cast<std::ptrdiff_t>(a * cfg.n_per_arm),
                                        all.begin() + static_cast<std::ptrdiff_t>((a + 1) * cfg.n_per_arm));
      for (std::size_t i : choose(arm_rows, per_arm)) patterned.push_back(i);
    }
  } else {
    patterned = choose(all, static_cast<std::size_t>(std::llround(cfg.prop_pattern * static_cast<double>(N))));
  }
  std::sort(patterned.begin(), patterned.end());
  for (std::size_t i : patterned) pattern_of[i] = static_cast<int>(uniform_index(rng, library.size()));
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < N; ++i) {
    if (pattern_of[i] < 0) rest.push_back(i);
  }
  const auto n_empty = static_cast<std::size_t>(std::llround(cfg.prop_whole_week * static_cast<double>(N)));
  for (std::size_t i : choose(rest, std::min(n_empty, rest.size()))) emptied[i] = true;

  // Replicate dataset: follow-up only; baseline enters as participant summaries.
  Dataset data;
  std::vector<Arm> arms(N);
  std::vector<double> truth_fu(N), base(N);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t k = sample[i];
    Participant p = pool.complete.participants[k];
    if (two) {
      p.baseline_mean_steps = pool.baseline_mean[k];
      p.baseline_mean_weartime = pool.baseline_weartime[k];
    }
    arms[i] = p.arm;
    truth_fu[i] = pool.followup_mean[k];
    base[i] = pool.baseline_mean[k];
    data.participants.push_back(std::move(p));
    const SeriesPtr& complete = pool.complete.series[pool.followup_series[k]];
    if (pattern_of[i] >= 0) {
      data.series.push_back(std::make_shared<const EpochSeries>(apply_pattern(
          *complete, library[static_cast<std::size_t>(pattern_of[i])], pool.followup_periods[k])));
    } else if (emptied[i]) {
      data.series.push_back(std::make_shared<const EpochSeries>(empty_week(*complete)));
    } else {
      data.series.push_back(complete);
    }
  }

  const std::vector<bool> everyone(N, true);
  auto analyse = [&](const std::vector<double>& fu, const std::vector<double>& b, const std::vector<bool>& include,
                     bool corr) { return analyse_rows(fu, b, arms, include, two, corr); };
  const EstimateMap truth = analyse(truth_fu, base, everyone, true);

  std::vector<SeriesClassification> classification;
  auto classified = [&]() -> const std::vector<SeriesClassification>& {
    if (classification.empty()) classification = classify_dataset(data, cfg.classifier, 1);
    return classification;
  };

  std::vector<ReplicateEstimate> out;
  for (Method method : cfg.methods) {
    EstimateMap est;
    std::string error;
    try {
      switch (method) {
        case Method::available: {
          std::vector<double> fu(N);
          for (std::size_t i = 0; i < N; ++i) fu[i] = mean_daily_steps(*data.series[i]);
          est = analyse(fu, base, everyone, true);
          break;
        }
        case Method::complete_case: {
          const auto& cls = classified();
          std::vector<double> fu(N, 0.0), b(N, 0.0);
          std::vector<bool> include(N, false);
          for (std::size_t i = 0; i < N; ++i) {
            double sum = 0.0;
            int days = 0;
            for (const auto& d : data.series[i]->days()) {
              if (cls[i].weartime[static_cast<std::size_t>(d.day_index - 1)] >= cfg.classifier.complete_case_weartime_min) {
                sum += static_cast<double>(d.total_steps());
                ++days;
              }
            }
            if (days == 0) continue;
            fu[i] = sum / days;
            include[i] = true;
            if (two) {
              const std::size_t k = sample[i];
              const EpochSeries& bs = *pool.complete.series[pool.baseline_series[k]];
              double bsum = 0.0;
              int bdays = 0;
              for (const auto& d : bs.days()) {
                if (pool.baseline_day_wear[k][static_cast<std::size_t>(d.day_index - 1)] >=
                    cfg.classifier.complete_case_weartime_min) {
                  bsum += static_cast<double>(d.total_steps());
                  ++bdays;
                }
              }
              if (bdays == 0) {
                include[i] = false;
                continue;
              }
              b[i] = bsum / bdays;
            }
          }
          est = analyse(fu, b, include, true);
          break;
        }
        case Method::np_mi: {
          const auto& cls = classified();
          const Dataset marked = with_missing_marked(data, cls);
          NpConfig np;
          np.m = cfg.m;
          np.vars = {MatchVar::age, MatchVar::bmi};
          if (two) {
            np.vars.push_back(MatchVar::baseline_mean_steps);
            np.vars.push_back(MatchVar::baseline_mean_weartime);
          }
          np.seed = derive_seed(cfg.master_seed, {kTagNp, static_cast<std::uint64_t>(r)});
          const ImputationSet set = run_np_mi(marked, cls, np);
          std::vector<EstimateMap> per_m;
          for (int m = 1; m <= cfg.m; ++m) {
            std::vector<double> fu(N);
            for (std::size_t i = 0; i < N; ++i) fu[i] = set.weekly_mean(i, m);
            per_m.push_back(analyse(fu, base, everyone, m == 1));
          }
          est = pool_imputations(per_m);
          break;
        }
        case Method::par_mi_specific:
        case Method::par_mi_generic: {
          const auto& cls = classified();
          ParTableOptions topt;
          topt.timepoints = {Timepoint::followup};
          topt.baseline_mean_covariate = two;
          const ParTable table = build_par_table(data, cls, topt);
          ParMiConfig pc;
          pc.mode = method == Method::par_mi_specific ? BoundMode::specific : BoundMode::generic;
          pc.m = cfg.m;
          pc.cycles = cfg.par_cycles;
          pc.seed = derive_seed(cfg.master_seed, {kTagPar, static_cast<std::uint64_t>(r),
                                                  static_cast<std::uint64_t>(pc.mode)});
          const ParMiResult res = run_par_mi(table, pc);
          std::vector<EstimateMap> per_m;
          for (int m = 1; m <= cfg.m; ++m) {
            const Eigen::VectorXd w = res.weekly_mean(table, m, Timepoint::followup);
            std::vector<double> fu(w.data(), w.data() + w.size());
            per_m.push_back(analyse(fu, base, everyone, m == 1));
          }
          est = pool_imputations(per_m);
          break;
        }
      }
    } catch (const Error& e) {
      error = fmt::format("{}: {}", e.code(), e.what());
    }
    for (const std::string& name : estimands) {
      ReplicateEstimate row;
      row.replicate = r;
      row.method = method;
      row.estimand = name;
      row.truth = truth.at(name).value;
      row.truth_se = truth.at(name).se;
      if (error.empty()) {
        row.estimate = est.at(name).value;
        row.se = est.at(name).se;
      } else {
        row.ok = false;
        row.error = error;
        row.estimate = kNaN;
        row.se = kNaN;
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::available: return "available";
    case Method::complete_case: return "complete_case";
    case Method::np_mi: return "np_mi";
    case Method::par_mi_specific: return "par_mi_specific";
    case Method::par_mi_generic: return "par_mi_generic";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view s) {
  for (Method m : kAllMethods) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(n_per_arm >= 2, "n_per_arm must be at least 2");
  require(pool_per_arm >= n_per_arm, "pool_per_arm must be at least n_per_arm");
  require(prop_pattern >= 0.0 && prop_pattern <= 1.0, "prop_pattern must lie in [0, 1]");
  require(prop_whole_week >= 0.0 && prop_whole_week <= 1.0, "prop_whole_week must lie in [0, 1]");
  require(prop_pattern + prop_whole_week <= 1.0, "prop_pattern + prop_whole_week must not exceed 1");
  require(timepoints == 1 || timepoints == 2, "timepoints must be 1 or 2");
  require(m >= 1, "m must be positive");
  require(replications >= 1, "replications must be positive");
  require(!methods.empty(), "at least one method is required");
  require(par_cycles >= 1, "par_cycles must be positive");
  require(threads >= 1, "threads must be positive");
  require(library_size >= 1, "library_size must be positive");
  profile.validate();
  classifier.validate();
}

std::vector<std::string> scenario_estimands(const ScenarioConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.timepoints == 1) {
    for (Arm a : kArms) out.push_back(fmt::format("mean_{}", to_string(a)));
  } else {
    out = {"intercept", "baseline", "postal", "nurse"};
    for (Arm a : kArms) out.push_back(fmt::format("corr_{}", to_string(a)));
  }
  return out;
}

const SummaryRow* ScenarioResult::find(Method m, std::string_view estimand) const {
  for (const auto& row : summary) {
    if (row.method == m && row.estimand == estimand) return &row;
  }
  return nullptr;
}

std::vector<SummaryRow> summarize(const std::vector<ReplicateEstimate>& estimates,
                                  const std::vector<Method>& methods, const std::vector<std::string>& estimands) {
  std::vector<SummaryRow> out;
  for (Method m : methods) {
    for (const std::string& name : estimands) {
      SummaryRow row;
      row.method = m;
      row.estimand = name;
      std::vector<double> est, diff, se, truth, truth_se;
      for (const auto& e : estimates) {
        if (e.method != m || e.estimand != name) continue;
        if (!e.ok) {
          ++row.n_failed;
          continue;
        }
        ++row.n_ok;
        est.push_back(e.estimate);
        diff.push_back(e.estimate - e.truth);
        se.push_back(e.se);
        truth.push_back(e.truth);
        truth_se.push_back(e.truth_se);
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      if (est.empty()) {
        row.truth = row.mean_estimate = row.bias = row.mc_error = row.bias_mc_error = row.mean_se = row.truth_se = nan;
      } else {
        row.truth = mean(truth);
        row.mean_estimate = mean(est);
        row.bias = mean(diff);
        row.mc_error = est.size() > 1 ? mc_error(est) : nan;
        row.bias_mc_error = diff.size() > 1 ? mc_error(diff) : nan;
        row.mean_se = mean(se);
        row.truth_se = mean(truth_se);
      }
      out.push_back(row);
    }
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const std::vector<MissingnessPattern> library =
      cfg.pattern_library.empty()
          ? build_pattern_library(cfg.profile, cfg.regime, cfg.library_size, cfg.library_seed, cfg.classifier)
          : read_pattern_library(cfg.pattern_library);
  if (library.empty() && cfg.prop_pattern > 0.0) throw ConfigError("pattern library is empty");
  const Pool pool = build_pool(cfg);
  const auto estimands = scenario_estimands(cfg);

  std::vector<std::vector<ReplicateEstimate>> per_rep(static_cast<std::size_t>(cfg.replications));
  parallel_for(per_rep.size(), cfg.threads, [&](std::size_t r) {
    per_rep[r] = run_replicate(cfg, pool, library, static_cast<int>(r) + 1, estimands);
  });

  ScenarioResult result;
  for (auto& rows : per_rep) {
    result.estimates.insert(result.estimates.end(), std::make_move_iterator(rows.begin()),
                            std::make_move_iterator(rows.end()));
  }
  result.summary = summarize(result.estimates, cfg.methods, estimands);
  return result;
}

}  // namespace wearmi
