#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <regex>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "wearmi/analysis.hpp"
#include "wearmi/classify.hpp"
#include "wearmi/errors.hpp"
#include "wearmi/impute_np.hpp"
#include "wearmi/impute_param.hpp"
#include "wearmi/io.hpp"
#include "wearmi/scenario.hpp"
#include "wearmi/simgen.hpp"
#include "wearmi/stats.hpp"

namespace wearmi::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kTagGenerate = 0x6e0;
constexpr std::uint64_t kTagInduce = 0x1d0;

struct Options {
  std::string epochs;
  std::string participants;
  std::string config;
  std::string out_dir;
  std::string imputed;
  std::string fits;
  std::uint64_t seed = 0;
  int m = 10;
  std::string mode = "specific";
  std::string arm_scope = "same";
  std::string model = "arm_means";
  int threads = 1;
  int n_per_arm = 10;
  int timepoints = 2;
  double prop_pattern = 0.0;
  int replications = 0;
  bool library_only = false;
  int library_size = 0;
};

struct Flags {
  CLI::Option* seed = nullptr;
  CLI::Option* m = nullptr;
  CLI::Option* mode = nullptr;
  CLI::Option* arm_scope = nullptr;
  CLI::Option* model = nullptr;
  CLI::Option* threads = nullptr;
  CLI::Option* replications = nullptr;
  CLI::Option* library_size = nullptr;
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

// Config file first, then explicit flags.
PipelineConfig effective_pipeline(const Options& o, const Flags& f) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : read_pipeline_config(o.config);
  if (given(f.seed)) cfg.seed = o.seed;
  if (given(f.m)) cfg.m = o.m;
  if (given(f.threads)) cfg.threads = o.threads;
  if (given(f.mode)) {
    const auto mode = parse_bound_mode(o.mode);
    if (!mode) throw ConfigError(fmt::format("--mode must be specific or generic, not '{}'", o.mode));
    cfg.mode = *mode;
  }
  if (given(f.arm_scope)) {
    if (o.arm_scope != "same" && o.arm_scope != "all") {
      throw ConfigError(fmt::format("--arm-scope must be same or all, not '{}'", o.arm_scope));
    }
    cfg.same_arm = o.arm_scope == "same";
  }
  if (given(f.model)) {
    if (o.model != "arm_means" && o.model != "trial") {
      throw ConfigError(fmt::format("--model must be arm_means or trial, not '{}'", o.model));
    }
    cfg.model = o.model;
  }
  if (cfg.m < 1) throw ConfigError("m must be positive");
  if (cfg.threads < 1) throw ConfigError("threads must be positive");
  cfg.classifier.validate();
  return cfg;
}

// Randomized commands need a seed from the flag or the config file.
void require_seed(const Options& o, const Flags& f, const std::string& command) {
  if (given(f.seed)) return;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    const std::regex key(R"(^\s*seed\s*=)");
    std::string line;
    while (std::getline(in, line)) {
      if (std::regex_search(line, key)) return;
    }
  }
  throw ConfigError(command + " is randomized and needs an explicit --seed");
}

void write_config_bundle(StagedOutput& bundle, const std::string& command, const Options& o,
                         const PipelineConfig& cfg) {
  bundle.write("config.ini", [&](std::ostream& out) {
    out << "# wearmi " << command << '\n';
    if (!o.epochs.empty()) out << "# epochs = " << o.epochs << '\n';
    if (!o.participants.empty()) out << "# participants = " << o.participants << '\n';
    if (!o.imputed.empty()) out << "# imputed = " << o.imputed << '\n';
    if (!o.fits.empty()) out << "# fits = " << o.fits << '\n';
    if (!o.config.empty()) out << "# config = " << o.config << '\n';
    write_pipeline_config(out, cfg);
  });
}

std::string m_file(std::string_view stem, int m) { return fmt::format("{}_m{:02}.csv", stem, m); }

// ---------------------------------------------------------------------------

int cmd_classify(const Options& o, const Flags& f, std::ostream& out) {
  const PipelineConfig cfg = effective_pipeline(o, f);
  const Dataset data = ingest(o.epochs, o.participants);
  const auto cls = classify_dataset(data, cfg.classifier, cfg.threads);
  StagedOutput bundle(o.out_dir);
  write_config_bundle(bundle, "classify", o, cfg);
  bundle.write("periods.csv", [&](std::ostream& s) { write_periods(s, cls); });
  bundle.write("intervals.csv", [&](std::ostream& s) { write_intervals(s, cls); });
  bundle.write("sleep_windows.csv", [&](std::ostream& s) { write_sleep_windows(s, cls); });
  bundle.write("daily_weartime.csv", [&](std::ostream& s) { write_daily_weartime(s, cls); });
  bundle.write("census.csv", [&](std::ostream& s) { write_census(s, census(cls, cfg.classifier)); });
  bundle.commit();
  out << fmt::format("classified {} series into {}\n", cls.size(), o.out_dir);
  return 0;
}

int cmd_impute_np(const Options& o, const Flags& f, std::ostream& out) {
  require_seed(o, f, "impute-np");
  const PipelineConfig cfg = effective_pipeline(o, f);
  const Dataset data = ingest(o.epochs, o.participants);
  const auto cls = classify_dataset(data, cfg.classifier, cfg.threads);
  const Dataset marked = with_missing_marked(data, cls);
  NpConfig np;
  np.m = cfg.m;
  np.self_pool_threshold = cfg.self_pool_threshold;
  np.vars = cfg.match_vars;
  np.match_baseline_summaries = cfg.match_baseline_summaries;
  np.average_baseline_summaries = cfg.average_baseline_summaries;
  np.allow_relaxation = cfg.allow_relaxation;
  np.same_arm = cfg.same_arm;
  np.seed = cfg.seed;
  np.threads = cfg.threads;
  const ImputationSet set = run_np_mi(marked, cls, np);

  StagedOutput bundle(o.out_dir);
  write_config_bundle(bundle, "impute-np", o, cfg);
  bundle.write("intervals.csv", [&](std::ostream& s) { write_intervals(s, cls); });
  bundle.write("provenance.csv", [&](std::ostream& s) { write_provenance(s, set); });
  for (int m = 1; m <= cfg.m; ++m) {
    const Dataset completed = set.completed(m);
    bundle.write(m_file("completed", m), [&](std::ostream& s) { write_epochs(s, completed, true); });
  }
  bundle.commit();
  out << fmt::format("imputed {} intervals x {} imputations into {}\n", set.provenance().size() / cfg.m, cfg.m,
                     o.out_dir);
  return 0;
}

int cmd_impute_par(const Options& o, const Flags& f, std::ostream& out) {
  require_seed(o, f, "impute-par");
  const PipelineConfig cfg = effective_pipeline(o, f);
  const Dataset data = ingest(o.epochs, o.participants);
  const auto cls = classify_dataset(data, cfg.classifier, cfg.threads);
  ParTableOptions topt;
  topt.timepoints.clear();
  for (Timepoint tp : {Timepoint::baseline, Timepoint::followup}) {
    if (data.has_timepoint(tp)) topt.timepoints.push_back(tp);
  }
  topt.baseline_mean_covariate = cfg.baseline_mean_covariate;
  const ParTable table = build_par_table(data, cls, topt);
  ParMiConfig pc;
  pc.mode = cfg.mode;
  pc.m = cfg.m;
  pc.cycles = cfg.par_cycles;
  pc.seed = cfg.seed;
  pc.threads = cfg.threads;
  pc.bounds = cfg.bounds;
  pc.fit = cfg.fit;
  const ParMiResult res = run_par_mi(table, pc);

  StagedOutput bundle(o.out_dir);
  write_config_bundle(bundle, "impute-par", o, cfg);
  bundle.write("diagnostics.csv", [&](std::ostream& s) { write_fit_diagnostics(s, res.diagnostics); });
  for (int m = 1; m <= cfg.m; ++m) {
    bundle.write(m_file("days", m), [&](std::ostream& s) { write_par_completed(s, table, res, m, cfg.mode, cfg.bounds); });
  }
  bundle.commit();
  out << fmt::format("fitted {} participants x {} day columns, {} imputations into {}\n", table.rows(),
                     table.columns(), cfg.m, o.out_dir);
  return 0;
}

// Weekly mean steps per participant and timepoint for one completed dataset.
using WeeklyMeans = std::map<std::pair<std::string, Timepoint>, double>;

WeeklyMeans weekly_from_epochs(const Dataset& data) {
  WeeklyMeans w;
  for (const auto& s : data.series) w[{s->participant_id(), s->timepoint()}] = mean_daily_steps(*s);
  return w;
}

WeeklyMeans weekly_from_days(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t id = t.column("participant_id"), tp = t.column("timepoint"), steps = t.column("steps");
  std::map<std::pair<std::string, Timepoint>, std::pair<double, int>> acc;
  std::vector<std::string> bad;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto tpv = parse_timepoint(row[tp]);
    char* end = nullptr;
    const double v = std::strtod(row[steps].c_str(), &end);
    if (!tpv || end == row[steps].c_str() || *end != '\0' || !std::isfinite(v)) {
      bad.push_back(fmt::format("{}:{}: malformed day row", path.string(), r + 2));
      continue;
    }
    auto& a = acc[{row[id], *tpv}];
    a.first += v;
    a.second += 1;
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));
  WeeklyMeans w;
  for (const auto& [k, a] : acc) w[k] = a.first / a.second;
  return w;
}

struct FitRow {
  int m = 1;
  Coefficient coef;
  std::size_t n = 0;
};

std::vector<FitRow> analyse_weekly(const WeeklyMeans& w, const std::vector<Participant>& participants, int m,
                                   const PipelineConfig& cfg) {
  bool any_followup = false;
  for (const auto& [k, v] : w) any_followup |= k.second == Timepoint::followup;
  std::vector<double> fu, base;
  std::vector<Arm> arms;
  std::vector<std::string> practice;
  for (const auto& p : participants) {
    if (cfg.model == "trial") {
      const auto a = w.find({p.id, Timepoint::followup});
      const auto b = w.find({p.id, Timepoint::baseline});
      if (a == w.end() || b == w.end()) continue;
      fu.push_back(a->second);
      base.push_back(b->second);
      practice.push_back(p.practice);
    } else {
      const auto a = w.find({p.id, any_followup ? Timepoint::followup : Timepoint::baseline});
      if (a == w.end()) continue;
      fu.push_back(a->second);
    }
    arms.push_back(p.arm);
  }
  std::vector<Coefficient> coefs;
  if (cfg.model == "trial") {
    if (fu.empty()) throw InvalidArgument("the trial model needs participants observed at both timepoints");
    std::span<const std::string> labels;
    if (cfg.practice) {
      if (std::any_of(practice.begin(), practice.end(), [](const std::string& s) { return s.empty(); })) {
        throw InvalidArgument("practice dummies requested but some participants have no practice label");
      }
      labels = practice;
    }
    coefs = fit_trial_model(fu, base, arms, labels);
    for (auto& c : arm_correlations(fu, base, arms)) coefs.push_back(std::move(c));
  } else {
    coefs = fit_arm_means(fu, arms);
  }
  std::vector<FitRow> rows;
  for (auto& c : coefs) rows.push_back({m, std::move(c), fu.size()});
  return rows;
}

int cmd_analyze(const Options& o, const Flags& f, std::ostream& out) {
  const PipelineConfig cfg = effective_pipeline(o, f);
  if (o.epochs.empty() == o.imputed.empty()) throw ConfigError("analyze needs exactly one of --epochs or --imputed");
  const std::vector<Participant> participants = read_participants(o.participants);
  std::vector<FitRow> rows;
  if (!o.epochs.empty()) {
    rows = analyse_weekly(weekly_from_epochs(ingest(o.epochs, o.participants)), participants, 1, cfg);
  } else {
    const fs::path dir(o.imputed);
    bool epoch_files = fs::exists(dir / m_file("completed", 1));
    bool day_files = fs::exists(dir / m_file("days", 1));
    if (epoch_files == day_files) {
      throw ConfigError(fmt::format("{} holds no (or ambiguous) completed_mNN.csv / days_mNN.csv files", o.imputed));
    }
    for (int m = 1;; ++m) {
      const fs::path p = dir / m_file(epoch_files ? "completed" : "days", m);
      if (!fs::exists(p)) break;
      const WeeklyMeans w = epoch_files ? weekly_from_epochs(ingest(p, o.participants)) : weekly_from_days(p);
      for (auto& r : analyse_weekly(w, participants, m, cfg)) rows.push_back(std::move(r));
    }
  }
  StagedOutput bundle(o.out_dir);
  write_config_bundle(bundle, "analyze", o, cfg);
  bundle.write("fits.csv", [&](std::ostream& s) {
    s << "m,term,estimate,se,n\n";
    for (const auto& r : rows) {
      s << fmt::format("{},{},{},{},{}\n", r.m, r.coef.term, format_number(r.coef.estimate), format_number(r.coef.se),
                       r.n);
    }
  });
  bundle.commit();
  out << fmt::format("wrote {} coefficient rows to {}\n", rows.size(), o.out_dir);
  return 0;
}

int cmd_pool(const Options& o, const Flags& f, std::ostream& out) {
  const PipelineConfig cfg = effective_pipeline(o, f);
  const CsvTable t = read_csv(o.fits);
  const std::size_t cm = t.column("m"), ct = t.column("term"), ce = t.column("estimate"), cs = t.column("se");
  struct Term {
    std::map<int, std::pair<double, double>> by_m;
  };
  std::vector<std::string> order;
  std::map<std::string, Term> terms;
  std::vector<std::string> bad;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    char* e1 = nullptr;
    char* e2 = nullptr;
    const long m = std::strtol(row[cm].c_str(), &e1, 10);
    const double est = std::strtod(row[ce].c_str(), &e2);
    const double se = row[cs] == "NA" ? kNaN : std::strtod(row[cs].c_str(), nullptr);
    if (*e1 != '\0' || *e2 != '\0' || m < 1) {
      bad.push_back(fmt::format("{}:{}: malformed fit row", o.fits, r + 2));
      continue;
    }
    if (!terms.contains(row[ct])) order.push_back(row[ct]);
    if (!terms[row[ct]].by_m.emplace(static_cast<int>(m), std::make_pair(est, se)).second) {
      bad.push_back(fmt::format("{}:{}: duplicate term {} for m = {}", o.fits, r + 2, row[ct], m));
    }
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));

  StagedOutput bundle(o.out_dir);
  write_config_bundle(bundle, "pool", o, cfg);
  bundle.write("pooled.csv", [&](std::ostream& s) {
    s << "term,estimate,se,ci_lower,ci_upper,df,within_var,between_var,total_var,m\n";
    for (const auto& name : order) {
      const auto& by_m = terms.at(name).by_m;
      std::vector<double> est, var;
      bool has_se = true;
      for (const auto& [m, v] : by_m) {
        est.push_back(v.first);
        var.push_back(v.second * v.second);
        has_se &= !std::isnan(v.second);
      }
      if (!has_se) {
        // Descriptive terms (correlations) are reported from the first imputation.
        s << fmt::format("{},{},NA,NA,NA,NA,NA,NA,NA,{}\n", name, format_number(est.front()), est.size());
        continue;
      }
      PooledResult p;
      if (est.size() >= 2) {
        p = rubin_pool(est, var);
      } else {
        p = {est[0], var[0], 0.0, var[0], std::sqrt(var[0]), std::numeric_limits<double>::infinity(), 1};
      }
      const ConfidenceInterval ci = confidence_interval(p, cfg.level, cfg.interval);
      s << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", name, format_number(p.estimate), format_number(p.se),
                       format_number(ci.lower), format_number(ci.upper),
                       std::isinf(p.df) ? std::string("Inf") : format_number(p.df), format_number(p.within_var),
                       format_number(p.between_var), format_number(p.total_var), p.m);
    }
  });
  bundle.commit();
  out << fmt::format("pooled {} terms into {}\n", order.size(), o.out_dir);
  return 0;
}

ScenarioConfig effective_scenario(const Options& o, const Flags& f) {
  ScenarioConfig cfg = o.config.empty() ? ScenarioConfig{} : read_scenario_config(o.config);
  if (given(f.seed)) cfg.master_seed = o.seed;
  if (given(f.m)) cfg.m = o.m;
  if (given(f.replications)) cfg.replications = o.replications;
  if (given(f.library_size)) cfg.library_size = o.library_size;
  cfg.threads = given(f.threads) ? o.threads : 1;
  cfg.validate();
  return cfg;
}

int cmd_simulate(const Options& o, const Flags& f, std::ostream& out) {
  if (o.config.empty()) throw ConfigError("simulate needs --scenario");
  const ScenarioConfig cfg = effective_scenario(o, f);
  const ScenarioResult result = run_scenario(cfg);
  StagedOutput bundle(o.out_dir);
  bundle.write("config.ini", [&](std::ostream& s) {
    s << "# wearmi simulate\n# scenario = " << o.config << '\n';
    write_scenario_config(s, cfg);
  });
  bundle.write("summary.csv", [&](std::ostream& s) { write_scenario_summary(s, result); });
  bundle.write("estimates.csv", [&](std::ostream& s) { write_replicate_estimates(s, result); });
  bundle.write("plot_data.csv", [&](std::ostream& s) { write_plot_data(s, result); });
  bundle.commit();
  int failed = 0;
  for (const auto& row : result.summary) failed += row.n_failed;
  out << fmt::format("{}: {} replicates, {} failed method-estimand results, written to {}\n", cfg.name,
                     cfg.replications, failed, o.out_dir);
  return 0;
}

std::vector<MissingnessPattern> library_for(const ScenarioConfig& cfg) {
  if (!cfg.pattern_library.empty()) return read_pattern_library(cfg.pattern_library);
  return build_pattern_library(cfg.profile, cfg.regime, cfg.library_size, cfg.library_seed, cfg.classifier);
}

int cmd_generate(const Options& o, const Flags& f, std::ostream& out) {
  require_seed(o, f, "generate");
  ScenarioConfig cfg = o.config.empty() ? ScenarioConfig{} : read_scenario_config(o.config);
  cfg.master_seed = o.seed;
  if (given(f.library_size)) cfg.library_size = o.library_size;
  cfg.prop_pattern = o.prop_pattern;
  cfg.n_per_arm = o.n_per_arm;
  cfg.timepoints = o.timepoints;
  cfg.profile.validate();
  if (o.timepoints != 1 && o.timepoints != 2) throw ConfigError("--timepoints must be 1 or 2");
  if (o.n_per_arm < 1) throw ConfigError("--n-per-arm must be positive");
  if (!(o.prop_pattern >= 0.0 && o.prop_pattern <= 1.0)) throw ConfigError("--prop-pattern must lie in [0, 1]");

  StagedOutput bundle(o.out_dir);
  auto write_config = [&] {
    bundle.write("config.ini", [&](std::ostream& s) {
      s << "# wearmi generate\n";
      if (!o.config.empty()) s << "# config = " << o.config << '\n';
      s << "# library_only = " << (o.library_only ? "true" : "false") << '\n';
      write_scenario_config(s, cfg);
    });
  };

  if (o.library_only) {
    cfg.library_seed = o.seed;
    cfg.pattern_library.clear();
    const auto lib = library_for(cfg);
    write_config();
    bundle.write("patterns.csv", [&](std::ostream& s) { write_pattern_library(s, lib); });
    bundle.commit();
    out << fmt::format("wrote {} patterns to {}\n", lib.size(), o.out_dir);
    return 0;
  }

  std::vector<Timepoint> tps;
  if (o.timepoints == 2) tps.push_back(Timepoint::baseline);
  tps.push_back(Timepoint::followup);
  GeneratedDataset gen = generate_complete_dataset(cfg.profile, o.n_per_arm, tps, derive_seed(o.seed, {kTagGenerate}));
  if (o.prop_pattern > 0.0) {
    const auto lib = library_for(cfg);
    if (lib.empty()) throw ConfigError("pattern library is empty");
    Engine rng = make_stream(o.seed, {kTagInduce});
    const std::size_t n = gen.dataset.series.size();
    const auto k = static_cast<std::size_t>(std::llround(o.prop_pattern * static_cast<double>(n)));
    for (std::size_t i : bootstrap_without_replacement(n, k, rng)) {
      const EpochSeries& s = *gen.dataset.series[i];
      const auto& pattern = lib[uniform_index(rng, lib.size())];
      gen.dataset.series[i] = std::make_shared<const EpochSeries>(apply_pattern(s, pattern, classify_series(s, cfg.classifier)));
    }
  }
  write_config();
  bundle.write("participants.csv", [&](std::ostream& s) { write_participants(s, gen.dataset.participants); });
  bundle.write("epochs.csv", [&](std::ostream& s) { write_epochs(s, gen.dataset, false); });
  bundle.write("truth.csv", [&](std::ostream& s) {
    s << "quantity,value\n";
    for (Arm a : kArms) {
      const auto k = static_cast<std::size_t>(a);
      if (o.timepoints == 2) s << fmt::format("baseline_mean_{},{}\n", to_string(a), format_number(gen.truth.arm_mean_baseline[k]));
      s << fmt::format("followup_mean_{},{}\n", to_string(a), format_number(gen.truth.arm_mean_followup[k]));
    }
    const char* names[] = {"intercept", "baseline", "postal", "nurse"};
    for (std::size_t j = 0; j < gen.truth.regression.size() && j < 4; ++j) {
      s << fmt::format("coef_{},{}\n", names[j], format_number(gen.truth.regression[j]));
    }
  });
  bundle.commit();
  out << fmt::format("generated {} participants, {} series into {}\n", gen.dataset.participants.size(),
                     gen.dataset.series.size(), o.out_dir);
  return 0;
}

nlohmann::json error_report(const std::string& command, const std::string& code, const std::string& message) {
  return {{"status", "error"}, {"command", command}, {"error", code}, {"message", message}};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Classification and multiple imputation of missing wearable step-count data", "wearmi"};
  app.require_subcommand(1);
  Options o;
  Flags f;

  auto inputs = [&](CLI::App* sub, bool needs_epochs) {
    auto* e = sub->add_option("--epochs", o.epochs, "Epoch table")->check(CLI::ExistingFile);
    if (needs_epochs) e->required();
    sub->add_option("--participants", o.participants, "Participant table")->required()->check(CLI::ExistingFile);
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", o.out_dir, "Output directory")->required();
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* classify = app.add_subcommand("classify", "Classify zero-count periods and derive missing intervals");
  inputs(classify, true);
  common(classify);

  auto* np = app.add_subcommand("impute-np", "Donor-based multiple imputation of missing epochs");
  inputs(np, true);
  common(np);
  auto* np_seed = np->add_option("--seed", o.seed, "Random seed");
  auto* np_m = np->add_option("--m", o.m, "Number of imputations");
  auto* np_scope = np->add_option("--arm-scope", o.arm_scope, "Donor pool: same arm or all arms");

  auto* par = app.add_subcommand("impute-par", "Chained interval-censored regression imputation of daily totals");
  inputs(par, true);
  common(par);
  auto* par_seed = par->add_option("--seed", o.seed, "Random seed");
  auto* par_m = par->add_option("--m", o.m, "Number of imputations");
  auto* par_mode = par->add_option("--mode", o.mode, "Upper bounds: specific or generic");

  auto* analyze = app.add_subcommand("analyze", "Fit the analysis model to each completed dataset");
  inputs(analyze, false);
  common(analyze);
  analyze->add_option("--imputed", o.imputed, "Output directory of impute-np or impute-par")->check(CLI::ExistingDirectory);
  auto* an_model = analyze->add_option("--model", o.model, "arm_means or trial");

  auto* pool = app.add_subcommand("pool", "Combine per-imputation fits with Rubin's rules");
  pool->add_option("--fits", o.fits, "fits.csv from analyze")->required()->check(CLI::ExistingFile);
  common(pool);

  auto* simulate = app.add_subcommand("simulate", "Run a simulation scenario");
  simulate->add_option("--scenario", o.config, "Scenario file")->check(CLI::ExistingFile);
  simulate->add_option("--out-dir", o.out_dir, "Output directory")->required();
  auto* sim_threads = simulate->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  auto* sim_seed = simulate->add_option("--seed", o.seed, "Overrides master_seed");
  auto* sim_m = simulate->add_option("--m", o.m, "Overrides m");
  auto* sim_reps = simulate->add_option("--replications", o.replications, "Overrides replications");

  auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset or pattern library");
  generate->add_option("--config", o.config, "Scenario file supplying profile and regime settings")
      ->check(CLI::ExistingFile);
  generate->add_option("--out-dir", o.out_dir, "Output directory")->required();
  auto* gen_seed = generate->add_option("--seed", o.seed, "Random seed");
  generate->add_option("--n-per-arm", o.n_per_arm, "Participants per arm");
  generate->add_option("--timepoints", o.timepoints, "1 (follow-up) or 2 (baseline and follow-up)");
  generate->add_option("--prop-pattern", o.prop_pattern, "Share of series given a missingness pattern");
  generate->add_flag("--library-only", o.library_only, "Write a pattern library instead of a dataset");
  auto* gen_lib = generate->add_option("--library-size", o.library_size, "Patterns in the library");
  // --threads is accepted everywhere for uniform pipelines; generation is sequential.
  generate->add_option("--threads", o.threads, "Ignored")->check(CLI::PositiveNumber);

  auto threads_of = [](CLI::App* sub) { return sub->get_option("--threads"); };
  std::string command = "wearmi";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_report(command, "UsageError", e.what()).dump() << '\n';
    return 2;
  }

  try {
    if (*classify) {
      command = "classify";
      f.threads = threads_of(classify);
      return cmd_classify(o, f, out);
    }
    if (*np) {
      command = "impute-np";
      f.threads = threads_of(np);
      f.seed = np_seed;
      f.m = np_m;
      f.arm_scope = np_scope;
      return cmd_impute_np(o, f, out);
    }
    if (*par) {
      command = "impute-par";
      f.threads = threads_of(par);
      f.seed = par_seed;
      f.m = par_m;
      f.mode = par_mode;
      return cmd_impute_par(o, f, out);
    }
    if (*analyze) {
      command = "analyze";
      f.threads = threads_of(analyze);
      f.model = an_model;
      return cmd_analyze(o, f, out);
    }
    if (*pool) {
      command = "pool";
      f.threads = threads_of(pool);
      return cmd_pool(o, f, out);
    }
    if (*simulate) {
      command = "simulate";
      f.seed = sim_seed;
      f.m = sim_m;
      f.threads = sim_threads;
      f.replications = sim_reps;
      return cmd_simulate(o, f, out);
    }
    if (*generate) {
      command = "generate";
      f.seed = gen_seed;
      f.library_size = gen_lib;
      return cmd_generate(o, f, out);
    }
  } catch (const DataError& e) {
    nlohmann::json j = error_report(command, e.code(), e.what());
    j["violations"] = e.violations();
    err << j.dump() << '\n';
    return 1;
  } catch (const Error& e) {
    err << error_report(command, e.code(), e.what()).dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << error_report(command, "InternalError", e.what()).dump() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace wearmi::cli
