#include "wearmi/impute_np.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "wearmi/errors.hpp"

namespace wearmi {

namespace {

// Stream tags keep the per-interval, per-imputation and whole-week streams
// apart even when their numeric keys coincide.
constexpr std::uint64_t kTagSelf = 0x5e1f;
constexpr std::uint64_t kTagSelect = 0x5e1ec7;
constexpr std::uint64_t kTagDonorDays = 0xd0d0;
constexpr std::uint64_t kTagWeek = 0x77ee;

std::vector<int> overlap_free_days(const EpochSeries& s, int p, int q) {
  std::vector<int> days;
  for (const auto& d : s.days()) {
    if (!has_missing(d, p, q)) days.push_back(d.day_index);
  }
  return days;
}

bool fully_observed(const EpochSeries& s) {
  for (const auto& d : s.days()) {
    if (d.count_mask(EpochMask::missing) > 0) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(PoolKind k) {
  switch (k) {
    case PoolKind::self: return "self";
    case PoolKind::nonself: return "nonself";
    case PoolKind::whole_week: return "whole_week";
  }
  return "?";
}

std::string_view to_string(MatchVar v) {
  switch (v) {
    case MatchVar::age: return "age";
    case MatchVar::bmi: return "bmi";
    case MatchVar::baseline_mean_steps: return "baseline_mean_steps";
    case MatchVar::baseline_mean_weartime: return "baseline_mean_weartime";
  }
  return "?";
}

std::optional<MatchVar> parse_match_var(std::string_view s) {
  for (MatchVar v : {MatchVar::age, MatchVar::bmi, MatchVar::baseline_mean_steps, MatchVar::baseline_mean_weartime}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

bool has_missing(const DayRecord& day, int epoch_start, int epoch_end) {
  const auto first = day.mask.begin() + epoch_start;
  const auto last = day.mask.begin() + epoch_end;
  return std::find(first, last, EpochMask::missing) != last;
}

DonorPool self_donor_pool(const EpochSeries& series, std::size_t series_index,
                          const MissingInterval& interval) {
  DonorPool pool;
  pool.kind = PoolKind::self;
  for (const auto& d : series.days()) {
    if (d.day_index == interval.day_index) continue;
    if (has_missing(d, interval.epoch_start, interval.epoch_end)) continue;
    pool.entries.push_back({series_index, series.participant_id(), d.day_index});
  }
  return pool;
}

std::vector<double> match_values(const Participant& p, std::span<const MatchVar> vars) {
  std::vector<double> x;
  x.reserve(vars.size());
  for (MatchVar v : vars) {
    switch (v) {
      case MatchVar::age: x.push_back(p.age); break;
      case MatchVar::bmi: x.push_back(p.bmi); break;
      case MatchVar::baseline_mean_steps:
        if (!p.baseline_mean_steps) throw InvalidArgument("participant " + p.id + " has no baseline mean steps");
        x.push_back(*p.baseline_mean_steps);
        break;
      case MatchVar::baseline_mean_weartime:
        if (!p.baseline_mean_weartime) {
          throw InvalidArgument("participant " + p.id + " has no baseline mean wear time");
        }
        x.push_back(*p.baseline_mean_weartime);
        break;
    }
  }
  return x;
}

std::vector<double> mahalanobis_distances(const Participant& target, std::span<const Participant> pool,
                                          std::span<const MatchVar> vars) {
  if (pool.empty()) throw InvalidArgument("mahalanobis_distances: empty pool");
  if (vars.empty()) throw InvalidArgument("mahalanobis_distances: no matching variables");
  const Eigen::Index p = static_cast<Eigen::Index>(vars.size());
  const Eigen::Index n = static_cast<Eigen::Index>(pool.size()) + 1;
  Eigen::MatrixXd X(n, p);
  X.row(0) = Eigen::Map<const Eigen::VectorXd>(match_values(target, vars).data(), p).transpose();
  for (Eigen::Index i = 1; i < n; ++i) {
    const auto x = match_values(pool[static_cast<std::size_t>(i - 1)], vars);
    X.row(i) = Eigen::Map<const Eigen::VectorXd>(x.data(), p).transpose();
  }
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mean;
  Eigen::MatrixXd S = (centered.transpose() * centered) / static_cast<double>(n - 1);

  std::vector<double> d(pool.size(), 0.0);
  const double trace = S.trace();
  if (!(trace > 0.0)) return d;  // every member identical to the target

  auto invertible = [](const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return ev.minCoeff() > 1e-12 * ev.maxCoeff() && ev.minCoeff() > 0.0;
  };
  if (!invertible(S)) {
    S.diagonal().array() += 1e-8 * trace / static_cast<double>(p);
    if (!invertible(S)) throw SingularCovariance("covariance of matching variables is singular");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw SingularCovariance("covariance factorization failed");
  for (Eigen::Index i = 1; i < n; ++i) {
    const Eigen::VectorXd diff = (X.row(i) - X.row(0)).transpose();
    const double q = diff.dot(llt.solve(diff));
    d[static_cast<std::size_t>(i - 1)] = std::sqrt(std::max(q, 0.0));
  }
  return d;
}

std::vector<double> weights_from_distances(std::span<const double> distances) {
  std::vector<double> w(distances.size(), 0.0);
  const auto zeros = std::count(distances.begin(), distances.end(), 0.0);
  if (zeros > 0) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (distances[i] == 0.0) w[i] = 1.0 / static_cast<double>(zeros);
    }
    return w;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = 1.0 / distances[i];
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> mahalanobis_weights(const Participant& target, std::span<const Participant> pool,
                                        std::span<const MatchVar> vars) {
  if (pool.size() == 1) return {1.0};
  return weights_from_distances(mahalanobis_distances(target, pool, vars));
}

NonselfSelection select_nonself_donor(const Participant& target, const MissingInterval& interval,
                                      std::span<const DonorCandidate> candidates,
                                      std::span<const MatchVar> vars, Engine& rng,
                                      bool allow_relaxation) {
  const int p = interval.epoch_start;
  const int q = interval.epoch_end;
  std::vector<std::vector<int>> free_days(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].participant.id == target.id) continue;
    free_days[i] = overlap_free_days(*candidates[i].series, p, q);
  }

  auto filter = [&](bool need_sex, std::size_t min_days) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i].participant.id == target.id) continue;
      if (need_sex && candidates[i].participant.sex != target.sex) continue;
      if (free_days[i].size() < min_days) continue;
      idx.push_back(i);
    }
    return idx;
  };

  int level = 0;
  std::vector<std::size_t> eligible = filter(true, kDaysPerWeek);
  if (eligible.empty() && allow_relaxation) {
    level = 1;
    eligible = filter(true, 1);
    if (eligible.empty()) {
      level = 2;
      eligible = filter(false, 1);
    }
  }
  if (eligible.empty()) {
    throw EmptyDonorPool(fmt::format("no non-self donor for {} day {} epochs [{}, {})", target.id,
                                     interval.day_index, p, q));
  }

  std::vector<Participant> pool;
  pool.reserve(eligible.size());
  for (std::size_t i : eligible) pool.push_back(candidates[i].participant);
  NonselfSelection sel;
  sel.weights = mahalanobis_weights(target, pool, vars);
  sel.pool_size = eligible.size();
  sel.relaxation = level;
  const std::size_t pick = eligible.size() == 1 ? 0 : sample_weighted(rng, sel.weights);
  sel.candidate = eligible[pick];
  sel.usable_days = free_days[sel.candidate];
  return sel;
}

IntervalImputation impute_interval(const EpochSeries& target_series, std::size_t target_index,
                                   const Participant& target, const MissingInterval& interval,
                                   int interval_ordinal, const NpContext& ctx) {
  if (ctx.m < 1) throw InvalidArgument("number of imputations must be positive");
  const std::uint64_t pid = stable_hash(target.id);
  const auto tp = static_cast<std::uint64_t>(target_series.timepoint());
  const auto ord = static_cast<std::uint64_t>(interval_ordinal);

  IntervalImputation out;
  out.draws.reserve(static_cast<std::size_t>(ctx.m));
  const DonorPool self = self_donor_pool(target_series, target_index, interval);
  if (static_cast<int>(self.size()) > ctx.self_pool_threshold) {
    out.kind = PoolKind::self;
    out.pool_size = self.size();
    for (int m = 1; m <= ctx.m; ++m) {
      Engine rng = make_stream(ctx.seed, {pid, tp, ord, kTagSelf, static_cast<std::uint64_t>(m)});
      const auto& e = self.entries[uniform_index(rng, self.size())];
      out.draws.push_back({e.series_index, e.donor_id, e.day_index});
    }
    return out;
  }

  Engine select_rng = make_stream(ctx.seed, {pid, tp, ord, kTagSelect});
  const NonselfSelection sel =
      select_nonself_donor(target, interval, ctx.candidates, ctx.vars, select_rng, ctx.allow_relaxation);
  const DonorCandidate& donor = ctx.candidates[sel.candidate];
  out.kind = PoolKind::nonself;
  out.pool_size = sel.pool_size;
  out.relaxation = sel.relaxation;
  for (int m = 1; m <= ctx.m; ++m) {
    Engine rng = make_stream(ctx.seed, {pid, tp, ord, kTagDonorDays, static_cast<std::uint64_t>(m)});
    const int day = sel.usable_days[uniform_index(rng, sel.usable_days.size())];
    out.draws.push_back({donor.series_index, donor.participant.id, day});
  }
  return out;
}

std::vector<WeekDraw> impute_whole_week(const EpochSeries& target_series, const Participant& target,
                                        std::span<const DonorCandidate> complete_donors,
                                        std::span<const MatchVar> vars, int m, std::uint64_t seed,
                                        bool allow_relaxation) {
  if (m < 1) throw InvalidArgument("number of imputations must be positive");
  std::vector<std::size_t> eligible;
  for (bool need_sex : {true, false}) {
    for (std::size_t i = 0; i < complete_donors.size(); ++i) {
      const auto& c = complete_donors[i];
      if (c.participant.id == target.id) continue;
      if (need_sex && c.participant.sex != target.sex) continue;
      eligible.push_back(i);
    }
    if (!eligible.empty() || !allow_relaxation) break;
  }
  if (eligible.empty()) throw EmptyDonorPool("no complete donor for whole-week imputation of " + target.id);

  std::vector<Participant> pool;
  pool.reserve(eligible.size());
  for (std::size_t i : eligible) pool.push_back(complete_donors[i].participant);
  const std::vector<double> w = mahalanobis_weights(target, pool, vars);

  const std::uint64_t pid = stable_hash(target.id);
  const auto tp = static_cast<std::uint64_t>(target_series.timepoint());
  std::vector<WeekDraw> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int k = 1; k <= m; ++k) {
    Engine rng = make_stream(seed, {pid, tp, kTagWeek, static_cast<std::uint64_t>(k)});
    const auto& donor = complete_donors[eligible[eligible.size() == 1 ? 0 : sample_weighted(rng, w)]];
    std::vector<int> weekdays, weekend;
    for (const auto& d : donor.series->days()) {
      (is_weekend(d.day_of_week) ? weekend : weekdays).push_back(d.day_index);
    }
    WeekDraw draw;
    draw.donor_series = donor.series_index;
    draw.donor_id = donor.participant.id;
    for (const auto& d : target_series.days()) {
      const auto& src = is_weekend(d.day_of_week) ? weekend : weekdays;
      if (src.empty()) throw EmptyDonorPool("donor " + donor.participant.id + " lacks a matching day type");
      draw.donor_days[static_cast<std::size_t>(d.day_index - 1)] = src[uniform_index(rng, src.size())];
    }
    out.push_back(std::move(draw));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ImputationSet

ImputationSet::ImputationSet(std::shared_ptr<const Dataset> source, int m_count,
                             std::vector<ProvenanceRecord> provenance)
    : source_(std::move(source)), m_count_(m_count), provenance_(std::move(provenance)) {
  std::sort(provenance_.begin(), provenance_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.m, a.series_index, a.day_index, a.epoch_start) <
           std::tie(b.m, b.series_index, b.day_index, b.epoch_start);
  });
  index_.assign(static_cast<std::size_t>(m_count_),
                std::vector<std::vector<std::size_t>>(source_->series.size()));
  for (std::size_t i = 0; i < provenance_.size(); ++i) {
    const auto& r = provenance_[i];
    if (r.m < 1 || r.m > m_count_ || r.series_index >= source_->series.size()) {
      throw InvalidArgument("provenance record out of range");
    }
    index_[static_cast<std::size_t>(r.m - 1)][r.series_index].push_back(i);
  }
}

std::vector<const ProvenanceRecord*> ImputationSet::records(int m, std::size_t series_index) const {
  std::vector<const ProvenanceRecord*> out;
  for (std::size_t i : index_.at(static_cast<std::size_t>(m - 1)).at(series_index)) {
    out.push_back(&provenance_[i]);
  }
  return out;
}

EpochSeries ImputationSet::completed_series(std::size_t series_index, int m) const {
  EpochSeries s = *source_->series.at(series_index);
  for (const ProvenanceRecord* r : records(m, series_index)) {
    const DayRecord& src = source_->series[r->donor_series]->day(r->donor_day);
    DayRecord& dst = s.day_mut(r->day_index);
    for (int e = r->epoch_start; e < r->epoch_end; ++e) {
      const auto k = static_cast<std::size_t>(e);
      dst.vm[k] = src.vm[k];
      dst.steps[k] = src.steps[k];
      dst.mask[k] = EpochMask::imputed;
    }
  }
  return s;
}

Dataset ImputationSet::completed(int m) const {
  if (m < 1 || m > m_count_) throw InvalidArgument("imputation index out of range");
  Dataset out;
  out.participants = source_->participants;
  out.series = source_->series;
  for (std::size_t i = 0; i < out.series.size(); ++i) {
    if (index_[static_cast<std::size_t>(m - 1)][i].empty()) continue;
    out.series[i] = std::make_shared<EpochSeries>(completed_series(i, m));
  }
  return out;
}

std::array<double, kDaysPerWeek> ImputationSet::daily_totals(std::size_t series_index, int m) const {
  const EpochSeries& s = *source_->series.at(series_index);
  std::array<double, kDaysPerWeek> totals{};
  for (const auto& d : s.days()) totals[static_cast<std::size_t>(d.day_index - 1)] = static_cast<double>(d.observed_steps());
  for (const ProvenanceRecord* r : records(m, series_index)) {
    const DayRecord& src = source_->series[r->donor_series]->day(r->donor_day);
    std::int64_t add = 0;
    for (int e = r->epoch_start; e < r->epoch_end; ++e) add += src.steps[static_cast<std::size_t>(e)];
    totals[static_cast<std::size_t>(r->day_index - 1)] += static_cast<double>(add);
  }
  return totals;
}

double ImputationSet::weekly_mean(std::size_t series_index, int m) const {
  const auto t = daily_totals(series_index, m);
  return std::accumulate(t.begin(), t.end(), 0.0) / kDaysPerWeek;
}

// ---------------------------------------------------------------------------
// Full run

namespace {

struct TimepointRun {
  std::vector<ProvenanceRecord> records;
  std::vector<std::string> failures;
};

std::vector<ProvenanceRecord> impute_series(const Dataset& marked, const SeriesClassification& c,
                                            const Participant& target,
                                            std::span<const DonorCandidate> candidates,
                                            std::span<const DonorCandidate> complete_donors,
                                            std::span<const MatchVar> vars,
                                            std::span<const MatchVar> week_vars, const NpConfig& cfg) {
  const EpochSeries& series = *marked.series[c.series_index];
  std::vector<ProvenanceRecord> out;
  if (c.whole_week) {
    const auto weeks = impute_whole_week(series, target, complete_donors, week_vars, cfg.m, cfg.seed,
                                         cfg.allow_relaxation);
    std::size_t pool = 0;
    for (const auto& d : complete_donors) pool += d.participant.id != target.id;
    for (int m = 1; m <= cfg.m; ++m) {
      const WeekDraw& w = weeks[static_cast<std::size_t>(m - 1)];
      for (int day = 1; day <= kDaysPerWeek; ++day) {
        out.push_back({m, c.series_index, target.id, series.timepoint(), day, 0, kEpochsPerDay,
                       w.donor_series, w.donor_id, w.donor_days[static_cast<std::size_t>(day - 1)],
                       PoolKind::whole_week, pool, 0});
      }
    }
    return out;
  }
  NpContext ctx{candidates, vars, cfg.m, cfg.self_pool_threshold, cfg.allow_relaxation, cfg.seed};
  for (std::size_t k = 0; k < c.intervals.size(); ++k) {
    const MissingInterval& iv = c.intervals[k];
    const auto imp = impute_interval(series, c.series_index, target, iv, static_cast<int>(k), ctx);
    for (int m = 1; m <= cfg.m; ++m) {
      const IntervalDraw& d = imp.draws[static_cast<std::size_t>(m - 1)];
      out.push_back({m, c.series_index, target.id, series.timepoint(), iv.day_index, iv.epoch_start,
                     iv.epoch_end, d.donor_series, d.donor_id, d.donor_day, imp.kind, imp.pool_size,
                     imp.relaxation});
    }
  }
  return out;
}

// Imputes every series at one timepoint. `covariates(m)` gives the matching
// covariates in force for imputation m; when it returns the same table for
// every m a single run serves all imputations.
TimepointRun run_timepoint(const Dataset& marked, std::span<const SeriesClassification> classification,
                           Timepoint tp, const std::vector<Participant>& covariates,
                           std::span<const MatchVar> vars, std::span<const MatchVar> week_vars,
                           const NpConfig& cfg) {
  std::map<std::string, const Participant*, std::less<>> by_id;
  for (const auto& p : covariates) by_id[p.id] = &p;

  // Candidates per arm, in dataset order.
  std::map<Arm, std::vector<DonorCandidate>> candidates, complete;
  std::vector<std::size_t> targets;
  for (const auto& c : classification) {
    if (c.timepoint != tp) continue;
    const auto it = by_id.find(c.participant_id);
    if (it == by_id.end()) throw InvalidArgument("no covariates for participant " + c.participant_id);
    const EpochSeries* s = marked.series[c.series_index].get();
    DonorCandidate cand{c.series_index, *it->second, s};
    const Arm scope = cfg.same_arm ? c.arm : Arm::control;
    candidates[scope].push_back(cand);
    if (fully_observed(*s)) complete[scope].push_back(cand);
    if (!c.intervals.empty()) targets.push_back(static_cast<std::size_t>(&c - classification.data()));
  }

  std::vector<std::vector<ProvenanceRecord>> results(targets.size());
  std::vector<std::string> errors(targets.size());
  parallel_for(targets.size(), cfg.threads, [&](std::size_t k) {
    const auto& c = classification[targets[k]];
    try {
      const Arm scope = cfg.same_arm ? c.arm : Arm::control;
      const auto done = complete.find(scope);
      results[k] = impute_series(marked, c, *by_id.at(c.participant_id), candidates.at(scope),
                                 done == complete.end() ? std::vector<DonorCandidate>{} : done->second, vars,
                                 week_vars, cfg);
    } catch (const Error& e) {
      errors[k] = fmt::format("{} ({}): {}", c.participant_id, to_string(tp), e.what());
    }
  });

  TimepointRun run;
  for (auto& r : results) run.records.insert(run.records.end(), std::make_move_iterator(r.begin()),
                                             std::make_move_iterator(r.end()));
  for (auto& e : errors) {
    if (!e.empty()) run.failures.push_back(std::move(e));
  }
  return run;
}

std::vector<MatchVar> followup_vars(const NpConfig& cfg, bool with_baseline) {
  std::vector<MatchVar> v = cfg.vars;
  if (with_baseline) {
    for (MatchVar extra : {MatchVar::baseline_mean_steps, MatchVar::baseline_mean_weartime}) {
      if (std::find(v.begin(), v.end(), extra) == v.end()) v.push_back(extra);
    }
  }
  return v;
}

}  // namespace

std::vector<BaselineSummary> baseline_summaries(const ImputationSet& set,
                                                std::span<const SeriesClassification> classification) {
  std::vector<BaselineSummary> out;
  for (const auto& c : classification) {
    if (c.timepoint != Timepoint::baseline) continue;
    BaselineSummary s;
    s.participant_id = c.participant_id;
    for (int m = 1; m <= set.m_count(); ++m) {
      s.mean_steps.push_back(set.weekly_mean(c.series_index, m));
      std::array<double, kDaysPerWeek> wear = c.weartime;
      const auto recs = set.records(m, c.series_index);
      for (const ProvenanceRecord* r : recs) {
        const auto day = static_cast<std::size_t>(r->day_index - 1);
        if (r->kind == PoolKind::whole_week) {
          wear[day] = classification[r->donor_series].weartime[static_cast<std::size_t>(r->donor_day - 1)];
        } else {
          wear[day] += r->epoch_end * kMinutesPerEpoch - r->epoch_start * kMinutesPerEpoch;
        }
      }
      for (double& w : wear) w = std::min(w, 1440.0);
      s.mean_weartime.push_back(std::accumulate(wear.begin(), wear.end(), 0.0) / kDaysPerWeek);
    }
    out.push_back(std::move(s));
  }
  return out;
}

ImputationSet run_np_mi(const Dataset& marked, std::span<const SeriesClassification> classification,
                        const NpConfig& cfg) {
  if (cfg.m < 1) throw ConfigError("number of imputations must be positive");
  if (cfg.vars.empty()) throw ConfigError("at least one matching variable is required");
  if (classification.size() != marked.series.size()) {
    throw InvalidArgument("classification does not match the dataset");
  }
  for (std::size_t i = 0; i < classification.size(); ++i) {
    if (classification[i].series_index != i) throw InvalidArgument("classification out of order");
  }

  auto source = std::make_shared<const Dataset>(marked);
  std::vector<ProvenanceRecord> records;
  std::vector<std::string> failures;

  const std::vector<MatchVar> base_vars = cfg.vars;
  const std::vector<MatchVar> base_week_vars = followup_vars(cfg, false);
  if (marked.has_timepoint(Timepoint::baseline)) {
    auto run = run_timepoint(marked, classification, Timepoint::baseline, marked.participants, base_vars,
                             base_week_vars, cfg);
    records = std::move(run.records);
    failures = std::move(run.failures);
  }

  if (marked.has_timepoint(Timepoint::followup)) {
    const bool use_baseline = cfg.match_baseline_summaries && marked.has_timepoint(Timepoint::baseline);
    if (!use_baseline) {
      auto run = run_timepoint(marked, classification, Timepoint::followup, marked.participants, base_vars,
                               base_week_vars, cfg);
      records.insert(records.end(), run.records.begin(), run.records.end());
      failures.insert(failures.end(), run.failures.begin(), run.failures.end());
    } else {
      const ImputationSet baseline_set(source, cfg.m, records);
      const auto summaries = baseline_summaries(baseline_set, classification);
      std::map<std::string, const BaselineSummary*, std::less<>> by_id;
      for (const auto& s : summaries) by_id[s.participant_id] = &s;

      // Participants without a baseline series cannot be matched on baseline
      // summaries; fall back to the base variables when any are absent.
      bool all_present = true;
      for (const auto& c : classification) {
        if (c.timepoint == Timepoint::followup && !by_id.contains(c.participant_id)) all_present = false;
      }
      const std::vector<MatchVar> fu_vars = all_present ? followup_vars(cfg, true) : base_vars;
      const std::vector<MatchVar> fu_week_vars = fu_vars;

      auto table_for = [&](int m) {
        std::vector<Participant> t = marked.participants;
        for (auto& p : t) {
          const auto it = by_id.find(p.id);
          if (it == by_id.end()) continue;
          const BaselineSummary& s = *it->second;
          if (m == 0) {
            p.baseline_mean_steps = std::accumulate(s.mean_steps.begin(), s.mean_steps.end(), 0.0) / cfg.m;
            p.baseline_mean_weartime =
                std::accumulate(s.mean_weartime.begin(), s.mean_weartime.end(), 0.0) / cfg.m;
          } else {
            p.baseline_mean_steps = s.mean_steps[static_cast<std::size_t>(m - 1)];
            p.baseline_mean_weartime = s.mean_weartime[static_cast<std::size_t>(m - 1)];
          }
        }
        return t;
      };

      if (cfg.average_baseline_summaries) {
        auto run = run_timepoint(marked, classification, Timepoint::followup, table_for(0), fu_vars,
                                 fu_week_vars, cfg);
        records.insert(records.end(), run.records.begin(), run.records.end());
        failures.insert(failures.end(), run.failures.begin(), run.failures.end());
      } else {
        // Per-imputation summaries: imputation m of follow-up uses baseline
        // imputation m, so each m is its own single-imputation run.
        for (int m = 1; m <= cfg.m; ++m) {
          auto run = run_timepoint(marked, classification, Timepoint::followup, table_for(m), fu_vars,
                                   fu_week_vars, cfg);
          for (auto& r : run.records) {
            if (r.m == m) records.push_back(std::move(r));
          }
          failures.insert(failures.end(), run.failures.begin(), run.failures.end());
        }
        std::sort(failures.begin(), failures.end());
        failures.erase(std::unique(failures.begin(), failures.end()), failures.end());
      }
    }
  }

  if (!failures.empty()) {
    std::string msg = fmt::format("{} series could not be imputed", failures.size());
    for (const auto& f : failures) msg += "\n  " + f;
    throw ImputationError(msg);
  }
  return ImputationSet(source, cfg.m, std::move(records));
}

}  // namespace wearmi
