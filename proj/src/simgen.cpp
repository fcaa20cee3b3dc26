#include "wearmi/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "wearmi/errors.hpp"
#include "wearmi/stats.hpp"

namespace wearmi {

namespace {

constexpr std::uint64_t kTagPerson = 0x9e7;
constexpr std::uint64_t kTagSeries = 0x5e7;
constexpr std::uint64_t kTagRegime = 0x7e9;
constexpr int kWindDownEpochs = 3 * kEpochsPerMinute;

// Relative walking intensity by hour of day.
constexpr std::array<double, 24> kDiurnal{0.1, 0.05, 0.05, 0.05, 0.05, 0.1, 0.4, 0.8, 1.0, 1.2, 1.3, 1.3,
                                          1.2, 1.0, 1.0,  1.1,  1.2,  1.2, 1.0, 0.8, 0.6, 0.4, 0.3, 0.2};

double normal(Engine& rng, double mean, double sd) { return mean + sd * standard_normal(rng); }
double uniform(Engine& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }
double exponential(Engine& rng, double mean) { return -mean * std::log1p(-uniform01(rng)); }

int poisson(Engine& rng, double mean) {
  const double limit = std::exp(-mean);
  int k = 0;
  double p = uniform01(rng);
  while (p > limit) {
    ++k;
    p *= uniform01(rng);
  }
  return k;
}

int hours_to_epochs(double h) { return static_cast<int>(std::lround(h * kEpochsPerHour)); }

struct Person {
  Participant participant;
  std::array<double, 2> log_level{};  // by timepoint
  double shift = 0.0;                 // follow-up additive steps
  double wake_h = 7.0;
  double bed_h = 23.0;
};

double covariate_variance(const ActivityProfile& p) {
  const double range = p.age_max - p.age_min;
  return p.age_effect * p.age_effect * range * range / 12.0 + p.bmi_effect * p.bmi_effect * p.bmi_sd * p.bmi_sd +
         p.male_effect * p.male_effect * p.prop_male * (1.0 - p.prop_male);
}

// Variance of the mean of seven mean-one day factors (five weekdays, two weekend days).
double day_mean_variance(const ActivityProfile& p) {
  const double s2 = std::log1p(p.day_cv * p.day_cv);
  const double norm = 5.0 + 2.0 * p.weekend_factor;
  const double gw = 7.0 / norm;
  const double ge = 7.0 * p.weekend_factor / norm;
  return (5.0 * gw * gw + 2.0 * ge * ge) * std::expm1(s2) / 49.0;
}

Person draw_person(const ActivityProfile& prof, const std::string& id, Arm arm, double rho, Engine& rng) {
  Person p;
  Participant& q = p.participant;
  q.id = id;
  q.arm = arm;
  q.sex = uniform01(rng) < prof.prop_male ? Sex::male : Sex::female;
  q.age = std::round(uniform(rng, prof.age_min, prof.age_max) * 10.0) / 10.0;
  do {
    q.bmi = normal(rng, prof.bmi_mean, prof.bmi_sd);
  } while (q.bmi < prof.bmi_min || q.bmi > prof.bmi_max);
  q.bmi = std::round(q.bmi * 10.0) / 10.0;

  const double covariates = prof.age_effect * (q.age - 0.5 * (prof.age_min + prof.age_max)) +
                            prof.bmi_effect * (q.bmi - prof.bmi_mean) +
                            prof.male_effect * ((q.sex == Sex::male ? 1.0 : 0.0) - prof.prop_male);
  const double s2 = covariate_variance(prof) + prof.person_sd * prof.person_sd;
  const double z0 = standard_normal(rng);
  const double z1 = rho * z0 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * standard_normal(rng);
  const double centre = std::log(prof.base_steps) - 0.5 * s2 + covariates;
  p.log_level = {centre + prof.person_sd * z0, centre + prof.person_sd * z1};
  p.shift = prof.arm_shift[static_cast<std::size_t>(arm)];
  if (arm != Arm::control) p.shift += normal(rng, 0.0, prof.arm_shift_sd);
  p.wake_h = normal(rng, prof.wake_mean_h, prof.sleep_person_sd_h);
  p.bed_h = normal(rng, prof.bed_mean_h, prof.sleep_person_sd_h);
  return p;
}

struct Schedule {
  std::array<std::int64_t, kDaysPerWeek> wake{};  // absolute epochs
  std::array<std::int64_t, kDaysPerWeek> bed{};
};

Schedule draw_schedule(const ActivityProfile& prof, const Person& person, DayOfWeek first, Engine& rng) {
  std::array<double, kDaysPerWeek> wake{}, bed{};
  for (int d = 0; d < kDaysPerWeek; ++d) {
    const bool weekend_today = is_weekend(shift_day(first, d));
    const bool weekend_tomorrow = is_weekend(shift_day(first, d + 1));
    wake[d] = std::clamp(person.wake_h + (weekend_today ? prof.weekend_sleep_shift_h : 0.0) +
                             normal(rng, 0.0, prof.night_jitter_h),
                         5.25, 11.0);
    bed[d] = std::clamp(person.bed_h + (weekend_tomorrow ? prof.weekend_sleep_shift_h : 0.0) +
                            normal(rng, 0.0, prof.night_jitter_h),
                        21.25, 25.5);
  }
  for (int d = 0; d + 1 < kDaysPerWeek; ++d) {
    const double night = 24.0 + wake[d + 1] - bed[d];
    if (night < 5.5) bed[d] = 24.0 + wake[d + 1] - 5.5;
    if (night > 13.5) bed[d] = 24.0 + wake[d + 1] - 13.5;
  }
  Schedule s;
  for (int d = 0; d < kDaysPerWeek; ++d) {
    const std::int64_t base = std::int64_t{d} * kEpochsPerDay;
    s.wake[d] = base + hours_to_epochs(wake[d]);
    s.bed[d] = base + hours_to_epochs(bed[d]);
  }
  return s;
}

// Places `target` steps in walking bouts within [from, to) of the week.
void place_steps(const ActivityProfile& prof, std::vector<std::uint16_t>& steps, std::int64_t from,
                 std::int64_t to, std::int64_t target, Engine& rng) {
  if (target <= 0 || to <= from) return;
  std::vector<double> cum;
  cum.reserve(static_cast<std::size_t>(to - from));
  double acc = 0.0;
  for (std::int64_t t = from; t < to; ++t) {
    acc += kDiurnal[static_cast<std::size_t>((t % kEpochsPerDay) / kEpochsPerHour)];
    cum.push_back(acc);
  }
  const double p_stop = 1.0 / prof.bout_mean_epochs;
  std::int64_t remaining = target;
  for (int attempt = 0; remaining > 0 && attempt < 200000; ++attempt) {
    const double u = uniform01(rng) * acc;
    const auto start = from + (std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    const int cadence = prof.cadence_min + static_cast<int>(uniform_index(
                                               rng, static_cast<std::size_t>(prof.cadence_max - prof.cadence_min + 1)));
    for (std::int64_t t = start; t < to && remaining > 0; ++t) {
      auto& s = steps[static_cast<std::size_t>(t)];
      const int room = prof.max_steps_per_epoch - s;
      const int add = static_cast<int>(std::min<std::int64_t>({cadence, room, remaining}));
      if (add > 0) {
        s = static_cast<std::uint16_t>(s + add);
        remaining -= add;
      }
      if (uniform01(rng) < p_stop) break;
    }
  }
}

EpochSeries generate_series(const ActivityProfile& prof, const Person& person, Timepoint tp, DayOfWeek first,
                            Engine& rng) {
  const Schedule sched = draw_schedule(prof, person, first, rng);
  const auto total = static_cast<std::size_t>(kEpochsPerWeek);
  std::vector<float> vm(total, 0.0f);
  std::vector<std::uint16_t> steps(total, 0);

  // Awake spans: day d runs from its wake to its bed (clipped to the week).
  const double norm = 5.0 + 2.0 * prof.weekend_factor;
  const double s2 = std::log1p(prof.day_cv * prof.day_cv);
  const double level = std::exp(person.log_level[static_cast<std::size_t>(tp)]);
  for (int d = 0; d < kDaysPerWeek; ++d) {
    const std::int64_t from = sched.wake[d];
    const std::int64_t to = std::min<std::int64_t>(sched.bed[d], kEpochsPerWeek);
    const std::int64_t quiet = std::max(from, to - kWindDownEpochs);
    for (std::int64_t t = from; t < to; ++t) {
      const bool spike = t < quiet && uniform01(rng) < prof.spike_prob;
      vm[static_cast<std::size_t>(t)] = spike ? static_cast<float>(uniform(rng, 600.0, 1500.0))
                                              : static_cast<float>(1.0 + exponential(rng, prof.awake_vm_mean));
    }
    const bool weekend = is_weekend(shift_day(first, d));
    const double factor = (weekend ? 7.0 * prof.weekend_factor : 7.0) / norm;
    const double noise = std::exp(std::sqrt(s2) * standard_normal(rng) - 0.5 * s2);
    double daily = level * factor * noise + (tp == Timepoint::followup ? person.shift : 0.0);
    daily = std::max(0.0, std::round(daily));
    place_steps(prof, steps, from, quiet, static_cast<std::int64_t>(daily), rng);
  }
  for (std::size_t t = 0; t < total; ++t) {
    if (steps[t] > 0) vm[t] = static_cast<float>(steps[t] * uniform(rng, 60.0, 130.0));
  }

  std::vector<DayRecord> days;
  days.reserve(kDaysPerWeek);
  for (int d = 0; d < kDaysPerWeek; ++d) {
    DayRecord r;
    r.day_index = d + 1;
    r.day_of_week = shift_day(first, d);
    const auto off = static_cast<std::ptrdiff_t>(d) * kEpochsPerDay;
    r.vm.assign(vm.begin() + off, vm.begin() + off + kEpochsPerDay);
    r.steps.assign(steps.begin() + off, steps.begin() + off + kEpochsPerDay);
    r.mask.assign(kEpochsPerDay, EpochMask::observed);
    days.push_back(std::move(r));
  }
  return EpochSeries(person.participant.id, tp, std::move(days));
}

double weekly_mean_of(const EpochSeries& s) { return mean_daily_steps(s); }

}  // namespace

// ---------------------------------------------------------------------------
// Profile

void ActivityProfile::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ProfileError(what);
  };
  require(age_min < age_max, "age_min must be below age_max");
  require(bmi_sd > 0.0 && bmi_min < bmi_max && bmi_mean > bmi_min && bmi_mean < bmi_max, "invalid BMI distribution");
  require(prop_male >= 0.0 && prop_male <= 1.0, "prop_male must lie in [0, 1]");
  require(base_steps > 0.0, "base_steps must be positive");
  require(person_sd > 0.0, "person_sd must be positive");
  require(day_cv >= 0.0, "day_cv must be non-negative");
  require(weekend_factor > 0.0, "weekend_factor must be positive");
  require(arm_shift_sd >= 0.0, "arm_shift_sd must be non-negative");
  require(baseline_followup_corr > -1.0 && baseline_followup_corr < 1.0, "correlation must lie in (-1, 1)");
  require(wake_mean_h > 5.25 && wake_mean_h < 11.0, "wake_mean_h must lie in (5.25, 11)");
  require(bed_mean_h > 21.25 && bed_mean_h < 25.5, "bed_mean_h must lie in (21.25, 25.5)");
  require(sleep_person_sd_h >= 0.0 && night_jitter_h >= 0.0, "sleep spreads must be non-negative");
  require(spike_prob >= 0.0 && spike_prob < 0.5, "spike_prob must lie in [0, 0.5)");
  require(awake_vm_mean > 0.0, "awake_vm_mean must be positive");
  require(bout_mean_epochs >= 1.0, "bout_mean_epochs must be at least 1");
  require(cadence_min >= 1 && cadence_min <= cadence_max && cadence_max <= max_steps_per_epoch,
          "invalid cadence range");
  require(max_steps_per_epoch >= 1 && max_steps_per_epoch <= 1000, "invalid max_steps_per_epoch");
  latent_correlation();
}

double ActivityProfile::latent_correlation() const {
  const double sc2 = covariate_variance(*this);
  const double su2 = person_sd * person_sd;
  const double s2 = sc2 + su2;
  const double denom = std::exp(s2) * (1.0 + day_mean_variance(*this)) - 1.0;
  const double rho = (std::log1p(baseline_followup_corr * denom) - sc2) / su2;
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw ProfileError(fmt::format("correlation {} is unattainable with this profile (latent {:.3f})",
                                   baseline_followup_corr, rho));
  }
  return rho;
}

std::vector<double> followup_regression(std::span<const double> followup, std::span<const double> baseline,
                                        std::span<const Arm> arms) {
  const auto n = static_cast<Eigen::Index>(followup.size());
  if (baseline.size() != followup.size() || arms.size() != followup.size()) {
    throw InvalidArgument("followup_regression: length mismatch");
  }
  Eigen::MatrixXd X(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    X(i, 0) = 1.0;
    X(i, 1) = baseline[k];
    X(i, 2) = arms[k] == Arm::postal ? 1.0 : 0.0;
    X(i, 3) = arms[k] == Arm::nurse ? 1.0 : 0.0;
    y(i) = followup[k];
  }
  const OlsFit fit = ols_fit(X, y);
  return {fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size()};
}

GeneratedDataset generate_complete_dataset(const ActivityProfile& profile, int n_per_arm,
                                           std::span<const Timepoint> timepoints, std::uint64_t seed) {
  profile.validate();
  if (n_per_arm < 1) throw InvalidArgument("n_per_arm must be positive");
  if (timepoints.empty()) throw InvalidArgument("at least one timepoint is required");
  const double rho = profile.latent_correlation();

  GeneratedDataset out;
  std::vector<Person> people;
  for (Arm arm : kArms) {
    for (int i = 0; i < n_per_arm; ++i) {
      const std::string id = fmt::format("{}{:04d}", to_string(arm).substr(0, 1), i + 1);
      Engine rng = make_stream(seed, {kTagPerson, stable_hash(id)});
      people.push_back(draw_person(profile, id, arm, rho, rng));
    }
  }
  for (const Person& p : people) out.dataset.participants.push_back(p.participant);

  std::vector<std::pair<std::size_t, Timepoint>> jobs;
  for (std::size_t i = 0; i < people.size(); ++i) {
    for (Timepoint tp : timepoints) jobs.emplace_back(i, tp);
  }
  out.dataset.series.resize(jobs.size());
  parallel_for(jobs.size(), 1, [&](std::size_t j) {
    const auto& [i, tp] = jobs[j];
    const Person& p = people[i];
    Engine rng = make_stream(seed, {kTagSeries, stable_hash(p.participant.id), static_cast<std::uint64_t>(tp)});
    const auto first = static_cast<DayOfWeek>(uniform_index(rng, kDaysPerWeek));
    out.dataset.series[j] = std::make_shared<const EpochSeries>(generate_series(profile, p, tp, first, rng));
  });

  std::array<std::vector<double>, 2> means;
  for (Timepoint tp : timepoints) means[static_cast<std::size_t>(tp)].assign(people.size(), 0.0);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    means[static_cast<std::size_t>(jobs[j].second)][jobs[j].first] = weekly_mean_of(*out.dataset.series[j]);
  }
  std::vector<Arm> arms;
  for (const Person& p : people) arms.push_back(p.participant.arm);
  for (Timepoint tp : timepoints) {
    auto& target = tp == Timepoint::followup ? out.truth.arm_mean_followup : out.truth.arm_mean_baseline;
    for (Arm a : kArms) {
      double sum = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < people.size(); ++i) {
        if (arms[i] == a) {
          sum += means[static_cast<std::size_t>(tp)][i];
          ++n;
        }
      }
      target[static_cast<std::size_t>(a)] = sum / n;
    }
  }
  const bool both = std::find(timepoints.begin(), timepoints.end(), Timepoint::baseline) != timepoints.end() &&
                    std::find(timepoints.begin(), timepoints.end(), Timepoint::followup) != timepoints.end();
  if (both && people.size() > 4) {
    out.truth.regression = followup_regression(means[1], means[0], arms);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Patterns

MissingnessPattern extract_pattern(const std::string& source_id, std::span<const ClassifiedPeriod> periods) {
  MissingnessPattern p;
  p.source_id = source_id;
  for (const auto& c : periods) {
    if (c.cls != PeriodClass::nonwear && c.cls != PeriodClass::sleep_extra) continue;
    PatternEntry e;
    e.day_offset = static_cast<int>(c.start / kEpochsPerDay);
    e.epoch_start = static_cast<int>(c.start % kEpochsPerDay);
    e.epoch_end = e.epoch_start + static_cast<int>(c.length());
    e.kind = c.cls == PeriodClass::nonwear ? MissingSource::nonwear : MissingSource::sleep_extra;
    p.entries.push_back(e);
  }
  if (p.entries.empty()) throw NoMissingness("series " + source_id + " has no nonwear or sleep-extra period");
  return p;
}

EpochSeries apply_pattern(const EpochSeries& series, const MissingnessPattern& pattern,
                          std::span<const ClassifiedPeriod> own_periods) {
  EpochSeries out = series;
  for (const PatternEntry& e : pattern.entries) {
    const std::int64_t s = std::clamp<std::int64_t>(e.abs_start(), 0, kEpochsPerWeek);
    const std::int64_t t = std::clamp<std::int64_t>(e.abs_end(), 0, kEpochsPerWeek);
    if (s >= t) continue;
    out.zero_span(s, t);
    if (e.kind != MissingSource::sleep_extra) continue;
    bool touches = false;
    const ClassifiedPeriod* nearest = nullptr;
    std::int64_t best = kEpochsPerWeek + 1;
    for (const auto& p : own_periods) {
      if (p.cls != PeriodClass::sleep) continue;
      if (p.start <= t && s <= p.end) {
        touches = true;
        break;
      }
      const std::int64_t gap = p.end < s ? s - p.end : p.start - t;
      if (gap < best) {
        best = gap;
        nearest = &p;
      }
    }
    if (touches || nearest == nullptr) continue;
    if (nearest->end < s) out.zero_span(nearest->end, s);
    else out.zero_span(t, nearest->start);
  }
  return out;
}

std::vector<MissingnessPattern> build_pattern_library(const ActivityProfile& profile,
                                                      const IncompleteRegime& regime, int count,
                                                      std::uint64_t seed, const ClassifierConfig& cfg) {
  profile.validate();
  if (count < 1) throw InvalidArgument("pattern count must be positive");
  const double rho = profile.latent_correlation();
  std::vector<MissingnessPattern> out;
  for (std::uint64_t k = 0; static_cast<int>(out.size()) < count; ++k) {
    if (k > static_cast<std::uint64_t>(count) * 20) throw InvalidArgument("pattern generation keeps failing");
    const std::string id = fmt::format("lib{:05d}", k + 1);
    Engine rng = make_stream(seed, {kTagRegime, k});
    const Person person = draw_person(profile, id, Arm::control, rho, rng);
    const auto first = static_cast<DayOfWeek>(uniform_index(rng, kDaysPerWeek));
    EpochSeries series = generate_series(profile, person, Timepoint::followup, first, rng);
    const auto own = classify_series(series, cfg);

    const double u = uniform01(rng);
    const bool nonwear = u < regime.prop_nonwear_only || u >= regime.prop_nonwear_only + regime.prop_sleep_extra_only;
    const bool extra = u >= regime.prop_nonwear_only;

    std::vector<std::pair<std::int64_t, std::int64_t>> spans;
    auto free = [&](std::int64_t s, std::int64_t e) {
      const std::int64_t margin = 2 * kEpochsPerHour;
      for (const auto& [a, b] : spans) {
        if (s < b + margin && a < e + margin) return false;
      }
      return true;
    };

    // Wake and bed of each day, read off the complete series' sleep periods.
    std::array<std::int64_t, kDaysPerWeek> wake{}, bed{};
    for (int d = 0; d < kDaysPerWeek; ++d) {
      wake[d] = std::int64_t{d} * kEpochsPerDay + hm(7);
      bed[d] = std::int64_t{d} * kEpochsPerDay + hm(23);
    }
    for (const auto& p : own) {
      if (p.cls != PeriodClass::sleep) continue;
      const int wake_day = static_cast<int>(std::min<std::int64_t>(p.end / kEpochsPerDay, kDaysPerWeek - 1));
      wake[wake_day] = p.end;
      if (p.start > 0) {
        const int bed_day = static_cast<int>(p.start / kEpochsPerDay - (p.start % kEpochsPerDay < hm(12) ? 1 : 0));
        if (bed_day >= 0 && bed_day < kDaysPerWeek) bed[bed_day] = p.start;
      }
    }

    if (extra) {
      const double dur_h = uniform(rng, 15.5, 20.0);
      const std::int64_t dur = hours_to_epochs(dur_h);
      if (uniform01(rng) < regime.prop_whole_day) {
        const int d = 1 + static_cast<int>(uniform_index(rng, kDaysPerWeek - 2));
        spans.emplace_back(wake[d], bed[d]);
      } else if (uniform01(rng) < 0.5) {
        // Late wake after night d-1 -> d.
        const int d = 1 + static_cast<int>(uniform_index(rng, kDaysPerWeek - 1));
        const std::int64_t end = std::min(bed[d - 1] + dur, bed[d] - kEpochsPerHour);
        if (end > wake[d]) spans.emplace_back(wake[d], end);
      } else {
        // Device off early before night d -> d+1.
        const int d = static_cast<int>(uniform_index(rng, kDaysPerWeek - 1));
        const std::int64_t start = std::max(wake[d + 1] - dur, wake[d] + kEpochsPerHour);
        if (start < bed[d]) spans.emplace_back(start, bed[d]);
      }
    }
    const std::size_t extra_spans = spans.size();
    if (nonwear) {
      const int episodes = 1 + poisson(rng, regime.nonwear_extra_episodes_mean);
      for (int j = 0; j < episodes; ++j) {
        const double len_h = uniform01(rng) < regime.prop_long_nonwear ? uniform(rng, 3.0, 4.9) : uniform(rng, 1.05, 3.0);
        const std::int64_t len = hours_to_epochs(len_h);
        for (int tries = 0; tries < 10; ++tries) {
          const int d = static_cast<int>(uniform_index(rng, kDaysPerWeek));
          const std::int64_t base = std::int64_t{d} * kEpochsPerDay;
          const std::int64_t lo = std::max(base + hm(8), wake[d] + kEpochsPerHour / 2);
          const std::int64_t hi = std::min(base + hm(20), bed[d] - kEpochsPerHour / 2) - len;
          if (hi <= lo) continue;
          const std::int64_t s = lo + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(hi - lo)));
          if (!free(s, s + len)) continue;
          spans.emplace_back(s, s + len);
          break;
        }
      }
    }
    if (spans.empty()) continue;

    for (const auto& [s, e] : spans) {
      series.zero_span(s, e);
    }
    // Handling spikes as the device is taken off and put back on.
    for (std::size_t j = extra_spans; j < spans.size(); ++j) {
      for (std::int64_t t : {spans[j].first - 1, spans[j].second}) {
        if (t < 0 || t >= kEpochsPerWeek) continue;
        DayRecord& day = series.day_mut(static_cast<int>(t / kEpochsPerDay) + 1);
        const auto e = static_cast<std::size_t>(t % kEpochsPerDay);
        day.vm[e] = static_cast<float>(uniform(rng, 650.0, 1200.0));
        day.steps[e] = 0;
      }
    }
    const auto periods = classify_series(series, cfg);
    try {
      out.push_back(extract_pattern(id, periods));
    } catch (const NoMissingness&) {
    }
  }
  return out;
}

std::vector<std::size_t> bootstrap_without_replacement(std::size_t pool_size, std::size_t n, Engine& rng) {
  if (n > pool_size) {
    throw InsufficientPool(fmt::format("cannot sample {} distinct members from a pool of {}", n, pool_size));
  }
  std::vector<std::size_t> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_index(rng, pool_size - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

EpochSeries empty_week(const EpochSeries& series) {
  std::vector<DayRecord> days;
  for (const auto& d : series.days()) days.push_back(DayRecord::zeros(d.day_index, d.day_of_week));
  return EpochSeries(series.participant_id(), series.timepoint(), std::move(days));
}

}  // namespace wearmi
