#include "wearmi/core.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "wearmi/errors.hpp"

namespace wearmi {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::array<std::string_view, N>& names) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

constexpr std::array<std::string_view, 2> kTimepointNames{"baseline", "followup"};
constexpr std::array<std::string_view, 7> kDowNames{"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
constexpr std::array<std::string_view, 3> kMaskNames{"observed", "missing", "imputed"};
constexpr std::array<std::string_view, 3> kArmNames{"control", "postal", "nurse"};
constexpr std::array<std::string_view, 2> kSexNames{"female", "male"};
constexpr std::array<std::string_view, 4> kClassNames{"inactive", "nonwear", "sleep", "sleep_extra"};
constexpr std::array<std::string_view, 2> kSourceNames{"nonwear", "sleep_extra"};
constexpr std::array<std::string_view, 2> kScopeNames{"weekday", "weekend"};

}  // namespace

std::string_view to_string(Timepoint v) { return kTimepointNames[static_cast<int>(v)]; }
std::string_view to_string(DayOfWeek v) { return kDowNames[static_cast<int>(v)]; }
std::string_view to_string(EpochMask v) { return kMaskNames[static_cast<int>(v)]; }
std::string_view to_string(Arm v) { return kArmNames[static_cast<int>(v)]; }
std::string_view to_string(Sex v) { return kSexNames[static_cast<int>(v)]; }
std::string_view to_string(PeriodClass v) { return kClassNames[static_cast<int>(v)]; }
std::string_view to_string(MissingSource v) { return kSourceNames[static_cast<int>(v)]; }
std::string_view to_string(SleepScope v) { return kScopeNames[static_cast<int>(v)]; }

std::optional<Timepoint> parse_timepoint(std::string_view s) {
  return lookup<Timepoint>(s, kTimepointNames);
}
std::optional<DayOfWeek> parse_day_of_week(std::string_view s) {
  return lookup<DayOfWeek>(s, kDowNames);
}
std::optional<EpochMask> parse_mask(std::string_view s) { return lookup<EpochMask>(s, kMaskNames); }
std::optional<Arm> parse_arm(std::string_view s) { return lookup<Arm>(s, kArmNames); }
std::optional<Sex> parse_sex(std::string_view s) {
  if (s == "F" || s == "f") return Sex::female;
  if (s == "M" || s == "m") return Sex::male;
  return lookup<Sex>(s, kSexNames);
}

bool is_weekend(DayOfWeek d) { return d == DayOfWeek::sat || d == DayOfWeek::sun; }

DayOfWeek shift_day(DayOfWeek d, int offset) {
  int v = (static_cast<int>(d) + offset) % 7;
  if (v < 0) v += 7;
  return static_cast<DayOfWeek>(v);
}

ClockTime epoch_to_clock(int epoch) {
  if (epoch < 0 || epoch >= kEpochsPerDay) {
    throw InvalidArgument("epoch index out of range: " + std::to_string(epoch));
  }
  const int secs = epoch * kEpochSeconds;
  return {secs / 3600, (secs / 60) % 60, secs % 60};
}

int clock_to_epoch(const ClockTime& t) {
  if (t.hour < 0 || t.hour > 23 || t.minute < 0 || t.minute > 59 || t.second < 0 ||
      t.second > 59 || t.second % kEpochSeconds != 0) {
    throw InvalidArgument("clock time not on the 5-second epoch grid");
  }
  return (t.hour * 3600 + t.minute * 60 + t.second) / kEpochSeconds;
}

std::string format_clock(const ClockTime& t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", t.hour, t.minute, t.second);
  return buf;
}

std::optional<ClockTime> parse_clock(std::string_view s) {
  int h = 0, m = 0, sec = 0, used = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%d:%d:%d%n", &h, &m, &sec, &used) != 3) return std::nullopt;
  if (static_cast<std::size_t>(used) != str.size()) return std::nullopt;
  if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 59) return std::nullopt;
  return ClockTime{h, m, sec};
}

DayRecord DayRecord::zeros(int day_index, DayOfWeek dow) {
  DayRecord d;
  d.day_index = day_index;
  d.day_of_week = dow;
  d.vm.assign(kEpochsPerDay, 0.0f);
  d.steps.assign(kEpochsPerDay, 0);
  d.mask.assign(kEpochsPerDay, EpochMask::observed);
  return d;
}

std::int64_t DayRecord::total_steps() const {
  return std::accumulate(steps.begin(), steps.end(), std::int64_t{0});
}

std::int64_t DayRecord::observed_steps() const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (mask[i] != EpochMask::missing) s += steps[i];
  }
  return s;
}

int DayRecord::count_mask(EpochMask m) const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), m));
}

EpochSeries::EpochSeries(std::string participant_id, Timepoint timepoint,
                         std::vector<DayRecord> days)
    : participant_id_(std::move(participant_id)), timepoint_(timepoint), days_(std::move(days)) {
  if (days_.size() != kDaysPerWeek) {
    throw InvalidArgument(participant_id_ + ": a series needs exactly 7 days");
  }
  for (std::size_t k = 0; k < days_.size(); ++k) {
    const DayRecord& d = days_[k];
    const std::string where = participant_id_ + " day " + std::to_string(k + 1);
    if (d.day_index != static_cast<int>(k) + 1) throw InvalidArgument(where + ": day index out of order");
    if (d.vm.size() != kEpochsPerDay || d.steps.size() != kEpochsPerDay ||
        d.mask.size() != kEpochsPerDay) {
      throw InvalidArgument(where + ": expected 17280 epochs");
    }
    if (k > 0 && d.day_of_week != shift_day(days_[k - 1].day_of_week, 1)) {
      throw InvalidArgument(where + ": days of week are not consecutive");
    }
    for (int e = 0; e < kEpochsPerDay; ++e) {
      if (!(d.vm[e] >= 0.0f)) throw InvalidArgument(where + ": negative or NaN vm");
      if (d.steps[e] > 0 && d.vm[e] <= 0.0f) {
        throw InvalidArgument(where + " epoch " + std::to_string(e) + ": steps > 0 with vm = 0");
      }
    }
  }
}

DayOfWeek EpochSeries::day_of_week(int day_index) const {
  return shift_day(days_.front().day_of_week, day_index - 1);
}

std::vector<float> EpochSeries::concatenated_vm() const {
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(kEpochsPerWeek));
  for (const auto& d : days_) out.insert(out.end(), d.vm.begin(), d.vm.end());
  return out;
}

void EpochSeries::zero_span(std::int64_t start, std::int64_t end) {
  start = std::max<std::int64_t>(start, 0);
  end = std::min<std::int64_t>(end, kEpochsPerWeek);
  for (std::int64_t t = start; t < end; ++t) {
    DayRecord& d = days_[static_cast<std::size_t>(t / kEpochsPerDay)];
    d.vm[epoch_of(t)] = 0.0f;
    d.steps[epoch_of(t)] = 0;
  }
}

void EpochSeries::mark_missing(int day_index, int epoch_start, int epoch_end) {
  DayRecord& d = days_.at(day_index - 1);
  std::fill(d.mask.begin() + epoch_start, d.mask.begin() + epoch_end, EpochMask::missing);
}

bool operator==(const EpochSeries& a, const EpochSeries& b) {
  if (a.participant_id_ != b.participant_id_ || a.timepoint_ != b.timepoint_) return false;
  for (std::size_t k = 0; k < a.days_.size(); ++k) {
    const DayRecord& x = a.days_[k];
    const DayRecord& y = b.days_[k];
    if (x.day_index != y.day_index || x.day_of_week != y.day_of_week || x.vm != y.vm ||
        x.steps != y.steps || x.mask != y.mask) {
      return false;
    }
  }
  return a.days_.size() == b.days_.size();
}

TimelinePosition start_position(std::int64_t t) {
  return {static_cast<int>(t / kEpochsPerDay) + 1, static_cast<int>(t % kEpochsPerDay)};
}

TimelinePosition end_position(std::int64_t t) {
  if (t <= 0) return {1, 0};
  const int day = static_cast<int>((t - 1) / kEpochsPerDay) + 1;
  return {day, static_cast<int>(t - std::int64_t{day - 1} * kEpochsPerDay)};
}

bool SleepWindow::contains(int e) const {
  if (bed_epoch < wake_epoch) return e >= bed_epoch && e < wake_epoch;
  return e >= bed_epoch || e < wake_epoch;
}

SleepWindow SleepWindow::shifted(int epochs) const {
  auto wrap = [](int v) { return ((v % kEpochsPerDay) + kEpochsPerDay) % kEpochsPerDay; };
  return {wrap(bed_epoch + epochs), wrap(wake_epoch + epochs), scope};
}

double weartime_minutes(const DayRecord& day, std::span<const ClassifiedPeriod> periods) {
  const std::int64_t day_start = std::int64_t{day.day_index - 1} * kEpochsPerDay;
  const std::int64_t day_end = day_start + kEpochsPerDay;
  // Periods are disjoint, so overlaps can simply be summed.
  std::int64_t covered = 0;
  for (const auto& p : periods) {
    const std::int64_t lo = std::max(p.start, day_start);
    const std::int64_t hi = std::min(p.end, day_end);
    if (hi > lo) covered += hi - lo;
  }
  return static_cast<double>(kEpochsPerDay - covered) * kMinutesPerEpoch;
}

const Participant* Dataset::find_participant(std::string_view id) const {
  for (const auto& p : participants) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const Participant& Dataset::participant(std::string_view id) const {
  const Participant* p = find_participant(id);
  if (p == nullptr) throw InvalidArgument("unknown participant: " + std::string(id));
  return *p;
}

int Dataset::find_series(std::string_view id, Timepoint tp) const {
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i]->participant_id() == id && series[i]->timepoint() == tp) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::size_t> Dataset::series_at(Timepoint tp) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i]->timepoint() == tp) out.push_back(i);
  }
  return out;
}

bool Dataset::has_timepoint(Timepoint tp) const {
  return std::any_of(series.begin(), series.end(),
                     [tp](const SeriesPtr& s) { return s->timepoint() == tp; });
}

double mean_daily_steps(const EpochSeries& s) {
  double total = 0.0;
  for (const auto& d : s.days()) total += static_cast<double>(d.total_steps());
  return total / kDaysPerWeek;
}

}  // namespace wearmi
