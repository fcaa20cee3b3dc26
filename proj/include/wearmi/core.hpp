#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wearmi {

inline constexpr int kEpochSeconds = 5;
inline constexpr int kEpochsPerMinute = 60 / kEpochSeconds;
inline constexpr int kEpochsPerHour = 60 * kEpochsPerMinute;
inline constexpr int kEpochsPerDay = 24 * kEpochsPerHour;  // 17,280
inline constexpr int kDaysPerWeek = 7;
inline constexpr std::int64_t kEpochsPerWeek = std::int64_t{kEpochsPerDay} * kDaysPerWeek;
inline constexpr double kMinutesPerEpoch = kEpochSeconds / 60.0;

enum class Timepoint : std::uint8_t { baseline, followup };
enum class DayOfWeek : std::uint8_t { mon, tue, wed, thu, fri, sat, sun };
enum class EpochMask : std::uint8_t { observed, missing, imputed };
enum class Arm : std::uint8_t { control, postal, nurse };
enum class Sex : std::uint8_t { female, male };
enum class PeriodClass : std::uint8_t { inactive, nonwear, sleep, sleep_extra };
enum class MissingSource : std::uint8_t { nonwear, sleep_extra };
enum class SleepScope : std::uint8_t { weekday, weekend };

inline constexpr std::array<Arm, 3> kArms{Arm::control, Arm::postal, Arm::nurse};

std::string_view to_string(Timepoint v);
std::string_view to_string(DayOfWeek v);
std::string_view to_string(EpochMask v);
std::string_view to_string(Arm v);
std::string_view to_string(Sex v);
std::string_view to_string(PeriodClass v);
std::string_view to_string(MissingSource v);
std::string_view to_string(SleepScope v);

std::optional<Timepoint> parse_timepoint(std::string_view s);
std::optional<DayOfWeek> parse_day_of_week(std::string_view s);
std::optional<EpochMask> parse_mask(std::string_view s);
std::optional<Arm> parse_arm(std::string_view s);
std::optional<Sex> parse_sex(std::string_view s);

bool is_weekend(DayOfWeek d);
inline SleepScope scope_of(DayOfWeek d) {
  return is_weekend(d) ? SleepScope::weekend : SleepScope::weekday;
}
/// Day of week `offset` days after `d` (offset may be negative).
DayOfWeek shift_day(DayOfWeek d, int offset);

// ---------------------------------------------------------------------------
// Clock arithmetic

struct ClockTime {
  int hour = 0;
  int minute = 0;
  int second = 0;

  friend bool operator==(const ClockTime&, const ClockTime&) = default;
};

/// hh:mm:ss of the start of an epoch. Throws InvalidArgument outside 0..17279.
ClockTime epoch_to_clock(int epoch);
/// Inverse of epoch_to_clock; seconds must be a multiple of the epoch length.
int clock_to_epoch(const ClockTime& t);
std::string format_clock(const ClockTime& t);
std::optional<ClockTime> parse_clock(std::string_view s);

/// Epoch-of-day for a whole number of hours and minutes, e.g. hm(23, 30).
constexpr int hm(int hours, int minutes = 0) {
  return hours * kEpochsPerHour + minutes * kEpochsPerMinute;
}

// ---------------------------------------------------------------------------
// Epoch data

/// One calendar day of 5-second epochs.
struct DayRecord {
  int day_index = 1;  // 1..7
  DayOfWeek day_of_week = DayOfWeek::mon;
  std::vector<float> vm;
  std::vector<std::uint16_t> steps;
  std::vector<EpochMask> mask;

  /// A day of zero VM and zero steps with every epoch observed.
  static DayRecord zeros(int day_index, DayOfWeek dow);

  std::int64_t total_steps() const;
  /// Sum of steps over epochs not flagged missing.
  std::int64_t observed_steps() const;
  int count_mask(EpochMask m) const;
};

/// One participant at one timepoint: seven consecutive days.
///
/// Positions on the concatenated timeline are absolute epoch offsets from
/// 00:00 of day 1, so day k covers [(k-1)*17280, k*17280).
class EpochSeries {
 public:
  EpochSeries() = default;
  /// Validates the grid, value and day-of-week invariants; throws
  /// InvalidArgument on violation.
  EpochSeries(std::string participant_id, Timepoint timepoint, std::vector<DayRecord> days);

  const std::string& participant_id() const { return participant_id_; }
  Timepoint timepoint() const { return timepoint_; }
  int epoch_length_s() const { return kEpochSeconds; }
  const std::vector<DayRecord>& days() const { return days_; }
  /// 1-based day access.
  const DayRecord& day(int day_index) const { return days_.at(day_index - 1); }
  DayRecord& day_mut(int day_index) { return days_.at(day_index - 1); }

  std::int64_t length() const { return kEpochsPerWeek; }
  float vm_at(std::int64_t t) const { return day_of(t).vm[epoch_of(t)]; }
  std::uint16_t steps_at(std::int64_t t) const { return day_of(t).steps[epoch_of(t)]; }
  EpochMask mask_at(std::int64_t t) const { return day_of(t).mask[epoch_of(t)]; }

  /// Day of week for a day index, extrapolated beyond 1..7 (day 0 is the day
  /// before the recording started).
  DayOfWeek day_of_week(int day_index) const;

  /// VM over the whole week as one contiguous sequence.
  std::vector<float> concatenated_vm() const;

  /// Sets vm and steps to zero over [start, end) without touching the mask.
  void zero_span(std::int64_t start, std::int64_t end);
  /// Flags [epoch_start, epoch_end) of a day as missing.
  void mark_missing(int day_index, int epoch_start, int epoch_end);

  friend bool operator==(const EpochSeries&, const EpochSeries&);

 private:
  const DayRecord& day_of(std::int64_t t) const { return days_[static_cast<std::size_t>(t / kEpochsPerDay)]; }
  static std::size_t epoch_of(std::int64_t t) { return static_cast<std::size_t>(t % kEpochsPerDay); }

  std::string participant_id_;
  Timepoint timepoint_ = Timepoint::baseline;
  std::vector<DayRecord> days_;
};

using SeriesPtr = std::shared_ptr<const EpochSeries>;

struct Participant {
  std::string id;
  Arm arm = Arm::control;
  Sex sex = Sex::female;
  double age = 0.0;
  double bmi = 0.0;
  std::optional<double> baseline_mean_steps;     // steps/day
  std::optional<double> baseline_mean_weartime;  // minutes/day
  std::string practice;                          // optional label; empty if absent
};

/// A detected zero-count run with its class. Coordinates are absolute
/// timeline epochs; `end` is exclusive.
struct ClassifiedPeriod {
  std::int64_t start = 0;
  std::int64_t end = 0;
  double duration_min = 0.0;
  PeriodClass cls = PeriodClass::inactive;
  bool boundary_spike = false;

  std::int64_t length() const { return end - start; }
  friend bool operator==(const ClassifiedPeriod&, const ClassifiedPeriod&) = default;
};

struct TimelinePosition {
  int day_index;
  int epoch;
};
/// Day and epoch of an absolute start position.
TimelinePosition start_position(std::int64_t t);
/// Day and exclusive epoch of an absolute end position; the epoch is in
/// 1..17280 so that the end stays on the day of the last covered epoch.
TimelinePosition end_position(std::int64_t t);

/// A within-day epoch range flagged for imputation.
struct MissingInterval {
  int day_index = 1;
  int epoch_start = 0;
  int epoch_end = 0;  // exclusive
  MissingSource source = MissingSource::nonwear;

  int length() const { return epoch_end - epoch_start; }
  std::int64_t abs_start() const {
    return std::int64_t{day_index - 1} * kEpochsPerDay + epoch_start;
  }
  std::int64_t abs_end() const { return std::int64_t{day_index - 1} * kEpochsPerDay + epoch_end; }
  bool overlaps(int other_start, int other_end) const {
    return epoch_start < other_end && other_start < epoch_end;
  }
  friend bool operator==(const MissingInterval&, const MissingInterval&) = default;
};

/// Bed-to-wake interval on the 24 h clock; circular, so bed > wake means the
/// window crosses midnight.
struct SleepWindow {
  int bed_epoch = 0;
  int wake_epoch = 0;
  SleepScope scope = SleepScope::weekday;

  /// True if a clock epoch falls inside [bed, wake) read circularly.
  bool contains(int epoch_of_day) const;
  SleepWindow shifted(int epochs) const;
  friend bool operator==(const SleepWindow&, const SleepWindow&) = default;
};

/// Minutes of the day not covered by any zero-count period.
double weartime_minutes(const DayRecord& day, std::span<const ClassifiedPeriod> periods);

/// Participants plus their series at one or two timepoints.
struct Dataset {
  std::vector<Participant> participants;
  std::vector<SeriesPtr> series;

  const Participant* find_participant(std::string_view id) const;
  const Participant& participant(std::string_view id) const;
  /// Index into `series` or -1.
  int find_series(std::string_view id, Timepoint tp) const;
  std::vector<std::size_t> series_at(Timepoint tp) const;
  bool has_timepoint(Timepoint tp) const;
};

/// Mean daily step total of a series (all epochs).
double mean_daily_steps(const EpochSeries& s);

}  // namespace wearmi
