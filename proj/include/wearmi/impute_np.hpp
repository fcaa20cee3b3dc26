#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wearmi/classify.hpp"
#include "wearmi/core.hpp"
#include "wearmi/rng.hpp"

namespace wearmi {

enum class PoolKind : std::uint8_t { self, nonself, whole_week };
std::string_view to_string(PoolKind k);

enum class MatchVar : std::uint8_t { age, bmi, baseline_mean_steps, baseline_mean_weartime };
std::string_view to_string(MatchVar v);
std::optional<MatchVar> parse_match_var(std::string_view s);

struct DonorEntry {
  std::size_t series_index = 0;
  std::string donor_id;
  int day_index = 1;
};

struct DonorPool {
  PoolKind kind = PoolKind::self;
  std::vector<DonorEntry> entries;
  std::vector<double> weights;  // empty for self pools (equal probability)

  std::size_t size() const { return entries.size(); }
};

/// True if any epoch of [epoch_start, epoch_end) on the day is flagged missing.
bool has_missing(const DayRecord& day, int epoch_start, int epoch_end);

/// Other days of the same series observed throughout the interval's epochs.
DonorPool self_donor_pool(const EpochSeries& series, std::size_t series_index,
                          const MissingInterval& interval);

/// Matching-variable values; throws InvalidArgument if a requested baseline
/// summary is absent.
std::vector<double> match_values(const Participant& p, std::span<const MatchVar> vars);

/// Mahalanobis distances from `target` to each pool member, using the sample
/// covariance over pool plus target. A singular covariance gets a ridge of
/// 1e-8 * trace / p; SingularCovariance if that does not help.
std::vector<double> mahalanobis_distances(const Participant& target, std::span<const Participant> pool,
                                          std::span<const MatchVar> vars);

/// Inverse-distance sampling weights. Zero-distance members share all the
/// weight equally.
std::vector<double> mahalanobis_weights(const Participant& target, std::span<const Participant> pool,
                                        std::span<const MatchVar> vars);
std::vector<double> weights_from_distances(std::span<const double> distances);

/// A potential non-self donor: another participant at the same timepoint and
/// in the same arm as the target.
struct DonorCandidate {
  std::size_t series_index = 0;
  Participant participant;  // covariates as used for matching
  const EpochSeries* series = nullptr;
};

struct NonselfSelection {
  std::size_t candidate = 0;     // index into the candidate list
  std::vector<int> usable_days;  // donor days observed over the interval
  std::size_t pool_size = 0;
  int relaxation = 0;  // 0 strict, 1 partial-overlap donors, 2 sex not matched
  std::vector<double> weights;
};

/// Filters candidates (same sex, observed on all seven days over the
/// interval) and draws one with Mahalanobis weights. With `allow_relaxation`
/// an empty pool first admits donors observed on at least one day, then
/// drops sex matching. Throws EmptyDonorPool if nothing survives.
NonselfSelection select_nonself_donor(const Participant& target, const MissingInterval& interval,
                                      std::span<const DonorCandidate> candidates,
                                      std::span<const MatchVar> vars, Engine& rng,
                                      bool allow_relaxation = true);

/// Source of one imputed interval for one imputation.
struct IntervalDraw {
  std::size_t donor_series = 0;
  std::string donor_id;
  int donor_day = 1;
};

struct IntervalImputation {
  PoolKind kind = PoolKind::self;
  std::size_t pool_size = 0;
  int relaxation = 0;
  std::vector<IntervalDraw> draws;  // one per imputation
};

struct NpConfig {
  int m = 10;
  /// |SD| must exceed this for the self-donor branch.
  int self_pool_threshold = 4;
  std::vector<MatchVar> vars{MatchVar::age, MatchVar::bmi};
  /// Added to `vars` at follow-up when baseline data exist.
  bool match_baseline_summaries = true;
  /// Follow-up matching on the across-imputation mean of baseline summaries
  /// (true) or on the summary from the same imputation index (false).
  bool average_baseline_summaries = true;
  bool allow_relaxation = true;
  /// Donors from the target's own arm only (true) or from every arm.
  bool same_arm = true;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Everything an interval imputation needs besides the target itself.
struct NpContext {
  std::span<const DonorCandidate> candidates;
  std::span<const MatchVar> vars;
  int m = 10;
  int self_pool_threshold = 4;
  bool allow_relaxation = true;
  std::uint64_t seed = 0;
};

/// Imputes one missing interval M times. Self donors are drawn with equal
/// probability when |SD| exceeds the threshold; otherwise one non-self donor
/// is selected and its seven same-clock-time intervals are resampled.
IntervalImputation impute_interval(const EpochSeries& target_series, std::size_t target_index,
                                   const Participant& target, const MissingInterval& interval,
                                   int interval_ordinal, const NpContext& ctx);

struct WeekDraw {
  std::size_t donor_series = 0;
  std::string donor_id;
  std::array<int, kDaysPerWeek> donor_days{};  // donor day for each target day slot
};

/// Whole-week replacement: M donors drawn with Mahalanobis weights from
/// complete same-arm, same-sex donors; each fills weekday slots with its
/// weekdays and weekend slots with its weekend days, with replacement.
std::vector<WeekDraw> impute_whole_week(const EpochSeries& target_series, const Participant& target,
                                        std::span<const DonorCandidate> complete_donors,
                                        std::span<const MatchVar> vars, int m, std::uint64_t seed,
                                        bool allow_relaxation = true);

struct ProvenanceRecord {
  int m = 1;  // 1-based imputation index
  std::size_t series_index = 0;
  std::string participant_id;
  Timepoint timepoint = Timepoint::baseline;
  int day_index = 1;
  int epoch_start = 0;
  int epoch_end = 0;
  std::size_t donor_series = 0;
  std::string donor_id;
  int donor_day = 1;
  PoolKind kind = PoolKind::self;
  std::size_t pool_size = 0;
  int relaxation = 0;
};

/// M completed datasets held as the marked source plus donor references.
class ImputationSet {
 public:
  ImputationSet() = default;
  ImputationSet(std::shared_ptr<const Dataset> source, int m_count,
                std::vector<ProvenanceRecord> provenance);

  int m_count() const { return m_count_; }
  const Dataset& source() const { return *source_; }
  const std::vector<ProvenanceRecord>& provenance() const { return provenance_; }
  /// Records for one (m, series) pair.
  std::vector<const ProvenanceRecord*> records(int m, std::size_t series_index) const;

  EpochSeries completed_series(std::size_t series_index, int m) const;
  Dataset completed(int m) const;
  std::array<double, kDaysPerWeek> daily_totals(std::size_t series_index, int m) const;
  double weekly_mean(std::size_t series_index, int m) const;

 private:
  std::shared_ptr<const Dataset> source_;
  int m_count_ = 0;
  std::vector<ProvenanceRecord> provenance_;
  // index_[m-1][series] -> positions in provenance_
  std::vector<std::vector<std::vector<std::size_t>>> index_;
};

/// Donor-based multiple imputation of every missing interval. Runs baseline
/// first, then follow-up (matching on baseline summaries when available).
/// `marked` must carry the classification's intervals as missing epochs.
/// Unimputable participants are collected and reported in one
/// ImputationError.
ImputationSet run_np_mi(const Dataset& marked, std::span<const SeriesClassification> classification,
                        const NpConfig& cfg);

/// Baseline mean daily steps and wear time per participant, averaged across
/// imputations, for participants with a baseline series.
struct BaselineSummary {
  std::string participant_id;
  std::vector<double> mean_steps;     // per imputation
  std::vector<double> mean_weartime;  // per imputation
};
std::vector<BaselineSummary> baseline_summaries(const ImputationSet& set,
                                                std::span<const SeriesClassification> classification);

}  // namespace wearmi
