#include <algorithm>
#include <numeric>
#include <set>

#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "wearmi/classify.hpp"
#include "wearmi/errors.hpp"
#include "wearmi/impute_np.hpp"
#include "wearmi/simgen.hpp"

using namespace wearmi;

TEST_CASE("inverse-distance weights") {
  const std::vector<double> d{1.0, 2.0, 4.0};
  const auto w = weights_from_distances(d);
  CHECK(w[0] == doctest::Approx(4.0 / 7.0));
  CHECK(w[1] == doctest::Approx(2.0 / 7.0));
  CHECK(w[2] == doctest::Approx(1.0 / 7.0));
  const std::vector<double> tie{0.0, 3.0, 0.0};
  CHECK(weights_from_distances(tie) == std::vector<double>{0.5, 0.0, 0.5});
  CHECK(weights_from_distances(std::vector<double>{2.5}) == std::vector<double>{1.0});
}

TEST_CASE("Mahalanobis weights against matrix inversion") {
  Engine rng = make_stream(77, {});
  const std::vector<MatchVar> vars{MatchVar::age, MatchVar::bmi, MatchVar::baseline_mean_steps};
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 30));
    auto person = [&] {
      Participant p;
      p.age = 45 + 30 * uniform01(rng);
      p.bmi = 20 + 15 * uniform01(rng);
      p.baseline_mean_steps = 3000 + 9000 * uniform01(rng);
      return p;
    };
    const Participant target = person();
    std::vector<Participant> pool;
    oracle::Matrix x{{target.age, target.bmi, *target.baseline_mean_steps}};
    for (int i = 0; i < n; ++i) {
      pool.push_back(person());
      x.push_back({pool.back().age, pool.back().bmi, *pool.back().baseline_mean_steps});
    }
    const auto got = mahalanobis_weights(target, pool, vars);
    const auto want = oracle::mahalanobis_weights(x);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10);
  }
}

TEST_CASE("missing baseline summary is an error") {
  Participant p;
  const std::vector<MatchVar> vars{MatchVar::baseline_mean_weartime};
  CHECK_THROWS_AS(match_values(p, vars), InvalidArgument);
}

TEST_CASE("self-donor pool excludes days missing over the interval") {
  auto s = fixtures::awake_week_with_zeros("p", Timepoint::followup, DayOfWeek::mon, {});
  s.mark_missing(2, hm(10), hm(12));
  s.mark_missing(4, hm(11), hm(13));
  s.mark_missing(6, hm(13), hm(14));
  const MissingInterval iv{2, hm(10), hm(12), MissingSource::nonwear};
  const auto pool = self_donor_pool(s, 0, iv);
  CHECK(pool.kind == PoolKind::self);
  std::vector<int> days;
  for (const auto& e : pool.entries) days.push_back(e.day_index);
  CHECK(days == std::vector<int>{1, 3, 5, 6, 7});
}

namespace {

// Generated complete follow-up data with 4 h nonwear blocks at 10:00: on one
// day (self branch) or on four days (pool of three, non-self branch).
struct NpFixture {
  Dataset data;
  std::vector<SeriesClassification> cls;
  Dataset marked;
};

NpFixture make_np_fixture(int n_per_arm, std::uint64_t seed) {
  const std::vector<Timepoint> tps{Timepoint::followup};
  NpFixture f;
  f.data = generate_complete_dataset(ActivityProfile{}, n_per_arm, tps, seed).dataset;
  for (std::size_t i = 0; i < f.data.series.size(); ++i) {
    if (i % 3 == 2) continue;
    EpochSeries s = *f.data.series[i];
    const int days = i % 3 == 0 ? 1 : 4;
    for (int d = 0; d < days; ++d) {
      const std::int64_t day0 = std::int64_t{d + 1} * kEpochsPerDay;
      s.zero_span(day0 + hm(10), day0 + hm(14));
    }
    f.data.series[i] = std::make_shared<const EpochSeries>(std::move(s));
  }
  f.cls = classify_dataset(f.data, ClassifierConfig{});
  f.marked = with_missing_marked(f.data, f.cls);
  return f;
}

}  // namespace

TEST_CASE("donor imputation copies donor epochs and leaves observed epochs alone") {
  const NpFixture f = make_np_fixture(6, 9);
  NpConfig cfg;
  cfg.m = 4;
  cfg.seed = 5;
  const ImputationSet set = run_np_mi(f.marked, f.cls, cfg);
  std::set<PoolKind> kinds;
  for (const auto& r : set.provenance()) {
    kinds.insert(r.kind);
    const EpochSeries done = set.completed_series(r.series_index, r.m);
    const EpochSeries& donor = *f.marked.series[r.donor_series];
    const DayRecord& got = done.day(r.day_index);
    const DayRecord& src = donor.day(r.donor_day);
    for (int e = r.epoch_start; e < r.epoch_end; ++e) {
      const auto k = static_cast<std::size_t>(e);
      REQUIRE(got.steps[k] == src.steps[k]);
      REQUIRE(got.vm[k] == src.vm[k]);
      REQUIRE(got.mask[k] == EpochMask::imputed);
    }
    if (r.kind == PoolKind::self) {
      CHECK(r.donor_id == r.participant_id);
      CHECK(r.donor_day != r.day_index);
      CHECK(r.pool_size > 4);
    } else {
      CHECK(r.donor_id != r.participant_id);
      CHECK(r.pool_size >= 1);
    }
  }
  CHECK(kinds.count(PoolKind::self) == 1);
  CHECK(kinds.count(PoolKind::nonself) == 1);
  for (std::size_t i = 0; i < f.marked.series.size(); ++i) {
    const EpochSeries& src = *f.marked.series[i];
    for (int m = 1; m <= cfg.m; ++m) {
      const EpochSeries done = set.completed_series(i, m);
      for (int d = 1; d <= kDaysPerWeek; ++d) {
        for (std::size_t e = 0; e < static_cast<std::size_t>(kEpochsPerDay); ++e) {
          if (src.day(d).mask[e] != EpochMask::observed) continue;
          REQUIRE(done.day(d).steps[e] == src.day(d).steps[e]);
          REQUIRE(done.day(d).vm[e] == src.day(d).vm[e]);
        }
      }
    }
  }
  cfg.threads = 3;
  const ImputationSet threaded = run_np_mi(f.marked, f.cls, cfg);
  REQUIRE(threaded.provenance().size() == set.provenance().size());
  for (std::size_t i = 0; i < set.provenance().size(); ++i) {
    CHECK(threaded.provenance()[i].donor_series == set.provenance()[i].donor_series);
    CHECK(threaded.provenance()[i].donor_day == set.provenance()[i].donor_day);
  }
}

TEST_CASE("non-self selection filters by sex and overlap") {
  const NpFixture f = make_np_fixture(6, 10);
  const Participant target = f.data.participants[0];
  std::vector<DonorCandidate> cands;
  for (std::size_t i = 1; i < f.marked.series.size(); ++i) {
    const auto& p = f.marked.participant(f.marked.series[i]->participant_id());
    if (p.arm != target.arm) continue;
    cands.push_back({i, p, f.marked.series[i].get()});
  }
  const MissingInterval iv{2, hm(10), hm(14), MissingSource::nonwear};
  Engine rng(3);
  const std::vector<MatchVar> vars{MatchVar::age, MatchVar::bmi};
  for (int k = 0; k < 50; ++k) {
    const auto sel = select_nonself_donor(target, iv, cands, vars, rng);
    const DonorCandidate& c = cands[sel.candidate];
    if (sel.relaxation < 2) CHECK(c.participant.sex == target.sex);
    if (sel.relaxation == 0) CHECK(sel.usable_days.size() == 7);
    CHECK_FALSE(sel.usable_days.empty());
    CHECK(std::abs(std::accumulate(sel.weights.begin(), sel.weights.end(), 0.0) - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(select_nonself_donor(target, iv, std::span<const DonorCandidate>{}, vars, rng), EmptyDonorPool);
}
