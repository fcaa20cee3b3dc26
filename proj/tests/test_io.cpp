#include <sstream>
#include <string>

#include <doctest.h>

#include "fixtures.hpp"
#include "wearmi/errors.hpp"
#include "wearmi/io.hpp"
#include "wearmi/scenario.hpp"
#include "wearmi/simgen.hpp"

using namespace wearmi;

namespace {

GeneratedDataset small_dataset() {
  const std::vector<Timepoint> tps{Timepoint::followup};
  return generate_complete_dataset(ActivityProfile{}, 1, tps, 3);
}

std::string epochs_text(const Dataset& d, bool mask = false) {
  std::ostringstream out;
  write_epochs(out, d, mask);
  return out.str();
}

// Replaces the n-th data line (1-based, header excluded).
std::string replace_line(const std::string& text, std::size_t n, const std::string& line) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) pos = text.find('\n', pos) + 1;
  const std::size_t end = text.find('\n', pos);
  return text.substr(0, pos) + line + text.substr(end);
}

std::string drop_line(const std::string& text, std::size_t n) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) pos = text.find('\n', pos) + 1;
  const std::size_t end = text.find('\n', pos);
  return text.substr(0, pos) + text.substr(end + 1);
}

template <class E>
E catch_data_error(const std::string& text, const std::vector<Participant>& people) {
  std::istringstream in(text);
  try {
    ingest_epochs(in, people, "epochs.csv");
  } catch (const E& e) {
    return e;
  }
  FAIL("expected a data error");
  throw;
}

}  // namespace

TEST_CASE("epoch and participant tables round trip") {
  auto g = small_dataset();
  fixtures::TempDir dir("io");
  {
    std::ofstream p(dir / "participants.csv");
    write_participants(p, g.dataset.participants);
    std::ofstream e(dir / "epochs.csv");
    write_epochs(e, g.dataset, false);
  }
  const Dataset back = ingest(dir / "epochs.csv", dir / "participants.csv");
  REQUIRE(back.series.size() == g.dataset.series.size());
  for (std::size_t i = 0; i < back.series.size(); ++i) CHECK(*back.series[i] == *g.dataset.series[i]);
  REQUIRE(back.participants.size() == 3);
  CHECK(back.participants[1].age == g.dataset.participants[1].age);
  CHECK(back.participants[1].bmi == g.dataset.participants[1].bmi);
  CHECK(epochs_text(back) == epochs_text(g.dataset));
}

TEST_CASE("mask column survives a round trip") {
  auto g = small_dataset();
  EpochSeries s = *g.dataset.series[0];
  s.mark_missing(2, 100, 200);
  g.dataset.series[0] = std::make_shared<const EpochSeries>(s);
  std::istringstream in(epochs_text(g.dataset, true));
  const Dataset back = ingest_epochs(in, g.dataset.participants);
  CHECK(back.series[0]->day(2).count_mask(EpochMask::missing) == 100);
}

TEST_CASE("a missing row is a completeness error") {
  const auto g = small_dataset();
  const auto e = catch_data_error<CompletenessError>(drop_line(epochs_text(g.dataset), 500), g.dataset.participants);
  CHECK(e.code() == "CompletenessError");
  CHECK_FALSE(e.violations().empty());
}

TEST_CASE("out-of-range epoch is a schema error with its line number") {
  const auto g = small_dataset();
  const std::string text = epochs_text(g.dataset);
  const std::size_t start = text.find('\n') + 1;
  std::string first = text.substr(start, text.find('\n', start) - start);
  // participant_id,timepoint,day,dow,epoch,vm,steps
  std::vector<std::string> f;
  std::stringstream ss(first);
  for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
  f[4] = "17280";
  std::string bad;
  for (std::size_t i = 0; i < f.size(); ++i) bad += (i ? "," : "") + f[i];
  const auto e = catch_data_error<SchemaError>(replace_line(text, 1, bad), g.dataset.participants);
  REQUIRE(e.violations().size() >= 1);
  CHECK(e.violations()[0].find("epochs.csv:2:") == 0);
  CHECK(e.violations()[0].find("17280") != std::string::npos);
}

TEST_CASE("negative vm and steps without movement are rejected") {
  const auto g = small_dataset();
  const std::string text = epochs_text(g.dataset);
  const std::string pid = g.dataset.series[0]->participant_id();
  const std::string tp(to_string(g.dataset.series[0]->timepoint()));
  const std::string dow(to_string(g.dataset.series[0]->day(1).day_of_week));
  std::string t2 = replace_line(text, 3, pid + "," + tp + ",1," + dow + ",2,-1,0");
  t2 = replace_line(t2, 4, pid + "," + tp + ",1," + dow + ",3,0,4");
  const auto e = catch_data_error<SchemaError>(t2, g.dataset.participants);
  CHECK(e.violations().size() == 2);
}

TEST_CASE("series without a participant row is a cross-reference error") {
  auto g = small_dataset();
  auto people = g.dataset.participants;
  people.pop_back();
  const auto e = catch_data_error<CrossRefError>(epochs_text(g.dataset), people);
  CHECK(e.violations().size() == 1);
}

TEST_CASE("participant table validation") {
  fixtures::TempDir dir("pt");
  fixtures::spit(dir / "p.csv", "participant_id,arm,sex,age,bmi\na,control,female,50,27\nb,placebo,male,x,27\na,nurse,male,60,30\n");
  try {
    read_participants(dir / "p.csv");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.violations().size() >= 3);
  }
}

TEST_CASE("scenario config round trip and validation") {
  ScenarioConfig c;
  c.name = "rt";
  c.n_per_arm = 33;
  c.prop_whole_week = 0.05;
  c.timepoints = 2;
  c.methods = {Method::np_mi, Method::par_mi_generic};
  c.profile.day_cv = 0.4;
  c.classifier.weekend_shift_min = 45;
  std::stringstream first;
  write_scenario_config(first, c);
  std::istringstream in(first.str());
  const ScenarioConfig back = parse_scenario_config(in, "mem");
  std::stringstream second;
  write_scenario_config(second, back);
  CHECK(first.str() == second.str());
  CHECK(back.methods == c.methods);

  std::istringstream unknown("n_per_arm = 10\nbogus = 1\n");
  CHECK_THROWS_AS(parse_scenario_config(unknown, "mem"), ConfigError);
  std::istringstream bad_value("n_per_arm = ten\n");
  CHECK_THROWS_AS(parse_scenario_config(bad_value, "mem"), ConfigError);
}

TEST_CASE("pipeline config round trip omits threads") {
  PipelineConfig c;
  c.m = 7;
  c.seed = 99;
  c.threads = 8;
  c.mode = BoundMode::generic;
  c.same_arm = false;
  c.match_vars = {MatchVar::bmi, MatchVar::baseline_mean_steps};
  c.model = "trial";
  c.interval = IntervalMethod::normal;
  std::stringstream first;
  write_pipeline_config(first, c);
  CHECK(first.str().find("threads") == std::string::npos);
  std::istringstream in(first.str());
  const PipelineConfig back = parse_pipeline_config(in, "mem");
  CHECK(back.m == 7);
  CHECK(back.seed == 99);
  CHECK(back.threads == 1);
  CHECK(back.match_vars == c.match_vars);
  std::stringstream second;
  write_pipeline_config(second, back);
  CHECK(first.str() == second.str());
}

TEST_CASE("staged output appears only on commit") {
  fixtures::TempDir dir("stage");
  const auto target = dir / "bundle";
  {
    StagedOutput out(target);
    out.write("a.txt", [](std::ostream& s) { s << "x"; });
  }
  CHECK_FALSE(std::filesystem::exists(target));
  CHECK(std::filesystem::is_empty(dir.path()));
  {
    StagedOutput out(target.string() + "/");
    out.write("a.txt", [](std::ostream& s) { s << "x"; });
    out.commit();
  }
  CHECK(fixtures::slurp(target / "a.txt") == "x");
  CHECK(std::distance(std::filesystem::directory_iterator(dir.path()), {}) == 1);
}

TEST_CASE("number formatting is shortest round trip") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(std::nan("")) == "NA");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}
