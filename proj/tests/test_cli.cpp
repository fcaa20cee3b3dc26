#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result wearmi_run(std::vector<std::string> args) {
  args.insert(args.begin(), "wearmi");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = wearmi::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const std::string kScenario = std::string(WEARMI_SOURCE_DIR) + "/data/scenarios/s1.cfg";

void generate(const fs::path& dir, int n, double prop, const std::string& seed = "5") {
  const auto r = wearmi_run({"generate", "--config", kScenario, "--out-dir", dir.string(), "--seed", seed,
                             "--n-per-arm", std::to_string(n), "--timepoints", "1", "--prop-pattern",
                             std::to_string(prop)});
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

nlohmann::json error_of(const Result& r) { return nlohmann::json::parse(r.err); }

}  // namespace

TEST_CASE("classify reports a fully complete census on complete data") {
  fixtures::TempDir dir("cli_census");
  generate(dir / "gen", 2, 0.0);
  const auto r = wearmi_run({"classify", "--epochs", (dir / "gen/epochs.csv").string(), "--participants",
                             (dir / "gen/participants.csv").string(), "--out-dir", (dir / "cls").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string census = fixtures::slurp(dir / "cls/census.csv");
  CHECK(census.find("Completely observed,6 (100%)") != std::string::npos);
  CHECK(fixtures::slurp(dir / "cls/intervals.csv").find('\n') == fixtures::slurp(dir / "cls/intervals.csv").size() - 1);
}

TEST_CASE("reruns are byte identical across thread counts") {
  fixtures::TempDir dir("cli_det");
  generate(dir / "g1", 2, 0.5);
  generate(dir / "g2", 2, 0.5);
  CHECK(fixtures::slurp(dir / "g1/epochs.csv") == fixtures::slurp(dir / "g2/epochs.csv"));
  const std::string epochs = (dir / "g1/epochs.csv").string(), people = (dir / "g1/participants.csv").string();
  for (const char* t : {"1", "4"}) {
    const auto r = wearmi_run({"impute-np", "--epochs", epochs, "--participants", people, "--out-dir",
                               (dir / (std::string("np") + t)).string(), "--seed", "11", "--m", "2", "--threads", t});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  for (const char* f : {"config.ini", "intervals.csv", "provenance.csv", "completed_m01.csv", "completed_m02.csv"}) {
    CAPTURE(f);
    CHECK(fixtures::slurp(dir / "np1" / f) == fixtures::slurp(dir / "np4" / f));
  }
}

TEST_CASE("randomized commands need a seed") {
  fixtures::TempDir dir("cli_seed");
  generate(dir / "gen", 1, 0.0);
  const auto r = wearmi_run({"impute-np", "--epochs", (dir / "gen/epochs.csv").string(), "--participants",
                             (dir / "gen/participants.csv").string(), "--out-dir", (dir / "np").string()});
  CHECK(r.code == 1);
  const auto j = error_of(r);
  CHECK(j["status"] == "error");
  CHECK(j["command"] == "impute-np");
  CHECK(j["error"] == "ConfigError");
  CHECK_FALSE(fs::exists(dir / "np"));
  fixtures::spit(dir / "seed.cfg", "seed = 4\nm = 2\n");
  const auto ok = wearmi_run({"impute-np", "--epochs", (dir / "gen/epochs.csv").string(), "--participants",
                              (dir / "gen/participants.csv").string(), "--out-dir", (dir / "np").string(),
                              "--config", (dir / "seed.cfg").string()});
  CHECK_MESSAGE(ok.code == 0, ok.err);
}

TEST_CASE("bad input yields a JSON error report with violations") {
  fixtures::TempDir dir("cli_err");
  generate(dir / "gen", 1, 0.0);
  std::string text = fixtures::slurp(dir / "gen/epochs.csv");
  text.resize(text.size() / 2);
  text.resize(text.rfind('\n') + 1);
  fixtures::spit(dir / "cut.csv", text);
  const auto r = wearmi_run({"classify", "--epochs", (dir / "cut.csv").string(), "--participants",
                             (dir / "gen/participants.csv").string(), "--out-dir", (dir / "cls").string()});
  CHECK(r.code == 1);
  const auto j = error_of(r);
  CHECK(j["error"] == "CompletenessError");
  CHECK(j["violations"].is_array());
  CHECK_FALSE(fs::exists(dir / "cls"));
}

TEST_CASE("usage errors exit with status 2") {
  const auto r = wearmi_run({"classify", "--participants", "/nonexistent/p.csv", "--out-dir", "/tmp/x"});
  CHECK(r.code == 2);
  CHECK(error_of(r)["error"] == "UsageError");
  CHECK(wearmi_run({"frobnicate"}).code == 2);
}

TEST_CASE("analyze and pool over imputed bundles") {
  fixtures::TempDir dir("cli_an");
  generate(dir / "gen", 20, 0.2);
  const std::string epochs = (dir / "gen/epochs.csv").string(), people = (dir / "gen/participants.csv").string();
  REQUIRE(wearmi_run({"impute-par", "--epochs", epochs, "--participants", people, "--out-dir", (dir / "par").string(),
                      "--seed", "3", "--m", "3"}).code == 0);
  const auto an = wearmi_run({"analyze", "--participants", people, "--imputed", (dir / "par").string(), "--out-dir",
                              (dir / "an").string()});
  REQUIRE_MESSAGE(an.code == 0, an.err);
  const auto pl = wearmi_run({"pool", "--fits", (dir / "an/fits.csv").string(), "--out-dir", (dir / "pool").string()});
  REQUIRE_MESSAGE(pl.code == 0, pl.err);
  const std::string pooled = fixtures::slurp(dir / "pool/pooled.csv");
  CHECK(pooled.rfind("term,estimate,se,ci_lower,ci_upper,df,within_var,between_var,total_var,m", 0) == 0);
  CHECK(pooled.find("mean_control") != std::string::npos);
  CHECK(pooled.find("mean_nurse") != std::string::npos);
}
