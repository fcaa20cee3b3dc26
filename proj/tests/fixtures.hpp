#pragma once

#include <unistd.h>

#include <cstdint>
#include <string>
#include <vector>

#include "wearmi/core.hpp"
#include "wearmi/rng.hpp"

namespace fixtures {

using namespace wearmi;

/// A week built from one VM value per epoch; steps are zero unless given.
inline EpochSeries series_from_vm(const std::string& id, Timepoint tp, DayOfWeek first, const std::vector<float>& vm,
                                  const std::vector<std::uint16_t>& steps = {}) {
  std::vector<DayRecord> days;
  for (int d = 0; d < kDaysPerWeek; ++d) {
    DayRecord r = DayRecord::zeros(d + 1, shift_day(first, d));
    for (int e = 0; e < kEpochsPerDay; ++e) {
      const auto t = static_cast<std::size_t>(std::int64_t{d} * kEpochsPerDay + e);
      r.vm[static_cast<std::size_t>(e)] = vm[t];
      if (!steps.empty()) r.steps[static_cast<std::size_t>(e)] = steps[t];
    }
    days.push_back(std::move(r));
  }
  return EpochSeries(id, tp, std::move(days));
}

/// Awake everywhere (VM 50, a few steps) except the listed zero spans.
struct SpanSpec {
  std::int64_t start;
  std::int64_t end;
};

inline EpochSeries awake_week_with_zeros(const std::string& id, Timepoint tp, DayOfWeek first,
                                         const std::vector<SpanSpec>& zeros, Engine* rng = nullptr) {
  std::vector<float> vm(static_cast<std::size_t>(kEpochsPerWeek), 50.0f);
  std::vector<std::uint16_t> steps(static_cast<std::size_t>(kEpochsPerWeek), 0);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    steps[t] = rng ? static_cast<std::uint16_t>(uniform_index(*rng, 12)) : static_cast<std::uint16_t>(t % 7);
    vm[t] = 40.0f + static_cast<float>(steps[t]) * 5.0f;
  }
  for (const auto& z : zeros) {
    for (std::int64_t t = std::max<std::int64_t>(0, z.start); t < std::min(z.end, kEpochsPerWeek); ++t) {
      vm[static_cast<std::size_t>(t)] = 0.0f;
      steps[static_cast<std::size_t>(t)] = 0;
    }
  }
  return series_from_vm(id, tp, first, vm, steps);
}

}  // namespace fixtures

namespace fixtures {

/// Alternating zero and nonzero blocks up to `max_len` epochs. Block lengths
/// cluster around the detection thresholds; nonzero values occasionally
/// exceed the spike threshold.
inline std::vector<float> random_zero_sequence(Engine& rng, std::int64_t max_len) {
  const auto len = static_cast<std::int64_t>(1 + uniform_index(rng, static_cast<std::size_t>(max_len)));
  std::vector<float> vm;
  vm.reserve(static_cast<std::size_t>(len));
  bool zero = uniform01(rng) < 0.5;
  auto pick = [&](std::initializer_list<std::pair<int, int>> ranges) {
    const auto k = uniform_index(rng, ranges.size());
    const auto [lo, hi] = *(ranges.begin() + k);
    return lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
  };
  while (static_cast<std::int64_t>(vm.size()) < len) {
    const int n = zero ? pick({{1, 60}, {300, 400}, {340, 380}, {700, 740}, {1060, 1100}, {719, 721}, {1, 3000}})
                       : pick({{1, 6}, {10, 14}, {22, 26}, {34, 38}, {58, 62}, {1, 400}});
    for (int i = 0; i < n && static_cast<std::int64_t>(vm.size()) < len; ++i) {
      vm.push_back(zero ? 0.0f : (uniform01(rng) < 0.05 ? 800.0f : 1.0f + static_cast<float>(uniform_index(rng, 300))));
    }
    zero = !zero;
  }
  return vm;
}

}  // namespace fixtures

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fixtures {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("wearmi_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace fixtures
