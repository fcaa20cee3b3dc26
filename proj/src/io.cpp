#include "wearmi/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "wearmi/errors.hpp"
#include "wearmi/scenario.hpp"

namespace wearmi {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_int(std::string_view s) {
  s = trim(s);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<float> parse_float(std::string_view s) {
  s = trim(s);
  float v = 0.0f;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError({fmt::format("{}: cannot open file", path.string())});
  return in;
}

std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < header.size(); ++i) idx[std::string(trim(header[i]))] = i;
  return idx;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw SchemaError({fmt::format("missing column '{}'", name)});
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in = open_input(path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError({path.string() + ": empty file"});
  t.header = split_csv_line(line);
  std::size_t lineno = 1;
  std::vector<std::string> bad;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != t.header.size()) {
      bad.push_back(fmt::format("{}:{}: expected {} fields, found {}", path.string(), lineno, t.header.size(), row.size()));
      continue;
    }
    t.rows.push_back(std::move(row));
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));
  return t;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  return fmt::format("{}", x);
}

std::string format_number(float x) {
  if (std::isnan(x)) return "NA";
  return fmt::format("{}", x);
}

// ---------------------------------------------------------------------------
// Participants

std::vector<Participant> read_participants(const fs::path& path) {
  std::ifstream in = open_input(path);
  const std::string label = path.string();
  std::string line;
  if (!std::getline(in, line)) throw SchemaError({label + ": empty file"});
  const auto header = split_csv_line(line);
  const auto idx = header_index(header);
  std::vector<std::string> bad;
  for (const char* col : {"participant_id", "arm", "sex", "age", "bmi"}) {
    if (!idx.contains(col)) bad.push_back(fmt::format("{}:1: missing column '{}'", label, col));
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));
  auto col = [&](const char* name) { return idx.at(name); };
  const auto practice = idx.find("practice");

  std::vector<Participant> out;
  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      bad.push_back(fmt::format("{}:{}: expected {} fields, found {}", label, lineno, header.size(), f.size()));
      continue;
    }
    Participant p;
    p.id = f[col("participant_id")];
    const auto arm = parse_arm(f[col("arm")]);
    const auto sex = parse_sex(f[col("sex")]);
    const auto age = parse_double(f[col("age")]);
    const auto bmi = parse_double(f[col("bmi")]);
    std::vector<std::string> issues;
    if (p.id.empty()) issues.push_back("empty participant_id");
    if (!arm) issues.push_back(fmt::format("invalid arm '{}'", f[col("arm")]));
    if (!sex) issues.push_back(fmt::format("invalid sex '{}'", f[col("sex")]));
    if (!age || *age < 0) issues.push_back(fmt::format("invalid age '{}'", f[col("age")]));
    if (!bmi || *bmi <= 0) issues.push_back(fmt::format("invalid bmi '{}'", f[col("bmi")]));
    if (!p.id.empty() && !seen.insert(p.id).second) issues.push_back(fmt::format("duplicate participant_id '{}'", p.id));
    for (const auto& i : issues) bad.push_back(fmt::format("{}:{}: {}", label, lineno, i));
    if (!issues.empty()) continue;
    p.arm = *arm;
    p.sex = *sex;
    p.age = *age;
    p.bmi = *bmi;
    if (practice != idx.end()) p.practice = f[practice->second];
    out.push_back(std::move(p));
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));
  return out;
}

void write_participants(std::ostream& out, const std::vector<Participant>& participants) {
  const bool practice = std::any_of(participants.begin(), participants.end(),
                                    [](const Participant& p) { return !p.practice.empty(); });
  out << "participant_id,arm,sex,age,bmi" << (practice ? ",practice" : "") << '\n';
  for (const auto& p : participants) {
    out << p.id << ',' << to_string(p.arm) << ',' << to_string(p.sex) << ',' << format_number(p.age) << ','
        << format_number(p.bmi);
    if (practice) out << ',' << p.practice;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Epochs

namespace {

struct DayBuffer {
  bool seen = false;
  DayOfWeek dow = DayOfWeek::mon;
  int count = 0;
  std::vector<float> vm;
  std::vector<std::uint16_t> steps;
  std::vector<EpochMask> mask;
  std::vector<std::uint32_t> line;  // 0 = not yet seen
};

struct Block {
  std::string pid;
  Timepoint tp = Timepoint::baseline;
  std::size_t first_line = 0;
  int filled = 0;
  std::array<DayBuffer, kDaysPerWeek> days;
  SeriesPtr series;
  bool done = false;
};

}  // namespace

Dataset ingest_epochs(std::istream& in, std::vector<Participant> participants, const std::string& label) {
  std::vector<std::string> schema, completeness, crossref;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError({label + ": empty file"});
  const auto header = split_csv_line(line);
  const auto idx = header_index(header);
  for (const char* c : {"participant_id", "timepoint", "day", "dow", "epoch", "vm", "steps"}) {
    if (!idx.contains(c)) schema.push_back(fmt::format("{}:1: missing column '{}'", label, c));
  }
  if (!schema.empty()) throw SchemaError(std::move(schema));
  const std::size_t c_pid = idx.at("participant_id"), c_tp = idx.at("timepoint"), c_day = idx.at("day"),
                    c_dow = idx.at("dow"), c_epoch = idx.at("epoch"), c_vm = idx.at("vm"), c_steps = idx.at("steps");
  const auto mask_it = idx.find("mask");
  const bool has_mask = mask_it != idx.end();

  std::vector<std::unique_ptr<Block>> blocks;
  std::map<std::pair<std::string, Timepoint>, std::size_t> block_of;

  auto finalize = [&](Block& b) {
    std::vector<DayRecord> days;
    for (int d = 0; d < kDaysPerWeek; ++d) {
      DayBuffer& buf = b.days[static_cast<std::size_t>(d)];
      DayRecord r;
      r.day_index = d + 1;
      r.day_of_week = buf.dow;
      r.vm = std::move(buf.vm);
      r.steps = std::move(buf.steps);
      r.mask = std::move(buf.mask);
      buf.line.clear();
      buf.line.shrink_to_fit();
      days.push_back(std::move(r));
    }
    try {
      b.series = std::make_shared<const EpochSeries>(b.pid, b.tp, std::move(days));
    } catch (const InvalidArgument& e) {
      schema.push_back(fmt::format("{}:{}: participant {} {}: {}", label, b.first_line, b.pid, to_string(b.tp), e.what()));
    }
    b.done = true;
  };

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    auto bad = [&](const std::string& what) { schema.push_back(fmt::format("{}:{}: {}", label, lineno, what)); };
    if (f.size() != header.size()) {
      bad(fmt::format("expected {} fields, found {}", header.size(), f.size()));
      continue;
    }
    const std::string& pid = f[c_pid];
    const auto tp = parse_timepoint(f[c_tp]);
    const auto day = parse_int<int>(f[c_day]);
    const auto dow = parse_day_of_week(f[c_dow]);
    const auto epoch = parse_int<int>(f[c_epoch]);
    const auto vm = parse_float(f[c_vm]);
    const auto steps = parse_int<int>(f[c_steps]);
    std::optional<EpochMask> mask = EpochMask::observed;
    if (has_mask) mask = parse_mask(f[mask_it->second]);
    const std::size_t before = schema.size();
    if (pid.empty()) bad("empty participant_id");
    if (!tp) bad(fmt::format("invalid timepoint '{}'", f[c_tp]));
    if (!day || *day < 1 || *day > kDaysPerWeek) bad(fmt::format("day '{}' outside 1-7", f[c_day]));
    if (!dow) bad(fmt::format("invalid dow '{}'", f[c_dow]));
    if (!epoch || *epoch < 0 || *epoch >= kEpochsPerDay) bad(fmt::format("epoch '{}' outside 0-17279", f[c_epoch]));
    if (!vm || *vm < 0.0f) bad(fmt::format("invalid vm '{}'", f[c_vm]));
    if (!steps || *steps < 0 || *steps > 65535) bad(fmt::format("invalid steps '{}'", f[c_steps]));
    if (!mask) bad(fmt::format("invalid mask '{}'", f[mask_it->second]));
    if (vm && steps && *steps > 0 && *vm <= 0.0f) bad("steps recorded with zero vm");
    if (schema.size() != before) continue;

    const auto key = std::make_pair(pid, *tp);
    auto it = block_of.find(key);
    if (it == block_of.end()) {
      auto b = std::make_unique<Block>();
      b->pid = pid;
      b->tp = *tp;
      b->first_line = lineno;
      it = block_of.emplace(key, blocks.size()).first;
      blocks.push_back(std::move(b));
    }
    Block& b = *blocks[it->second];
    if (b.done) {
      bad(fmt::format("participant {} {} day {} epoch {}: duplicate row", pid, to_string(*tp), *day, *epoch));
      continue;
    }
    DayBuffer& buf = b.days[static_cast<std::size_t>(*day - 1)];
    if (!buf.seen) {
      buf.seen = true;
      buf.dow = *dow;
      buf.vm.assign(kEpochsPerDay, 0.0f);
      buf.steps.assign(kEpochsPerDay, 0);
      buf.mask.assign(kEpochsPerDay, EpochMask::observed);
      buf.line.assign(kEpochsPerDay, 0);
    } else if (buf.dow != *dow) {
      bad(fmt::format("participant {} {} day {}: dow '{}' differs from '{}' given earlier", pid, to_string(*tp), *day,
                      f[c_dow], to_string(buf.dow)));
      continue;
    }
    const auto e = static_cast<std::size_t>(*epoch);
    if (buf.line[e] != 0) {
      bad(fmt::format("participant {} {} day {} epoch {}: duplicate of line {}", pid, to_string(*tp), *day, *epoch,
                      buf.line[e]));
      continue;
    }
    buf.line[e] = static_cast<std::uint32_t>(lineno);
    buf.vm[e] = *vm;
    buf.steps[e] = static_cast<std::uint16_t>(*steps);
    buf.mask[e] = *mask;
    ++buf.count;
    if (++b.filled == kDaysPerWeek * kEpochsPerDay) finalize(b);
  }

  for (const auto& bp : blocks) {
    const Block& b = *bp;
    if (b.done) continue;
    for (int d = 0; d < kDaysPerWeek; ++d) {
      const DayBuffer& buf = b.days[static_cast<std::size_t>(d)];
      if (!buf.seen) {
        completeness.push_back(fmt::format("{}: participant {} {} day {}: no rows", label, b.pid, to_string(b.tp), d + 1));
      } else if (buf.count < kEpochsPerDay) {
        const auto first_gap = std::find(buf.line.begin(), buf.line.end(), 0u) - buf.line.begin();
        completeness.push_back(fmt::format("{}: participant {} {} day {}: {} of {} epochs present (first missing epoch {})",
                                           label, b.pid, to_string(b.tp), d + 1, buf.count, kEpochsPerDay, first_gap));
      }
    }
  }

  std::set<std::string> known;
  for (const auto& p : participants) known.insert(p.id);
  for (const auto& bp : blocks) {
    if (!known.contains(bp->pid)) {
      crossref.push_back(fmt::format("{}:{}: participant {} is not in the participant table", label, bp->first_line, bp->pid));
    }
  }

  if (!schema.empty()) throw SchemaError(std::move(schema));
  if (!completeness.empty()) throw CompletenessError(std::move(completeness));
  if (!crossref.empty()) throw CrossRefError(std::move(crossref));

  Dataset data;
  data.participants = std::move(participants);
  for (auto& bp : blocks) data.series.push_back(std::move(bp->series));
  return data;
}

Dataset ingest(const fs::path& epochs, const fs::path& participants) {
  std::vector<Participant> people = read_participants(participants);
  std::ifstream in = open_input(epochs);
  return ingest_epochs(in, std::move(people), epochs.string());
}

void write_epochs(std::ostream& out, const Dataset& data, bool with_mask) {
  out << "participant_id,timepoint,day,dow,epoch,vm,steps" << (with_mask ? ",mask" : "") << '\n';
  std::string buf;
  for (const auto& sp : data.series) {
    const EpochSeries& s = *sp;
    const std::string prefix = fmt::format("{},{},", s.participant_id(), to_string(s.timepoint()));
    for (const auto& d : s.days()) {
      const std::string day_prefix = fmt::format("{}{},{},", prefix, d.day_index, to_string(d.day_of_week));
      buf.clear();
      for (std::size_t e = 0; e < static_cast<std::size_t>(kEpochsPerDay); ++e) {
        fmt::format_to(std::back_inserter(buf), "{}{},{},{}", day_prefix, e, d.vm[e], d.steps[e]);
        if (with_mask) {
          buf += ',';
          buf += to_string(d.mask[e]);
        }
        buf += '\n';
      }
      out << buf;
    }
  }
}

// ---------------------------------------------------------------------------
// Classification outputs

namespace {

std::string clock_of(std::int64_t t) {
  return format_clock(epoch_to_clock(static_cast<int>(t % kEpochsPerDay)));
}

}  // namespace

void write_periods(std::ostream& out, std::span<const SeriesClassification> classification) {
  out << "participant_id,timepoint,start_day,start_time,end_day,end_time,duration_min,class,boundary_spike\n";
  for (const auto& c : classification) {
    for (const auto& p : c.periods) {
      const auto s = start_position(p.start);
      const auto e = end_position(p.end);
      out << fmt::format("{},{},{},{},{},{},{},{},{}\n", c.participant_id, to_string(c.timepoint), s.day_index,
                         clock_of(p.start), e.day_index,
                         e.epoch == kEpochsPerDay ? std::string("24:00:00") : clock_of(p.end),
                         format_number(p.duration_min), to_string(p.cls), p.boundary_spike ? 1 : 0);
    }
  }
}

void write_intervals(std::ostream& out, std::span<const SeriesClassification> classification) {
  out << "participant_id,timepoint,day,epoch_start,epoch_end,start_time,end_time,source\n";
  for (const auto& c : classification) {
    for (const auto& iv : c.intervals) {
      out << fmt::format("{},{},{},{},{},{},{},{}\n", c.participant_id, to_string(c.timepoint), iv.day_index,
                         iv.epoch_start, iv.epoch_end, format_clock(epoch_to_clock(iv.epoch_start)),
                         iv.epoch_end == kEpochsPerDay ? std::string("24:00:00")
                                                       : format_clock(epoch_to_clock(iv.epoch_end)),
                         to_string(iv.source));
    }
  }
}

void write_sleep_windows(std::ostream& out, std::span<const SeriesClassification> classification) {
  out << "participant_id,timepoint,scope,bed_time,wake_time,from_population,whole_week\n";
  for (const auto& c : classification) {
    for (SleepScope scope : {SleepScope::weekday, SleepScope::weekend}) {
      const auto& w = c.windows.for_scope(scope);
      out << fmt::format("{},{},{},{},{},{},{}\n", c.participant_id, to_string(c.timepoint), to_string(scope),
                         w ? format_clock(epoch_to_clock(w->bed_epoch)) : "NA",
                         w ? format_clock(epoch_to_clock(w->wake_epoch)) : "NA", c.window_from_population ? 1 : 0,
                         c.whole_week ? 1 : 0);
    }
  }
}

void write_census(std::ostream& out, const Census& census) {
  out << "category,value\n";
  for (const auto& [k, v] : census.rows()) out << k << ',' << v << '\n';
}

void write_daily_weartime(std::ostream& out, std::span<const SeriesClassification> classification) {
  out << "participant_id,timepoint,day,weartime_min,missing_type\n";
  for (const auto& c : classification) {
    for (int d = 0; d < kDaysPerWeek; ++d) {
      out << fmt::format("{},{},{},{},{}\n", c.participant_id, to_string(c.timepoint), d + 1,
                         format_number(c.weartime[static_cast<std::size_t>(d)]), to_string(missing_type(c)));
    }
  }
}

// ---------------------------------------------------------------------------
// Imputation outputs

void write_provenance(std::ostream& out, const ImputationSet& set) {
  out << "m,participant_id,timepoint,day,epoch_start,epoch_end,donor_id,donor_day,pool_kind,pool_size,relaxation\n";
  for (const auto& r : set.provenance()) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.m, r.participant_id, to_string(r.timepoint), r.day_index,
                       r.epoch_start, r.epoch_end, r.donor_id, r.donor_day, to_string(r.kind), r.pool_size,
                       r.relaxation);
  }
}

void write_par_completed(std::ostream& out, const ParTable& table, const ParMiResult& result, int m, BoundMode mode,
                         const BoundsConfig& bounds) {
  out << "m,participant_id,arm,timepoint,day,status,y_obs,lambda,lower,upper,steps\n";
  const Eigen::MatrixXd& c = result.completed.at(static_cast<std::size_t>(m - 1));
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (std::size_t j = 0; j < table.columns(); ++j) {
      const DayOutcome& o = table.outcomes[i][j];
      const Bounds b = outcome_bounds(o, mode, bounds);
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", m, table.participant_ids[i], to_string(table.arms[i]),
                         to_string(o.timepoint), o.day_index, to_string(o.status), format_number(o.y_obs), o.lambda,
                         format_number(b.lower), format_number(b.upper),
                         format_number(c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
  }
}

void write_fit_diagnostics(std::ostream& out, const std::vector<FitDiagnostic>& diagnostics) {
  out << "arm,m,cycle,column,converged,iterations,loglik\n";
  for (const auto& d : diagnostics) {
    out << fmt::format("{},{},{},{},{},{},{}\n", to_string(d.arm), d.m, d.cycle, d.column, d.converged ? 1 : 0,
                       d.iterations, format_number(d.loglik));
  }
}

// ---------------------------------------------------------------------------
// Pattern library

void write_pattern_library(std::ostream& out, std::span<const MissingnessPattern> patterns) {
  out << "pattern_id,source_id,day_offset,epoch_start,epoch_end,kind\n";
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    for (const auto& e : patterns[i].entries) {
      out << fmt::format("{},{},{},{},{},{}\n", i + 1, patterns[i].source_id, e.day_offset, e.epoch_start, e.epoch_end,
                         to_string(e.kind));
    }
  }
}

std::vector<MissingnessPattern> read_pattern_library(std::istream& in, const std::string& label) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError({label + ": empty file"});
  const auto header = split_csv_line(line);
  const auto idx = header_index(header);
  std::vector<std::string> bad;
  for (const char* c : {"pattern_id", "source_id", "day_offset", "epoch_start", "epoch_end", "kind"}) {
    if (!idx.contains(c)) bad.push_back(fmt::format("{}:1: missing column '{}'", label, c));
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));
  std::vector<MissingnessPattern> out;
  std::map<long, std::size_t> by_id;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      bad.push_back(fmt::format("{}:{}: expected {} fields, found {}", label, lineno, header.size(), f.size()));
      continue;
    }
    const auto id = parse_int<long>(f[idx.at("pattern_id")]);
    const auto day = parse_int<int>(f[idx.at("day_offset")]);
    const auto s = parse_int<int>(f[idx.at("epoch_start")]);
    const auto e = parse_int<int>(f[idx.at("epoch_end")]);
    const std::string& kind = f[idx.at("kind")];
    if (!id || !day || !s || !e || *day < 0 || *day >= kDaysPerWeek || *s < 0 || *s >= kEpochsPerDay || *e <= *s ||
        (kind != "nonwear" && kind != "sleep_extra")) {
      bad.push_back(fmt::format("{}:{}: malformed pattern entry", label, lineno));
      continue;
    }
    auto it = by_id.find(*id);
    if (it == by_id.end()) {
      it = by_id.emplace(*id, out.size()).first;
      out.push_back({f[idx.at("source_id")], {}});
    }
    out[it->second].entries.push_back(
        {*day, *s, *e, kind == "nonwear" ? MissingSource::nonwear : MissingSource::sleep_extra});
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));
  return out;
}

std::vector<MissingnessPattern> read_pattern_library(const fs::path& path) {
  std::ifstream in = open_input(path);
  return read_pattern_library(in, path.string());
}

// ---------------------------------------------------------------------------
// Scenario configuration

namespace {

template <typename C>
struct ConfigKey {
  std::string name;
  std::function<void(C&, std::string_view)> set;
  std::function<std::string(const C&)> get;
};

template <typename T>
T parse_value(std::string_view key, std::string_view v) {
  if constexpr (std::is_same_v<T, bool>) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
  } else if constexpr (std::is_integral_v<T>) {
    if (auto x = parse_int<T>(v)) return *x;
  } else {
    if (auto x = parse_double(v)) return *x;
  }
  throw ConfigError(fmt::format("invalid value '{}' for '{}'", v, key));
}

template <typename T>
std::string show(const T& v) {
  if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
  else if constexpr (std::is_integral_v<T>) return std::to_string(v);
  else return format_number(static_cast<double>(v));
}

template <typename T, typename C, typename Get>
ConfigKey<C> make_key(std::string name, Get get) {
  return ConfigKey<C>{name, [get, name](C& c, std::string_view v) { get(c) = parse_value<T>(name, v); },
                      [get](const C& c) { return show(get(const_cast<C&>(c))); }};
}

template <typename C, typename Field>
void add_classifier_keys(std::vector<ConfigKey<C>>& k, Field field) {
  auto add = [&]<typename T>(std::string name, T ClassifierConfig::*member) {
    k.push_back(make_key<T, C>("classifier." + name,
                               [field, member](C& c) -> T& { return field(c).*member; }));
  };
  add("min_zero_run_min", &ClassifierConfig::min_zero_run_min);
  add("spike_tolerance_min", &ClassifierConfig::spike_tolerance_min);
  add("spike_window_min", &ClassifierConfig::spike_window_min);
  add("vm_spike_threshold", &ClassifierConfig::vm_spike_threshold);
  add("weekend_shift_min", &ClassifierConfig::weekend_shift_min);
  add("whole_week_weartime_min", &ClassifierConfig::whole_week_weartime_min);
  add("whole_week_day_count", &ClassifierConfig::whole_week_day_count);
  add("complete_case_weartime_min", &ClassifierConfig::complete_case_weartime_min);
}

template <typename C>
C parse_config(std::istream& in, const std::string& label, const std::vector<ConfigKey<C>>& keys, C cfg) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("{}:{}: expected key = value", label, lineno));
    const std::string key(trim(s.substr(0, eq)));
    const std::string_view value = trim(s.substr(eq + 1));
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey<C>& k) { return k.name == key; });
    if (it == keys.end()) throw ConfigError(fmt::format("{}:{}: unknown key '{}'", label, lineno, key));
    try {
      it->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", label, lineno, e.what()));
    }
  }
  return cfg;
}

#define WEARMI_KEY(T, key, expr) make_key<T, ScenarioConfig>(key, [](ScenarioConfig& c) -> T& { return expr; })

const std::vector<ConfigKey<ScenarioConfig>>& scenario_keys() {
  static const std::vector<ConfigKey<ScenarioConfig>> keys = [] {
    std::vector<ConfigKey<ScenarioConfig>> k;
    k.push_back({"name", [](ScenarioConfig& c, std::string_view v) { c.name = std::string(v); },
                 [](const ScenarioConfig& c) { return c.name; }});
    k.push_back(WEARMI_KEY(int, "n_per_arm", c.n_per_arm));
    k.push_back(WEARMI_KEY(int, "pool_per_arm", c.pool_per_arm));
    k.push_back(WEARMI_KEY(double, "prop_pattern", c.prop_pattern));
    k.push_back(WEARMI_KEY(double, "prop_whole_week", c.prop_whole_week));
    k.push_back(WEARMI_KEY(int, "timepoints", c.timepoints));
    k.push_back(WEARMI_KEY(int, "m", c.m));
    k.push_back(WEARMI_KEY(int, "replications", c.replications));
    k.push_back({"methods",
                 [](ScenarioConfig& c, std::string_view v) {
                   c.methods.clear();
                   for (const auto& item : split_csv_line(v)) {
                     const auto m = parse_method(item);
                     if (!m) throw ConfigError(fmt::format("unknown method '{}'", item));
                     c.methods.push_back(*m);
                   }
                 },
                 [](const ScenarioConfig& c) {
                   std::string s;
                   for (Method m : c.methods) s += (s.empty() ? "" : ",") + std::string(to_string(m));
                   return s;
                 }});
    k.push_back(WEARMI_KEY(std::uint64_t, "master_seed", c.master_seed));
    k.push_back(WEARMI_KEY(bool, "stratified", c.stratified));
    k.push_back(WEARMI_KEY(int, "par_cycles", c.par_cycles));
    k.push_back({"pattern_library", [](ScenarioConfig& c, std::string_view v) { c.pattern_library = std::string(v); },
                 [](const ScenarioConfig& c) { return c.pattern_library; }});
    k.push_back(WEARMI_KEY(int, "library_size", c.library_size));
    k.push_back(WEARMI_KEY(std::uint64_t, "library_seed", c.library_seed));

    k.push_back(WEARMI_KEY(double, "profile.age_min", c.profile.age_min));
    k.push_back(WEARMI_KEY(double, "profile.age_max", c.profile.age_max));
    k.push_back(WEARMI_KEY(double, "profile.bmi_mean", c.profile.bmi_mean));
    k.push_back(WEARMI_KEY(double, "profile.bmi_sd", c.profile.bmi_sd));
    k.push_back(WEARMI_KEY(double, "profile.bmi_min", c.profile.bmi_min));
    k.push_back(WEARMI_KEY(double, "profile.bmi_max", c.profile.bmi_max));
    k.push_back(WEARMI_KEY(double, "profile.prop_male", c.profile.prop_male));
    k.push_back(WEARMI_KEY(double, "profile.base_steps", c.profile.base_steps));
    k.push_back(WEARMI_KEY(double, "profile.age_effect", c.profile.age_effect));
    k.push_back(WEARMI_KEY(double, "profile.bmi_effect", c.profile.bmi_effect));
    k.push_back(WEARMI_KEY(double, "profile.male_effect", c.profile.male_effect));
    k.push_back(WEARMI_KEY(double, "profile.person_sd", c.profile.person_sd));
    k.push_back(WEARMI_KEY(double, "profile.day_cv", c.profile.day_cv));
    k.push_back(WEARMI_KEY(double, "profile.weekend_factor", c.profile.weekend_factor));
    k.push_back(WEARMI_KEY(double, "profile.shift_control", c.profile.arm_shift[0]));
    k.push_back(WEARMI_KEY(double, "profile.shift_postal", c.profile.arm_shift[1]));
    k.push_back(WEARMI_KEY(double, "profile.shift_nurse", c.profile.arm_shift[2]));
    k.push_back(WEARMI_KEY(double, "profile.shift_sd", c.profile.arm_shift_sd));
    k.push_back(WEARMI_KEY(double, "profile.baseline_followup_corr", c.profile.baseline_followup_corr));
    k.push_back(WEARMI_KEY(double, "profile.wake_mean_h", c.profile.wake_mean_h));
    k.push_back(WEARMI_KEY(double, "profile.bed_mean_h", c.profile.bed_mean_h));
    k.push_back(WEARMI_KEY(double, "profile.sleep_person_sd_h", c.profile.sleep_person_sd_h));
    k.push_back(WEARMI_KEY(double, "profile.night_jitter_h", c.profile.night_jitter_h));
    k.push_back(WEARMI_KEY(double, "profile.weekend_sleep_shift_h", c.profile.weekend_sleep_shift_h));
    k.push_back(WEARMI_KEY(double, "profile.spike_prob", c.profile.spike_prob));
    k.push_back(WEARMI_KEY(double, "profile.awake_vm_mean", c.profile.awake_vm_mean));
    k.push_back(WEARMI_KEY(double, "profile.bout_mean_epochs", c.profile.bout_mean_epochs));
    k.push_back(WEARMI_KEY(int, "profile.cadence_min", c.profile.cadence_min));
    k.push_back(WEARMI_KEY(int, "profile.cadence_max", c.profile.cadence_max));
    k.push_back(WEARMI_KEY(int, "profile.max_steps_per_epoch", c.profile.max_steps_per_epoch));

    k.push_back(WEARMI_KEY(double, "regime.prop_nonwear_only", c.regime.prop_nonwear_only));
    k.push_back(WEARMI_KEY(double, "regime.prop_sleep_extra_only", c.regime.prop_sleep_extra_only));
    k.push_back(WEARMI_KEY(double, "regime.nonwear_extra_episodes_mean", c.regime.nonwear_extra_episodes_mean));
    k.push_back(WEARMI_KEY(double, "regime.prop_long_nonwear", c.regime.prop_long_nonwear));
    k.push_back(WEARMI_KEY(double, "regime.prop_whole_day", c.regime.prop_whole_day));

    add_classifier_keys(k, [](ScenarioConfig& c) -> ClassifierConfig& { return c.classifier; });
    return k;
  }();
  return keys;
}

#define WEARMI_PKEY(T, key, expr) make_key<T, PipelineConfig>(key, [](PipelineConfig& c) -> T& { return expr; })

const std::vector<ConfigKey<PipelineConfig>>& pipeline_keys() {
  static const std::vector<ConfigKey<PipelineConfig>> keys = [] {
    std::vector<ConfigKey<PipelineConfig>> k;
    k.push_back(WEARMI_PKEY(int, "m", c.m));
    k.push_back(WEARMI_PKEY(std::uint64_t, "seed", c.seed));
    k.push_back(WEARMI_PKEY(int, "threads", c.threads));
    k.push_back({"mode",
                 [](PipelineConfig& c, std::string_view v) {
                   const auto m = parse_bound_mode(v);
                   if (!m) throw ConfigError(fmt::format("invalid value '{}' for 'mode'", v));
                   c.mode = *m;
                 },
                 [](const PipelineConfig& c) { return std::string(to_string(c.mode)); }});
    k.push_back({"arm_scope",
                 [](PipelineConfig& c, std::string_view v) {
                   if (v == "same") c.same_arm = true;
                   else if (v == "all") c.same_arm = false;
                   else throw ConfigError(fmt::format("invalid value '{}' for 'arm_scope'", v));
                 },
                 [](const PipelineConfig& c) { return std::string(c.same_arm ? "same" : "all"); }});
    k.push_back({"match_vars",
                 [](PipelineConfig& c, std::string_view v) {
                   c.match_vars.clear();
                   for (const auto& item : split_csv_line(v)) {
                     const auto var = parse_match_var(trim(item));
                     if (!var) throw ConfigError(fmt::format("unknown matching variable '{}'", item));
                     c.match_vars.push_back(*var);
                   }
                 },
                 [](const PipelineConfig& c) {
                   std::string s;
                   for (MatchVar v : c.match_vars) s += (s.empty() ? "" : ",") + std::string(to_string(v));
                   return s;
                 }});
    k.push_back(WEARMI_PKEY(int, "np.self_pool_threshold", c.self_pool_threshold));
    k.push_back(WEARMI_PKEY(bool, "np.match_baseline_summaries", c.match_baseline_summaries));
    k.push_back(WEARMI_PKEY(bool, "np.average_baseline_summaries", c.average_baseline_summaries));
    k.push_back(WEARMI_PKEY(bool, "np.allow_relaxation", c.allow_relaxation));
    k.push_back(WEARMI_PKEY(int, "par.cycles", c.par_cycles));
    k.push_back(WEARMI_PKEY(bool, "par.baseline_mean_covariate", c.baseline_mean_covariate));
    k.push_back(WEARMI_PKEY(double, "par.offset", c.bounds.offset));
    k.push_back(WEARMI_PKEY(double, "par.generic_upper", c.bounds.generic_upper));
    k.push_back(WEARMI_PKEY(double, "par.max_steps_per_epoch", c.bounds.max_steps_per_epoch));
    k.push_back(WEARMI_PKEY(double, "par.gradient_tolerance", c.fit.gradient_tolerance));
    k.push_back(WEARMI_PKEY(int, "par.max_iterations", c.fit.max_iterations));
    k.push_back({"analysis.model",
                 [](PipelineConfig& c, std::string_view v) {
                   if (v != "arm_means" && v != "trial") {
                     throw ConfigError(fmt::format("invalid value '{}' for 'analysis.model'", v));
                   }
                   c.model = std::string(v);
                 },
                 [](const PipelineConfig& c) { return c.model; }});
    k.push_back(WEARMI_PKEY(bool, "analysis.practice", c.practice));
    k.push_back({"pool.interval",
                 [](PipelineConfig& c, std::string_view v) {
                   if (v == "t") c.interval = IntervalMethod::t;
                   else if (v == "normal") c.interval = IntervalMethod::normal;
                   else throw ConfigError(fmt::format("invalid value '{}' for 'pool.interval'", v));
                 },
                 [](const PipelineConfig& c) { return std::string(c.interval == IntervalMethod::t ? "t" : "normal"); }});
    k.push_back(WEARMI_PKEY(double, "pool.level", c.level));
    add_classifier_keys(k, [](PipelineConfig& c) -> ClassifierConfig& { return c.classifier; });
    return k;
  }();
  return keys;
}

#undef WEARMI_PKEY
#undef WEARMI_KEY

}  // namespace

ScenarioConfig parse_scenario_config(std::istream& in, const std::string& label) {
  return parse_config(in, label, scenario_keys(), ScenarioConfig{});
}

ScenarioConfig read_scenario_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  ScenarioConfig cfg = parse_scenario_config(in, path.string());
  if (!cfg.pattern_library.empty() && fs::path(cfg.pattern_library).is_relative()) {
    cfg.pattern_library = (path.parent_path() / cfg.pattern_library).lexically_normal().string();
  }
  return cfg;
}

void write_scenario_config(std::ostream& out, const ScenarioConfig& cfg) {
  for (const auto& k : scenario_keys()) out << k.name << " = " << k.get(cfg) << '\n';
}

PipelineConfig parse_pipeline_config(std::istream& in, const std::string& label, PipelineConfig base) {
  return parse_config(in, label, pipeline_keys(), std::move(base));
}

PipelineConfig read_pipeline_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_pipeline_config(in, path.string(), std::move(base));
}

void write_pipeline_config(std::ostream& out, const PipelineConfig& cfg) {
  // Thread count is left out: it never changes results, and bundles from
  // runs that differ only in threads stay byte-identical.
  for (const auto& k : pipeline_keys()) {
    if (k.name != "threads") out << k.name << " = " << k.get(cfg) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Scenario results

void write_scenario_summary(std::ostream& out, const ScenarioResult& result) {
  out << "method,estimand,truth,mean_estimate,bias,mc_error,bias_mc_error,mean_se,truth_se,n_ok,n_failed\n";
  for (const auto& r : result.summary) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.method), r.estimand, format_number(r.truth),
                       format_number(r.mean_estimate), format_number(r.bias), format_number(r.mc_error),
                       format_number(r.bias_mc_error), format_number(r.mean_se), format_number(r.truth_se), r.n_ok,
                       r.n_failed);
  }
}

void write_replicate_estimates(std::ostream& out, const ScenarioResult& result) {
  out << "replicate,method,estimand,truth,estimate,se,truth_se,ok,error\n";
  for (const auto& e : result.estimates) {
    std::string err = e.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", e.replicate, to_string(e.method), e.estimand,
                       format_number(e.truth), format_number(e.estimate), format_number(e.se),
                       format_number(e.truth_se), e.ok ? 1 : 0, err);
  }
}

void write_plot_data(std::ostream& out, const ScenarioResult& result) {
  out << "method,estimand,statistic,value,mc_error\n";
  for (const auto& r : result.summary) {
    const std::string m(to_string(r.method));
    out << fmt::format("{},{},estimate,{},{}\n", m, r.estimand, format_number(r.mean_estimate), format_number(r.mc_error));
    out << fmt::format("{},{},bias,{},{}\n", m, r.estimand, format_number(r.bias), format_number(r.mc_error));
    out << fmt::format("{},{},se,{},NA\n", m, r.estimand, format_number(r.mean_se));
    out << fmt::format("{},{},truth,{},NA\n", m, r.estimand, format_number(r.truth));
  }
}

// ---------------------------------------------------------------------------
// Staged output

StagedOutput::StagedOutput(fs::path target) : target_(std::move(target)) {
  if (target_.empty()) throw ConfigError("output directory must be given");
  target_ = fs::absolute(target_).lexically_normal();
  if (!target_.has_filename()) target_ = target_.parent_path();
  const fs::path parent = target_.parent_path();
  fs::create_directories(parent);
  const std::string stem = target_.filename().string();
  for (int k = 0;; ++k) {
    staging_ = parent / fmt::format(".{}.partial{}", stem, k);
    if (fs::create_directory(staging_)) break;
    if (k > 1000) throw ConfigError("cannot create a staging directory next to " + target_.string());
  }
}

StagedOutput::~StagedOutput() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedOutput::write(const std::string& name, const std::function<void(std::ostream&)>& body) {
  const fs::path p = staging_ / name;
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  body(out);
  out.flush();
  if (!out) throw ConfigError("write failed for " + p.string());
}

void StagedOutput::commit() {
  fs::create_directories(target_);
  for (const auto& entry : fs::recursive_directory_iterator(staging_)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), staging_);
    const fs::path dest = target_ / rel;
    fs::create_directories(dest.parent_path());
    fs::rename(entry.path(), dest);
  }
  fs::remove_all(staging_);
  committed_ = true;
}

}  // namespace wearmi
