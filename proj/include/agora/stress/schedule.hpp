#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/csv.hpp"
#include "agora/error.hpp"
#include "agora/types.hpp"

namespace agora::stress {

// One injected CPU-load episode, active over [begin, end).
struct StressEvent {
  MecId mec = MecId::MEC2;
  double begin = 0;
  double end = 0;
  double cpu_load = 0;
  int workers = 1;

  double duration() const noexcept { return end - begin; }
  bool active_at(double ts) const noexcept { return ts >= begin && ts < end; }

  friend bool operator==(const StressEvent&, const StressEvent&) = default;
};

inline void validate(const StressEvent& e) {
  if (!(e.begin < e.end)) throw Error(errc::domain_error, "stress event requires begin < end");
  if (!(e.cpu_load > 0 && e.cpu_load <= 1))
    throw Error(errc::domain_error, "stress event cpu_load must be in (0, 1]");
  if (e.workers < 1) throw Error(errc::domain_error, "stress event requires workers >= 1");
}

template <typename T>
struct Range {
  T min{};
  T max{};
};

struct SiteRanges {
  Range<double> load;
  Range<double> duration_s;
  Range<int> workers;
};

struct StressProfile {
  SiteRanges mec1{{0.10, 0.30}, {10, 30}, {1, 1}};
  SiteRanges mec2{{0.60, 0.95}, {60, 180}, {2, 4}};
  Range<double> gap_s{5, 20};
  double horizon_s = 600;
  std::uint64_t seed = 42;
  // Number of MEC2 episodes scheduled per MEC1 episode.
  int mec2_bias = 3;
  // Timestamps and durations are snapped to this grid (the sim clock tick).
  double time_quantum_s = 0.1;
};

namespace detail {
template <typename T>
void check_range(const Range<T>& r, const char* what) {
  if (r.min > r.max) throw Error(errc::config_error, std::string(what) + ": min > max");
}
}  // namespace detail

// Throws config_error. A zero horizon is accepted (yields an empty schedule).
inline void validate(const StressProfile& p) {
  for (const auto* site : {&p.mec1, &p.mec2}) {
    detail::check_range(site->load, "load");
    detail::check_range(site->duration_s, "duration_s");
    detail::check_range(site->workers, "workers");
    if (site->load.min <= 0 || site->load.max > 1)
      throw Error(errc::config_error, "load range must lie in (0, 1]");
    if (site->duration_s.min <= 0) throw Error(errc::config_error, "duration_s must be > 0");
    if (site->workers.min < 1) throw Error(errc::config_error, "workers must be >= 1");
  }
  detail::check_range(p.gap_s, "gap_s");
  if (p.gap_s.min < 0) throw Error(errc::config_error, "gap_s must be >= 0");
  if (p.horizon_s < 0) throw Error(errc::config_error, "horizon_s must be >= 0");
  if (p.mec2_bias < 1) throw Error(errc::config_error, "mec2_bias must be >= 1");
  if (p.time_quantum_s <= 0) throw Error(errc::config_error, "time_quantum_s must be > 0");
  // Asymmetry: MEC2 must be stressed at least as hard and as long as MEC1.
  if (p.mec2.load.min < p.mec1.load.min || p.mec2.load.max < p.mec1.load.max ||
      p.mec2.duration_s.min < p.mec1.duration_s.min ||
      p.mec2.duration_s.max < p.mec1.duration_s.max) {
    throw Error(errc::config_error, "MEC2 load/duration ranges must dominate MEC1's");
  }
}

struct StressSchedule {
  std::vector<StressEvent> events;
  // Set when the horizon could not fit a single episode.
  bool horizon_too_short = false;
};

// Episodes are laid out back to back with a random gap before each one, so at
// most one stressor is active at any instant across both sites. Site order
// repeats MEC2 x bias, then MEC1 once.
inline StressSchedule generate_schedule(const StressProfile& profile) {
  validate(profile);
  StressSchedule out;
  std::mt19937_64 rng(profile.seed);
  const double q = profile.time_quantum_s;
  auto snap = [q](double v) {
    const double per_second = std::round(1.0 / q);
    if (std::abs(per_second * q - 1.0) < 1e-12) return std::round(v * per_second) / per_second;
    return std::round(v / q) * q;
  };
  auto draw = [&rng](Range<double> r) {
    return r.min == r.max ? r.min : std::uniform_real_distribution<double>(r.min, r.max)(rng);
  };
  auto draw_int = [&rng](Range<int> r) { return std::uniform_int_distribution<int>(r.min, r.max)(rng); };

  double t = 0;
  for (std::size_t i = 0;; ++i) {
    const bool mec2 = static_cast<int>(i % (profile.mec2_bias + 1)) < profile.mec2_bias;
    const SiteRanges& site = mec2 ? profile.mec2 : profile.mec1;
    StressEvent e;
    e.mec = mec2 ? MecId::MEC2 : MecId::MEC1;
    e.begin = snap(t + draw(profile.gap_s));
    const double duration = std::max(q, snap(draw(site.duration_s)));
    e.end = snap(e.begin + duration);
    e.cpu_load = std::clamp(std::round(draw(site.load) * 100.0) / 100.0, 0.01, 1.0);
    e.workers = draw_int(site.workers);
    if (e.end > profile.horizon_s) break;
    out.events.push_back(e);
    t = e.end;
  }
  out.horizon_too_short = out.events.empty();
  return out;
}

// Load of `mec` at `ts` given a schedule; idle (0) outside every episode.
inline double load_at(const std::vector<StressEvent>& events, MecId mec, double ts) noexcept {
  for (const auto& e : events) {
    if (e.mec == mec && e.active_at(ts)) return e.cpu_load;
  }
  return 0.0;
}

inline double stressed_seconds(const std::vector<StressEvent>& events, MecId mec) noexcept {
  double total = 0;
  for (const auto& e : events)
    if (e.mec == mec) total += e.duration();
  return total;
}

inline constexpr std::string_view kStressLogHeader = "mec,begin,end,cpu_load,workers,duration_s";

inline void write_stress_log(const std::vector<StressEvent>& events, std::ostream& out) {
  out << kStressLogHeader << '\n';
  for (const auto& e : events) {
    out << to_string(e.mec) << ',' << csv::format_double(e.begin) << ',' << csv::format_double(e.end)
        << ',' << csv::format_double(e.cpu_load) << ',' << e.workers << ','
        << csv::format_double(e.duration()) << '\n';
  }
}

inline std::vector<StressEvent> read_stress_log(std::istream& in, std::string source = "stress log") {
  csv::Reader reader(in, kStressLogHeader, std::move(source));
  std::vector<StressEvent> events;
  std::vector<std::string> f;
  while (reader.next(f)) {
    StressEvent e;
    auto mec = try_parse_mec(f[0]);
    if (!mec) reader.fail("mec", "unknown MEC '" + f[0] + "'");
    e.mec = *mec;
    e.begin = reader.to_double(f[1], "begin");
    e.end = reader.to_double(f[2], "end");
    e.cpu_load = reader.to_double(f[3], "cpu_load");
    e.workers = static_cast<int>(reader.to_int(f[4], "workers"));
    const double duration = reader.to_double(f[5], "duration_s");
    if (!(e.begin < e.end)) reader.fail("end", "end must be greater than begin");
    if (!(e.cpu_load > 0 && e.cpu_load <= 1)) reader.fail("cpu_load", "must be in (0, 1]");
    if (e.workers < 1) reader.fail("workers", "must be >= 1");
    if (std::abs(duration - e.duration()) > 1e-9 * std::max(1.0, std::abs(duration)))
      reader.fail("duration_s", "does not equal end - begin");
    if (!events.empty() && e.begin < events.back().end)
      reader.fail("begin", "overlaps the previous event");
    events.push_back(e);
  }
  return events;
}

// JSON form of a profile, as used by plan files and `gen-stress --profile`.
// Every key is optional and falls back to the defaults above.
inline StressProfile profile_from_json(const nlohmann::json& j) {
  StressProfile p;
  auto site = [](const nlohmann::json& s, SiteRanges& r) {
    auto range_d = [&s](const char* key, Range<double>& out) {
      if (s.contains(key)) out = {s.at(key).at(0).get<double>(), s.at(key).at(1).get<double>()};
    };
    range_d("load", r.load);
    range_d("duration_s", r.duration_s);
    if (s.contains("workers")) r.workers = {s.at("workers").at(0).get<int>(), s.at("workers").at(1).get<int>()};
  };
  try {
    if (j.contains("mec1")) site(j.at("mec1"), p.mec1);
    if (j.contains("mec2")) site(j.at("mec2"), p.mec2);
    if (j.contains("gap_s")) p.gap_s = {j.at("gap_s").at(0).get<double>(), j.at("gap_s").at(1).get<double>()};
    p.horizon_s = j.value("horizon_s", p.horizon_s);
    p.seed = j.value("seed", p.seed);
    p.mec2_bias = j.value("mec2_bias", p.mec2_bias);
    p.time_quantum_s = j.value("time_quantum_s", p.time_quantum_s);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::config_error, std::string("stress profile: ") + e.what());
  }
  validate(p);
  return p;
}

inline nlohmann::json profile_to_json(const StressProfile& p) {
  auto site = [](const SiteRanges& r) {
    return nlohmann::json{{"load", {r.load.min, r.load.max}},
                          {"duration_s", {r.duration_s.min, r.duration_s.max}},
                          {"workers", {r.workers.min, r.workers.max}}};
  };
  return {{"mec1", site(p.mec1)},          {"mec2", site(p.mec2)},
          {"gap_s", {p.gap_s.min, p.gap_s.max}}, {"horizon_s", p.horizon_s},
          {"seed", p.seed},                {"mec2_bias", p.mec2_bias},
          {"time_quantum_s", p.time_quantum_s}};
}

}  // namespace agora::stress
