#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "agora/csv.hpp"
#include "agora/error.hpp"
#include "agora/types.hpp"

namespace agora::telemetry {

struct PowerSample {
  double ts = 0;
  Subject subject = Subject::MEC1;
  double power_watts = 0;

  friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

using PowerSeries = std::vector<PowerSample>;

struct DecisionInterval {
  double t_start = 0;
  double t_end = 0;

  double length() const noexcept { return t_end - t_start; }
  friend bool operator==(const DecisionInterval&, const DecisionInterval&) = default;
};

struct PowerEstimate {
  Subject subject = Subject::MEC2;
  DecisionInterval window;
  double mean_power_watts = 0;
  std::size_t sample_count = 0;
};

// Slack applied to inclusive window bounds so that timestamps derived from
// the same tick grid compare equal after subtraction.
inline constexpr double kTimeEpsilon = 1e-9;

inline double mean_power(std::span<const PowerSample> samples) {
  if (samples.empty()) throw Error(errc::no_data, "no samples");
  double sum = 0;
  for (const auto& s : samples) sum += s.power_watts;
  return sum / static_cast<double>(samples.size());
}

// Samples with ts in [from, to], bounds inclusive.
inline std::span<const PowerSample> window(std::span<const PowerSample> series, double from, double to) {
  auto lo = std::lower_bound(series.begin(), series.end(), from - kTimeEpsilon,
                             [](const PowerSample& s, double t) { return s.ts < t; });
  auto hi = std::upper_bound(lo, series.end(), to + kTimeEpsilon,
                             [](double t, const PowerSample& s) { return t < s.ts; });
  return {lo, hi};
}

// Sample closest to `ts`; ties go to the earlier sample. `max_gap` rejects
// matches further away than that with stale_data.
inline PowerSample nearest(std::span<const PowerSample> series, double ts,
                           double max_gap = std::numeric_limits<double>::infinity()) {
  if (series.empty()) throw Error(errc::no_data, "nearest: empty series");
  auto it = std::lower_bound(series.begin(), series.end(), ts,
                             [](const PowerSample& s, double t) { return s.ts < t; });
  const PowerSample* best = nullptr;
  if (it == series.end()) {
    best = &series.back();
  } else if (it == series.begin()) {
    best = &*it;
  } else {
    const auto& after = *it;
    const auto& before = *(it - 1);
    best = (ts - before.ts) <= (after.ts - ts) ? &before : &after;
  }
  if (std::abs(best->ts - ts) > max_gap) {
    throw Error(errc::stale_data, "nearest sample is " + csv::format_double(std::abs(best->ts - ts)) +
                                      " s away (max " + csv::format_double(max_gap) + " s)");
  }
  return *best;
}

struct AlignedWindow {
  PowerSeries samples;
  // True when no sample fell inside the interval and the nearest neighbours
  // of its endpoints were used instead.
  bool fallback = false;
};

inline AlignedWindow align_to_interval(std::span<const PowerSample> series, const DecisionInterval& interval) {
  if (interval.t_start > interval.t_end) throw Error(errc::domain_error, "interval t_start > t_end");
  if (series.empty()) throw Error(errc::no_data, "align: empty series");
  auto inside = window(series, interval.t_start, interval.t_end);
  if (!inside.empty()) return {PowerSeries(inside.begin(), inside.end()), false};
  AlignedWindow out;
  out.fallback = true;
  out.samples.push_back(nearest(series, interval.t_start));
  auto last = nearest(series, interval.t_end);
  if (last.ts != out.samples.front().ts) out.samples.push_back(last);
  return out;
}

// Integral of the left-hold step function defined by the series: each sample
// holds until the next one, the last holds indefinitely, and the first one
// also covers any time before it. Additive over adjacent intervals.
inline double integrate_energy(std::span<const PowerSample> series, const DecisionInterval& interval) {
  if (series.empty()) throw Error(errc::no_data, "integrate: empty series");
  if (interval.t_start > interval.t_end) throw Error(errc::domain_error, "interval t_start > t_end");
  if (interval.t_end == interval.t_start) return 0.0;

  auto it = std::upper_bound(series.begin(), series.end(), interval.t_start,
                             [](double t, const PowerSample& s) { return t < s.ts; });
  // `held` is the sample whose value applies at `cursor`; `it` is the next breakpoint.
  auto held = it == series.begin() ? series.begin() : it - 1;
  double cursor = interval.t_start;
  double energy = 0;
  while (true) {
    const double next = it == series.end() ? interval.t_end : std::min(it->ts, interval.t_end);
    energy += held->power_watts * (next - cursor);
    if (next >= interval.t_end) break;
    cursor = next;
    held = it;
    ++it;
  }
  return energy;
}

inline std::size_t subject_index(Subject s) noexcept { return static_cast<std::size_t>(s); }

// Per-subject append-only series. One writer, many concurrent readers;
// readers always get a consistent copy.
class TelemetryStore {
public:
  TelemetryStore() = default;
  TelemetryStore(const TelemetryStore& other) {
    std::shared_lock lock(other.mutex_);
    series_ = other.series_;
  }
  TelemetryStore(TelemetryStore&& other) noexcept {
    std::unique_lock lock(other.mutex_);
    series_ = std::move(other.series_);
  }
  TelemetryStore& operator=(const TelemetryStore&) = delete;
  TelemetryStore& operator=(TelemetryStore&&) = delete;

  void record(const PowerSample& sample) {
    if (!(sample.power_watts >= 0)) throw Error(errc::domain_error, "negative power sample");
    std::unique_lock lock(mutex_);
    auto& series = series_[subject_index(sample.subject)];
    if (!series.empty() && sample.ts <= series.back().ts) {
      throw Error(errc::non_monotonic_timestamp,
                  std::string(to_string(sample.subject)) + ": ts " + csv::format_double(sample.ts) +
                      " not after " + csv::format_double(series.back().ts));
    }
    series.push_back(sample);
  }

  PowerSeries series(Subject subject) const {
    std::shared_lock lock(mutex_);
    return series_[subject_index(subject)];
  }

  std::size_t size(Subject subject) const {
    std::shared_lock lock(mutex_);
    return series_[subject_index(subject)].size();
  }

  // Mean over ts in [now - delta, now], inclusive.
  PowerEstimate query_mean_power(Subject subject, double now, double delta) const {
    if (!(delta > 0)) throw Error(errc::domain_error, "delta must be > 0");
    std::shared_lock lock(mutex_);
    auto in = window(series_[subject_index(subject)], now - delta, now);
    if (in.empty()) {
      throw Error(errc::no_data, std::string("no ") + std::string(to_string(subject)) + " samples in [" +
                                     csv::format_double(now - delta) + ", " + csv::format_double(now) + "]");
    }
    return {subject, {now - delta, now}, mean_power(in), in.size()};
  }

  // All samples, ordered by (ts, subject).
  PowerSeries snapshot() const {
    std::shared_lock lock(mutex_);
    PowerSeries all;
    for (const auto& s : series_) all.insert(all.end(), s.begin(), s.end());
    std::stable_sort(all.begin(), all.end(), [](const PowerSample& a, const PowerSample& b) {
      return a.ts < b.ts || (a.ts == b.ts && a.subject < b.subject);
    });
    return all;
  }

private:
  mutable std::shared_mutex mutex_;
  std::array<PowerSeries, 3> series_;
};

inline constexpr std::string_view kSnapshotHeader = "ts,subject,power_watts";

inline void write_snapshot(const PowerSeries& samples, std::ostream& out) {
  out << kSnapshotHeader << '\n';
  for (const auto& s : samples) {
    out << csv::format_double(s.ts) << ',' << to_string(s.subject) << ',' << csv::format_double(s.power_watts)
        << '\n';
  }
}

inline TelemetryStore read_snapshot(std::istream& in, std::string source = "telemetry snapshot") {
  csv::Reader reader(in, kSnapshotHeader, std::move(source));
  TelemetryStore store;
  std::vector<std::string> f;
  while (reader.next(f)) {
    PowerSample s;
    s.ts = reader.to_double(f[0], "ts");
    auto subject = try_parse_subject(f[1]);
    if (!subject) reader.fail("subject", "unknown subject '" + f[1] + "'");
    s.subject = *subject;
    s.power_watts = reader.to_double(f[2], "power_watts");
    try {
      store.record(s);
    } catch (const Error& e) {
      reader.fail("ts", e.what());
    }
  }
  return store;
}

// Where the measurement tool gets its numbers: the in-simulation store or a
// remote time-series endpoint.
class PowerSource {
public:
  virtual ~PowerSource() = default;
  virtual PowerEstimate mean_power(Subject subject, double now, double delta) const = 0;
};

class StorePowerSource final : public PowerSource {
public:
  explicit StorePowerSource(const TelemetryStore& store) : store_(store) {}
  PowerEstimate mean_power(Subject subject, double now, double delta) const override {
    return store_.query_mean_power(subject, now, delta);
  }

private:
  const TelemetryStore& store_;
};

}  // namespace agora::telemetry
