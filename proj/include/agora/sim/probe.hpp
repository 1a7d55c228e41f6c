#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "agora/csv.hpp"
#include "agora/types.hpp"

namespace agora::sim {

// One UE probing window, attributed to the UPF target at ts_start.
struct UeProbeRecord {
  double ts_start = 0;
  double ts_end = 0;
  MecId target_mec = MecId::MEC2;
  double ping_avg_ms = 0;
  std::optional<double> udp_jitter_ms;
  std::optional<double> udp_loss_pct;

  friend bool operator==(const UeProbeRecord&, const UeProbeRecord&) = default;
};

struct UeProbeConfig {
  double base_rtt_mec1_ms = 20.0;
  double base_rtt_mec2_ms = 20.0;
  double latency_slope_ms = 10.0;         // per unit load of the target
  double jitter_sigma_full_load_ms = 0.5;  // jitter sigma scales linearly with load
  bool jitter_enabled = true;
  bool udp_enabled = true;
  double udp_loss_pct_per_load = 1.0;
  double period_s = 5.0;  // background probing period; 0 disables it
  double window_s = 5.0;
};

inline constexpr std::string_view kProbeLogHeader =
    "ts_start,ts_end,target_mec,ping_avg_ms,udp_jitter_ms,udp_loss_pct";

inline void write_probe_log(const std::vector<UeProbeRecord>& records, std::ostream& out) {
  out << kProbeLogHeader << '\n';
  for (const auto& r : records) {
    out << csv::format_double(r.ts_start) << ',' << csv::format_double(r.ts_end) << ','
        << to_string(r.target_mec) << ',' << csv::format_double(r.ping_avg_ms) << ','
        << csv::format_optional(r.udp_jitter_ms) << ',' << csv::format_optional(r.udp_loss_pct) << '\n';
  }
}

inline std::vector<UeProbeRecord> read_probe_log(std::istream& in, std::string source = "UE probe log") {
  csv::Reader reader(in, kProbeLogHeader, std::move(source));
  std::vector<UeProbeRecord> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    UeProbeRecord r;
    r.ts_start = reader.to_double(f[0], "ts_start");
    r.ts_end = reader.to_double(f[1], "ts_end");
    auto mec = try_parse_mec(f[2]);
    if (!mec) reader.fail("target_mec", "unknown MEC '" + f[2] + "'");
    r.target_mec = *mec;
    r.ping_avg_ms = reader.to_double(f[3], "ping_avg_ms");
    r.udp_jitter_ms = reader.to_optional_double(f[4], "udp_jitter_ms");
    r.udp_loss_pct = reader.to_optional_double(f[5], "udp_loss_pct");
    if (!(r.ts_start < r.ts_end)) reader.fail("ts_end", "must be greater than ts_start");
    if (!(r.ping_avg_ms > 0)) reader.fail("ping_avg_ms", "must be > 0");
    if (r.udp_loss_pct && (*r.udp_loss_pct < 0 || *r.udp_loss_pct > 100))
      reader.fail("udp_loss_pct", "must be in [0, 100]");
    out.push_back(r);
  }
  return out;
}

}  // namespace agora::sim
