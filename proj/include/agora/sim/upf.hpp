#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "agora/csv.hpp"
#include "agora/types.hpp"

namespace agora::sim {

struct UpfState {
  MecId current_target = MecId::MEC2;
  double last_change_ts = 0;
};

struct UpfAck {
  MecId previous = MecId::MEC2;
  MecId current = MecId::MEC2;
  double ts = 0;

  friend bool operator==(const UpfAck&, const UpfAck&) = default;
};

// Egress selection of the user plane. Implemented by the simulated world;
// a live deployment would back it with the UPF's control interface.
class UpfControl {
public:
  virtual ~UpfControl() = default;
  virtual MecId upf_get_target() const = 0;
  virtual UpfAck upf_set_target(MecId mec) = 0;
};

using ActuationLog = std::vector<UpfAck>;

inline constexpr std::string_view kActuationLogHeader = "ts,previous_target,current_target";

inline void write_actuation_log(const ActuationLog& log, std::ostream& out) {
  out << kActuationLogHeader << '\n';
  for (const auto& a : log) {
    out << csv::format_double(a.ts) << ',' << to_string(a.previous) << ',' << to_string(a.current) << '\n';
  }
}

inline ActuationLog read_actuation_log(std::istream& in, std::string source = "actuation log") {
  csv::Reader reader(in, kActuationLogHeader, std::move(source));
  ActuationLog log;
  std::vector<std::string> f;
  while (reader.next(f)) {
    UpfAck a;
    a.ts = reader.to_double(f[0], "ts");
    auto prev = try_parse_mec(f[1]);
    auto cur = try_parse_mec(f[2]);
    if (!prev) reader.fail("previous_target", "unknown MEC '" + f[1] + "'");
    if (!cur) reader.fail("current_target", "unknown MEC '" + f[2] + "'");
    a.previous = *prev;
    a.current = *cur;
    log.push_back(a);
  }
  return log;
}

// Target in force at `ts`: the last actuation with ts <= `ts`, else `initial`.
inline MecId replay_target(const ActuationLog& log, double ts, MecId initial) {
  MecId target = initial;
  for (const auto& a : log) {
    if (a.ts > ts) break;
    target = a.current;
  }
  return target;
}

}  // namespace agora::sim
