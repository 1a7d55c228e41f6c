#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "agora/agent/policy.hpp"
#include "agora/agent/trace.hpp"
#include "agora/csv.hpp"
#include "agora/telemetry/store.hpp"

namespace agora::compliance {

struct ComplianceRecord {
  std::string run_id;
  std::string engine_id;
  std::string intent_id;
  bool c_tool = false;
  bool c_act = false;
  bool valid = false;
  std::optional<double> p2_observed_watts;
  // Harness estimate used as ground truth when the agent did not measure.
  std::optional<double> p2_fallback_watts;
  double theta_watts = 0;
  std::optional<Action> expected_action;
  std::optional<Action> actual_action;
  agent::Outcome outcome = agent::Outcome::ImplicitStay;

  std::optional<double> p2_truth() const noexcept { return p2_observed_watts ? p2_observed_watts : p2_fallback_watts; }
  bool migrated() const noexcept { return actual_action == Action::RouteToMEC1; }
};

namespace detail {
inline bool is_mec2_measurement(const agent::ToolCallRecord& c) {
  return c.tool_name == agent::kEnergyTool && c.ok && c.result.is_object() &&
         c.result.value("mec", "") == "MEC2" && c.result.contains("mean_power_watts");
}
}  // namespace detail

// Tool compliance needs a successful MEC2 measurement before the first
// actuation attempt (or before the end, when nothing was actuated). Action
// compliance additionally needs the final routing to match the threshold
// rule applied to the last such measurement. Unmeasured actuation is never
// compliant, whatever it routed to.
inline ComplianceRecord grade(const agent::DecisionTrace& trace, double theta,
                              const std::optional<telemetry::PowerEstimate>& fallback = std::nullopt) {
  ComplianceRecord r;
  r.run_id = trace.run_id;
  r.engine_id = trace.engine_id;
  r.intent_id = trace.intent_id;
  r.theta_watts = theta;
  r.outcome = agent::outcome_of(trace);
  r.actual_action = agent::actual_action(trace);
  if (fallback) r.p2_fallback_watts = fallback->mean_power_watts;

  if (!trace.failed) {
    for (const auto& call : trace.tool_calls) {
      if (call.tool_name == agent::kUpfTool) break;
      if (detail::is_mec2_measurement(call)) r.p2_observed_watts = call.result.at("mean_power_watts").get<double>();
    }
  }
  r.c_tool = r.p2_observed_watts.has_value();
  r.valid = r.c_tool;
  if (auto p2 = r.p2_truth()) r.expected_action = agent::oracle_decide(*p2, theta);
  r.c_act = r.c_tool && r.actual_action && r.actual_action == r.expected_action;
  return r;
}

// Ratios are absent when their denominator is zero.
struct ConfusionSummary {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> tpr, ppv, fpr;
};

inline void finalize(ConfusionSummary& s) {
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  s.tpr = ratio(s.tp, s.tp + s.fn);
  s.ppv = ratio(s.tp, s.tp + s.fp);
  s.fpr = ratio(s.fp, s.fp + s.tn);
}

inline ConfusionSummary confusion_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  ConfusionSummary s{tp, fp, fn, tn, {}, {}, {}};
  finalize(s);
  return s;
}

// Positive class: migration needed (p2 > theta). Predicted positive: traffic
// actually moved to MEC1. Records without any p2 are left out. A theta
// override replaces each record's own threshold.
inline ConfusionSummary confusion(const std::vector<ComplianceRecord>& records,
                                  std::optional<double> theta_override = std::nullopt) {
  ConfusionSummary s;
  for (const auto& r : records) {
    auto p2 = r.p2_truth();
    if (!p2) continue;
    const bool needed = *p2 > theta_override.value_or(r.theta_watts);
    const bool moved = r.migrated();
    if (needed && moved) ++s.tp;
    else if (!needed && moved) ++s.fp;
    else if (needed) ++s.fn;
    else ++s.tn;
  }
  finalize(s);
  return s;
}

struct MigrationBin {
  double lower_watts = 0;
  double upper_watts = 0;
  double probability = 0;
  std::size_t count = 0;
  std::size_t migrations = 0;
};

// Bins [k*w, (k+1)*w) over the ground-truth p2; empty bins are omitted.
inline std::vector<MigrationBin> migration_prob_by_bin(const std::vector<ComplianceRecord>& records,
                                                       double bin_width_watts = 5.0) {
  if (!(bin_width_watts > 0)) throw Error(errc::domain_error, "bin width must be > 0");
  std::map<long long, std::pair<std::size_t, std::size_t>> bins;  // k -> (count, migrations)
  for (const auto& r : records) {
    auto p2 = r.p2_truth();
    if (!p2) continue;
    auto& [count, moved] = bins[static_cast<long long>(std::floor(*p2 / bin_width_watts))];
    ++count;
    if (r.migrated()) ++moved;
  }
  std::vector<MigrationBin> out;
  for (const auto& [k, cm] : bins) {
    out.push_back({static_cast<double>(k) * bin_width_watts, static_cast<double>(k + 1) * bin_width_watts,
                   static_cast<double>(cm.second) / static_cast<double>(cm.first), cm.first, cm.second});
  }
  return out;
}

inline constexpr std::string_view kComplianceHeader =
    "run_id,engine_id,intent_id,c_tool,c_act,valid,p2_observed_w,theta_w,expected_action,actual_action";

inline std::string action_cell(const std::optional<Action>& a) {
  return a ? std::string(to_string(*a)) : std::string{};
}

inline void write_compliance(const std::vector<ComplianceRecord>& records, std::ostream& out) {
  out << kComplianceHeader << '\n';
  for (const auto& r : records) {
    out << r.run_id << ',' << r.engine_id << ',' << r.intent_id << ',' << int{r.c_tool} << ',' << int{r.c_act} << ','
        << int{r.valid} << ',' << csv::format_optional(r.p2_observed_watts) << ','
        << csv::format_double(r.theta_watts) << ',' << action_cell(r.expected_action) << ','
        << action_cell(r.actual_action) << '\n';
  }
}

inline std::vector<ComplianceRecord> read_compliance(std::istream& in, std::string source = "compliance") {
  csv::Reader reader(in, kComplianceHeader, std::move(source));
  std::vector<ComplianceRecord> out;
  std::vector<std::string> f;
  auto flag = [&reader](const std::string& s, std::string_view field) {
    if (s != "0" && s != "1") reader.fail(field, "expected 0 or 1");
    return s == "1";
  };
  auto action = [&reader](const std::string& s, std::string_view field) -> std::optional<Action> {
    if (s.empty()) return std::nullopt;
    auto a = try_parse_action(s);
    if (!a) reader.fail(field, "unknown action '" + s + "'");
    return a;
  };
  while (reader.next(f)) {
    ComplianceRecord r;
    r.run_id = f[0];
    r.engine_id = f[1];
    r.intent_id = f[2];
    r.c_tool = flag(f[3], "c_tool");
    r.c_act = flag(f[4], "c_act");
    r.valid = flag(f[5], "valid");
    r.p2_observed_watts = reader.to_optional_double(f[6], "p2_observed_w");
    r.theta_watts = reader.to_double(f[7], "theta_w");
    r.expected_action = action(f[8], "expected_action");
    r.actual_action = action(f[9], "actual_action");
    out.push_back(r);
  }
  return out;
}

}  // namespace agora::compliance
