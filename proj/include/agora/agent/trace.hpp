#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/error.hpp"
#include "agora/telemetry/store.hpp"
#include "agora/types.hpp"

namespace agora::agent {

inline constexpr std::string_view kEnergyTool = "energy_mean_last_time";
inline constexpr std::string_view kUpfTool = "upf_set_target";

struct ToolCallRecord {
  int seq = 0;
  std::string tool_name;
  nlohmann::json arguments;  // parsed object, or the raw string when unparseable
  nlohmann::json result;     // tool payload, or {"error": code, "message": ...}
  bool ok = false;
  double ts = 0;
};

// How the decision ended up on the UPF.
enum class Outcome {
  Migrate,       // upf_set_target(MEC1) succeeded
  ExplicitStay,  // upf_set_target(MEC2) succeeded
  ImplicitStay,  // no actuation, target already MEC2
  NoActuation,   // no actuation, target left on MEC1 by an earlier decision
};

inline constexpr std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Migrate: return "migrate";
    case Outcome::ExplicitStay: return "explicit_stay";
    case Outcome::ImplicitStay: return "implicit_stay";
    case Outcome::NoActuation: return "no_actuation";
  }
  return "?";
}

struct DecisionTrace {
  std::string run_id;
  std::string engine_id;
  std::string intent_id;
  double theta_watts = 0;
  telemetry::DecisionInterval interval;
  std::vector<ToolCallRecord> tool_calls;
  std::vector<std::string> rejected_tools;  // requested names outside the tool set
  int rounds = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t generated_tokens = 0;
  bool usage_reported = false;
  std::optional<Action> final_target;  // set only by a successful actuation
  std::string final_text;
  MecId target_at_start = MecId::MEC2;
  MecId target_at_end = MecId::MEC2;
  bool failed = false;
  std::string error;

  double latency_s() const noexcept { return interval.length(); }
};

inline Outcome outcome_of(const DecisionTrace& t) noexcept {
  if (t.final_target) return *t.final_target == Action::RouteToMEC1 ? Outcome::Migrate : Outcome::ExplicitStay;
  return t.target_at_end == MecId::MEC2 ? Outcome::ImplicitStay : Outcome::NoActuation;
}

// Where traffic ended up after the decision. Failed traces without an
// actuation have no outcome.
inline std::optional<Action> actual_action(const DecisionTrace& t) noexcept {
  if (t.final_target) return t.final_target;
  if (t.failed) return std::nullopt;
  return action_for(t.target_at_end);
}

inline nlohmann::json to_json(const ToolCallRecord& r) {
  return {{"seq", r.seq}, {"tool", r.tool_name}, {"arguments", r.arguments},
          {"ok", r.ok},   {"result", r.result},  {"ts", r.ts}};
}

inline nlohmann::json to_json(const DecisionTrace& t) {
  nlohmann::json calls = nlohmann::json::array();
  for (const auto& c : t.tool_calls) calls.push_back(to_json(c));
  return {{"run_id", t.run_id},
          {"engine_id", t.engine_id},
          {"intent_id", t.intent_id},
          {"theta_w", t.theta_watts},
          {"t_start", t.interval.t_start},
          {"t_end", t.interval.t_end},
          {"tool_calls", calls},
          {"rejected_tools", t.rejected_tools},
          {"rounds", t.rounds},
          {"prompt_tokens", t.prompt_tokens},
          {"gen_tokens", t.generated_tokens},
          {"usage_reported", t.usage_reported},
          {"final_target", t.final_target ? nlohmann::json(to_string(*t.final_target)) : nlohmann::json()},
          {"outcome", to_string(outcome_of(t))},
          {"final_text", t.final_text},
          {"target_at_start", to_string(t.target_at_start)},
          {"target_at_end", to_string(t.target_at_end)},
          {"failed", t.failed},
          {"error", t.error}};
}

inline DecisionTrace trace_from_json(const nlohmann::json& j) {
  try {
    DecisionTrace t;
    t.run_id = j.at("run_id").get<std::string>();
    t.engine_id = j.at("engine_id").get<std::string>();
    t.intent_id = j.at("intent_id").get<std::string>();
    t.theta_watts = j.at("theta_w").get<double>();
    t.interval = {j.at("t_start").get<double>(), j.at("t_end").get<double>()};
    for (const auto& c : j.at("tool_calls")) {
      ToolCallRecord r;
      r.seq = c.at("seq").get<int>();
      r.tool_name = c.at("tool").get<std::string>();
      r.arguments = c.at("arguments");
      r.ok = c.at("ok").get<bool>();
      r.result = c.at("result");
      r.ts = c.at("ts").get<double>();
      t.tool_calls.push_back(std::move(r));
    }
    t.rejected_tools = j.value("rejected_tools", std::vector<std::string>{});
    t.rounds = j.value("rounds", 0);
    t.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
    t.generated_tokens = j.at("gen_tokens").get<std::int64_t>();
    t.usage_reported = j.value("usage_reported", false);
    if (!j.at("final_target").is_null()) {
      auto a = try_parse_action(j.at("final_target").get<std::string>());
      if (!a) throw Error(errc::parse_error, "trace: bad final_target");
      t.final_target = a;
    }
    t.final_text = j.value("final_text", std::string{});
    t.target_at_start = parse_mec(j.at("target_at_start").get<std::string>());
    t.target_at_end = parse_mec(j.at("target_at_end").get<std::string>());
    t.failed = j.at("failed").get<bool>();
    t.error = j.value("error", std::string{});
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::parse_error, std::string("trace: ") + e.what());
  }
}

// One JSON document per line.
inline void write_traces(const std::vector<DecisionTrace>& traces, std::ostream& out) {
  for (const auto& t : traces) out << to_json(t).dump() << '\n';
}

inline std::vector<DecisionTrace> read_traces(std::istream& in, const std::string& source = "traces") {
  std::vector<DecisionTrace> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(trace_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(errc::parse_error, source + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace agora::agent
