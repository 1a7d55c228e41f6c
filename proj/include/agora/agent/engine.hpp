#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/agent/intent.hpp"
#include "agora/agent/policy.hpp"
#include "agora/agent/trace.hpp"
#include "agora/csv.hpp"
#include "agora/error.hpp"

namespace agora::agent {

struct ChatToolCall {
  std::string id;
  std::string name;
  std::string arguments;  // JSON text as produced by the engine
};

struct ChatMessage {
  std::string role;  // system | user | assistant | tool
  std::string content;
  std::vector<ChatToolCall> tool_calls;
  std::string tool_call_id;
  std::string name;
};

inline nlohmann::json to_wire(const ChatMessage& m) {
  nlohmann::json j = {{"role", m.role}};
  if (m.role == "assistant" && !m.tool_calls.empty()) {
    j["content"] = m.content.empty() ? nlohmann::json() : nlohmann::json(m.content);
    nlohmann::json calls = nlohmann::json::array();
    for (const auto& c : m.tool_calls) {
      calls.push_back({{"id", c.id}, {"type", "function"}, {"function", {{"name", c.name}, {"arguments", c.arguments}}}});
    }
    j["tool_calls"] = calls;
  } else {
    j["content"] = m.content;
  }
  if (m.role == "tool") {
    j["tool_call_id"] = m.tool_call_id;
    j["name"] = m.name;
  }
  return j;
}

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct EngineRequest {
  const Intent& intent;
  const std::vector<ChatMessage>& messages;
  const nlohmann::json& tools;
};

struct EngineReply {
  std::vector<ChatToolCall> tool_calls;
  std::string content;
  std::optional<Usage> usage;
  // Inference time the reply took; simulated engines report a fixed cost.
  double inference_s = 0;
};

// A decision engine sees the conversation so far and either requests tool
// calls or answers in text.
class DecisionEngine {
public:
  virtual ~DecisionEngine() = default;
  virtual const std::string& id() const = 0;
  virtual EngineReply complete(const EngineRequest& request) = 0;
  // Drops all conversation state and caches (cold start between runs).
  virtual void reset() = 0;
  virtual bool health_check() { return true; }
  // Simulated engines are deterministic and run on virtual time.
  virtual bool simulated() const { return true; }
};

namespace detail {

// Tool call ids issued so far paired with the tool result text.
struct ToolExchange {
  std::string name;
  nlohmann::json arguments;
  nlohmann::json result;
};

inline std::vector<ToolExchange> tool_exchanges(const std::vector<ChatMessage>& messages) {
  std::vector<ToolExchange> out;
  std::vector<ChatToolCall> pending;
  for (const auto& m : messages) {
    if (m.role == "assistant") {
      pending.insert(pending.end(), m.tool_calls.begin(), m.tool_calls.end());
    } else if (m.role == "tool") {
      for (const auto& c : pending) {
        if (c.id != m.tool_call_id) continue;
        ToolExchange x;
        x.name = c.name;
        x.arguments = nlohmann::json::parse(c.arguments, nullptr, false);
        x.result = nlohmann::json::parse(m.content, nullptr, false);
        out.push_back(std::move(x));
      }
    }
  }
  return out;
}

inline std::size_t issued_calls(const std::vector<ChatMessage>& messages) {
  std::size_t n = 0;
  for (const auto& m : messages) n += m.tool_calls.size();
  return n;
}

}  // namespace detail

// The reference policy as an engine: measure MEC2, apply the threshold
// rule to the measured value, actuate, report.
class OracleEngine final : public DecisionEngine {
public:
  struct Config {
    double default_theta = kStatedThresholdWatts;
    double delta_s = 60.0;
    double inference_s = 0.4;  // virtual cost of each reply
    int max_measure_attempts = 2;
  };

  explicit OracleEngine(std::string id = "oracle") : OracleEngine(std::move(id), Config{}) {}
  OracleEngine(std::string id, Config config) : id_(std::move(id)), config_(config) {}

  const std::string& id() const override { return id_; }
  void reset() override {}

  EngineReply complete(const EngineRequest& request) override {
    EngineReply reply;
    reply.inference_s = config_.inference_s;
    const auto call_id = "call_" + std::to_string(detail::issued_calls(request.messages) + 1);

    std::optional<double> p2;
    int failed_measurements = 0;
    std::optional<std::string> actuated;
    for (const auto& x : detail::tool_exchanges(request.messages)) {
      const bool ok = x.result.is_object() && !x.result.contains("error");
      if (x.name == kEnergyTool) {
        if (ok && x.result.value("mec", "") == "MEC2") p2 = x.result.at("mean_power_watts").get<double>();
        if (!ok) ++failed_measurements;
      } else if (x.name == kUpfTool && ok) {
        actuated = x.result.value("current", "");
      }
    }

    if (actuated) {
      reply.content = "Traffic is routed to " + *actuated + ".";
      return reply;
    }
    if (!p2) {
      if (failed_measurements >= config_.max_measure_attempts) {
        reply.content = "MEC2 power is unavailable; leaving the routing unchanged.";
        return reply;
      }
      nlohmann::json args = {{"mec", "MEC2"}, {"delta", config_.delta_s}};
      reply.tool_calls.push_back({call_id, std::string(kEnergyTool), args.dump()});
      return reply;
    }
    const double theta = extract_theta(request.intent, config_.default_theta);
    const MecId target = target_of(oracle_decide(*p2, theta));
    nlohmann::json args = {{"mec", to_string(target)}};
    reply.tool_calls.push_back({call_id, std::string(kUpfTool), args.dump()});
    return reply;
  }

private:
  std::string id_;
  Config config_;
};

// One scripted reply. `arguments` given as a JSON string is sent verbatim,
// which is how malformed arguments are scripted.
struct ScriptStep {
  std::vector<std::pair<std::string, std::string>> tool_calls;  // (name, arguments)
  std::string content;
  std::optional<Usage> usage;
  double inference_s = 0.4;
  int http_status = 200;  // used by the stub server only
};

inline ScriptStep script_step_from_json(const nlohmann::json& j) {
  ScriptStep s;
  if (j.contains("tool_calls")) {
    for (const auto& c : j.at("tool_calls")) {
      const auto& a = c.contains("arguments") ? c.at("arguments") : nlohmann::json::object();
      s.tool_calls.emplace_back(c.at("name").get<std::string>(), a.is_string() ? a.get<std::string>() : a.dump());
    }
  }
  s.content = j.value("content", std::string{});
  if (j.contains("usage")) {
    s.usage = Usage{j.at("usage").value("prompt_tokens", std::int64_t{0}),
                    j.at("usage").value("completion_tokens", std::int64_t{0})};
  }
  s.inference_s = j.value("inference_s", s.inference_s);
  s.http_status = j.value("status", 200);
  return s;
}

inline std::vector<ScriptStep> script_from_json(const nlohmann::json& j) {
  try {
    const auto& steps = j.is_array() ? j : j.at("steps");
    std::vector<ScriptStep> out;
    for (const auto& s : steps) out.push_back(script_step_from_json(s));
    if (out.empty()) throw Error(errc::config_error, "script has no steps");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::config_error, std::string("script: ") + e.what());
  }
}

// Replays the same script for every decision, restarting whenever a new
// conversation begins. Steps past the end repeat the last one.
class ScriptedEngine final : public DecisionEngine {
public:
  ScriptedEngine(std::string id, std::vector<ScriptStep> script) : id_(std::move(id)), script_(std::move(script)) {
    if (script_.empty()) throw Error(errc::config_error, "scripted engine needs at least one step");
  }

  const std::string& id() const override { return id_; }
  void reset() override { cursor_ = 0; }

  EngineReply complete(const EngineRequest& request) override {
    const bool fresh = std::none_of(request.messages.begin(), request.messages.end(),
                                    [](const ChatMessage& m) { return m.role == "assistant"; });
    if (fresh) cursor_ = 0;
    const ScriptStep& step = script_[std::min(cursor_, script_.size() - 1)];
    ++cursor_;
    EngineReply reply;
    reply.content = step.content;
    reply.usage = step.usage;
    reply.inference_s = step.inference_s;
    std::size_t next_id = detail::issued_calls(request.messages);
    for (const auto& [name, args] : step.tool_calls) {
      reply.tool_calls.push_back({"call_" + std::to_string(++next_id), name, args});
    }
    return reply;
  }

private:
  std::string id_;
  std::vector<ScriptStep> script_;
  std::size_t cursor_ = 0;
};

// Actuates MEC1 straight away without measuring.
inline std::unique_ptr<DecisionEngine> make_blind_actuator(std::string id = "blind_actuator") {
  ScriptStep act;
  act.tool_calls.emplace_back(std::string(kUpfTool), R"({"mec":"MEC1"})");
  ScriptStep done;
  done.content = "Traffic migrated to MEC1.";
  return std::make_unique<ScriptedEngine>(std::move(id), std::vector<ScriptStep>{act, done});
}

// Answers in text and never calls a tool.
inline std::unique_ptr<DecisionEngine> make_text_only(std::string id = "text_only") {
  ScriptStep s;
  s.content = "I would check MEC2 power before migrating traffic.";
  return std::make_unique<ScriptedEngine>(std::move(id), std::vector<ScriptStep>{s});
}

}  // namespace agora::agent
