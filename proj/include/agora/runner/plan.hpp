#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/agent/engine.hpp"
#include "agora/agent/intent.hpp"
#include "agora/agent/remote_engine.hpp"
#include "agora/agent/tools.hpp"
#include "agora/error.hpp"
#include "agora/sim/world.hpp"
#include "agora/stress/schedule.hpp"

namespace agora::runner {

inline constexpr std::string_view kPlanSchema = "agora-plan/1";

enum class EngineType { Oracle, BlindActuator, TextOnly, Scripted, Remote };

struct EngineConfig {
  std::string id;
  EngineType type = EngineType::Oracle;
  agent::OracleEngine::Config oracle;
  std::vector<agent::ScriptStep> script;
  agent::RemoteEngineConfig remote;
};

struct RunPlan {
  std::vector<EngineConfig> engines;
  std::vector<agent::Intent> intent_suite = agent::default_intent_suite();
  int repetitions = 10;
  double theta_default = agent::kStatedThresholdWatts;
  stress::StressProfile stress_profile;
  std::uint64_t base_seed = 42;
  std::filesystem::path output_dir = "artifacts";
  double warmup_s = 30.0;
  double inter_intent_spacing_s = 30.0;
  double probe_period_s = 5.0;
  int max_tool_rounds = 6;
  double tool_delta_s = agent::kDefaultDeltaSeconds;
  int health_check_attempts = 3;
  std::string system_preamble;  // empty = built-in preamble
  sim::WorldConfig world;
  nlohmann::json source;  // the document the plan was parsed from
};

inline void validate(const RunPlan& p) {
  if (p.engines.empty()) throw Error(errc::config_error, "plan has no engines");
  if (p.intent_suite.empty()) throw Error(errc::config_error, "plan has an empty intent suite");
  if (p.repetitions < 1) throw Error(errc::config_error, "repetitions must be >= 1");
  if (!(p.theta_default > 0)) throw Error(errc::config_error, "theta_w must be > 0");
  if (p.warmup_s <= 0 || p.inter_intent_spacing_s <= 0)
    throw Error(errc::config_error, "warmup_s and inter_intent_spacing_s must be > 0");
  if (p.max_tool_rounds < 1) throw Error(errc::config_error, "max_tool_rounds must be >= 1");
  std::set<std::string> ids;
  for (const auto& e : p.engines) {
    if (e.id.empty() || e.id.find_first_of(",/\\ \n") != std::string::npos)
      throw Error(errc::config_error, "engine id '" + e.id + "' is empty or has reserved characters");
    if (!ids.insert(e.id).second) throw Error(errc::config_error, "duplicate engine id '" + e.id + "'");
  }
  std::set<std::string> intent_ids;
  for (const auto& i : p.intent_suite) {
    agent::validate(i);
    if (i.id.find(',') != std::string::npos) throw Error(errc::config_error, "intent id contains ','");
    if (!intent_ids.insert(i.id).second) throw Error(errc::config_error, "duplicate intent id '" + i.id + "'");
  }
  stress::validate(p.stress_profile);
}

inline std::unique_ptr<agent::DecisionEngine> make_engine(const EngineConfig& cfg) {
  switch (cfg.type) {
    case EngineType::Oracle: return std::make_unique<agent::OracleEngine>(cfg.id, cfg.oracle);
    case EngineType::BlindActuator: return agent::make_blind_actuator(cfg.id);
    case EngineType::TextOnly: return agent::make_text_only(cfg.id);
    case EngineType::Scripted: return std::make_unique<agent::ScriptedEngine>(cfg.id, cfg.script);
    case EngineType::Remote: return std::make_unique<agent::RemoteChatEngine>(cfg.id, cfg.remote);
  }
  throw Error(errc::config_error, "unknown engine type");
}

namespace detail {

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::config_error, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::config_error, path.string() + ": " + e.what());
  }
}

inline EngineType parse_engine_type(const std::string& s) {
  if (s == "oracle") return EngineType::Oracle;
  if (s == "blind_actuator") return EngineType::BlindActuator;
  if (s == "text_only") return EngineType::TextOnly;
  if (s == "scripted") return EngineType::Scripted;
  if (s == "remote") return EngineType::Remote;
  throw Error(errc::config_error, "unknown engine type '" + s + "'");
}

inline void power_model_from_json(const nlohmann::json& j, sim::PowerModel& m) {
  m.idle_watts = j.value("idle_watts", m.idle_watts);
  m.slope_watts_per_load = j.value("slope_watts_per_load", m.slope_watts_per_load);
  m.noise_sigma_watts = j.value("noise_sigma_watts", m.noise_sigma_watts);
}

inline void world_from_json(const nlohmann::json& j, sim::WorldConfig& w) {
  w.tick_s = j.value("tick_s", w.tick_s);
  w.sampling_period_s = j.value("sampling_period_s", w.sampling_period_s);
  w.gpu_sampling_period_s = j.value("gpu_sampling_period_s", w.gpu_sampling_period_s);
  if (j.contains("mec1")) power_model_from_json(j.at("mec1"), w.mec1);
  if (j.contains("mec2")) power_model_from_json(j.at("mec2"), w.mec2);
  if (j.contains("gpu")) {
    w.gpu.quiescent_watts = j.at("gpu").value("quiescent_watts", w.gpu.quiescent_watts);
    w.gpu.active_watts = j.at("gpu").value("active_watts", w.gpu.active_watts);
  }
  if (j.contains("initial_target")) w.initial_target = parse_mec(j.at("initial_target").get<std::string>());
  if (j.contains("probe")) {
    const auto& p = j.at("probe");
    auto& c = w.probe;
    c.base_rtt_mec1_ms = p.value("base_rtt_mec1_ms", c.base_rtt_mec1_ms);
    c.base_rtt_mec2_ms = p.value("base_rtt_mec2_ms", c.base_rtt_mec2_ms);
    c.latency_slope_ms = p.value("latency_slope_ms", c.latency_slope_ms);
    c.jitter_sigma_full_load_ms = p.value("jitter_sigma_full_load_ms", c.jitter_sigma_full_load_ms);
    c.jitter_enabled = p.value("jitter_enabled", c.jitter_enabled);
    c.udp_enabled = p.value("udp_enabled", c.udp_enabled);
    c.udp_loss_pct_per_load = p.value("udp_loss_pct_per_load", c.udp_loss_pct_per_load);
    c.window_s = p.value("window_s", c.window_s);
  }
}

}  // namespace detail

// Parses a plan document. Relative script files resolve against `base_dir`.
// AGORA_LLM_* variables override remote connection fields.
inline RunPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  RunPlan p;
  p.source = j;
  try {
    if (!j.is_object()) throw Error(errc::config_error, "plan must be a JSON object");
    if (j.contains("schema") && j.at("schema").get<std::string>() != kPlanSchema) {
      throw Error(errc::config_error, "unsupported plan schema '" + j.at("schema").get<std::string>() + "'");
    }
    p.theta_default = j.value("theta_w", p.theta_default);
    for (const auto& e : j.at("engines")) {
      EngineConfig cfg;
      cfg.id = e.at("id").get<std::string>();
      cfg.type = detail::parse_engine_type(e.value("type", std::string("oracle")));
      cfg.oracle.default_theta = p.theta_default;
      cfg.oracle.delta_s = j.value("tool_delta_s", cfg.oracle.delta_s);
      cfg.oracle.inference_s = e.value("inference_s", cfg.oracle.inference_s);
      if (cfg.type == EngineType::Scripted) {
        if (e.contains("script_file")) {
          cfg.script = agent::script_from_json(detail::load_json_file(base_dir / e.at("script_file").get<std::string>()));
        } else {
          cfg.script = agent::script_from_json(e.at("script"));
        }
      }
      if (cfg.type == EngineType::Remote) {
        cfg.remote.base_url = e.value("base_url", std::string{});
        cfg.remote.model = e.value("model", std::string{});
        cfg.remote.api_key = e.value("api_key", std::string{});
        cfg.remote.timeout_s = e.value("timeout_s", cfg.remote.timeout_s);
        cfg.remote.restart_hook = e.value("restart_hook", std::string{});
        cfg.remote.temperature = e.value("temperature", cfg.remote.temperature);
        cfg.remote = agent::apply_env_overrides(cfg.remote);
        if (cfg.remote.base_url.empty() || cfg.remote.model.empty()) {
          throw Error(errc::config_error, "engine '" + cfg.id + "': base_url and model are required");
        }
      }
      p.engines.push_back(std::move(cfg));
    }
    if (j.contains("intents")) {
      p.intent_suite.clear();
      for (const auto& i : j.at("intents")) p.intent_suite.push_back(agent::intent_from_json(i));
    } else {
      p.intent_suite = agent::default_intent_suite(p.theta_default);
    }
    p.repetitions = j.value("repetitions", p.repetitions);
    if (j.contains("stress_profile")) p.stress_profile = stress::profile_from_json(j.at("stress_profile"));
    p.base_seed = j.value("base_seed", p.base_seed);
    p.output_dir = j.value("output_dir", p.output_dir.string());
    if (p.output_dir.is_relative()) p.output_dir = base_dir / p.output_dir;
    p.warmup_s = j.value("warmup_s", p.warmup_s);
    p.inter_intent_spacing_s = j.value("inter_intent_spacing_s", p.inter_intent_spacing_s);
    p.probe_period_s = j.value("probe_period_s", p.probe_period_s);
    p.max_tool_rounds = j.value("max_tool_rounds", p.max_tool_rounds);
    p.tool_delta_s = j.value("tool_delta_s", p.tool_delta_s);
    p.health_check_attempts = j.value("health_check_attempts", p.health_check_attempts);
    p.system_preamble = j.value("system_preamble", std::string{});
    if (j.contains("world")) detail::world_from_json(j.at("world"), p.world);
    p.world.probe.period_s = p.probe_period_s;
    if (!j.contains("world") || !j.at("world").contains("probe") || !j.at("world").at("probe").contains("window_s")) {
      p.world.probe.window_s = p.probe_period_s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::config_error, std::string("plan: ") + e.what());
  }
  validate(p);
  return p;
}

inline RunPlan load_plan(const std::filesystem::path& path) {
  auto dir = path.parent_path();
  return plan_from_json(detail::load_json_file(path), dir.empty() ? std::filesystem::path(".") : dir);
}

}  // namespace agora::runner
