#pragma once

#include <mutex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "agora/agent/trace.hpp"
#include "agora/error.hpp"
#include "agora/sim/upf.hpp"
#include "agora/telemetry/store.hpp"

namespace agora::agent {

inline constexpr double kDefaultDeltaSeconds = 60.0;

// Function declarations sent to chat engines.
inline nlohmann::json tool_specs() {
  const nlohmann::json mec_param = {{"type", "string"},
                                    {"enum", {"MEC1", "MEC2"}},
                                    {"description", "MEC site identifier"}};
  return nlohmann::json::array(
      {{{"type", "function"},
        {"function",
         {{"name", kEnergyTool},
          {"description",
           "Return the mean power draw in watts of the given MEC site over the last `delta` seconds."},
          {"parameters",
           {{"type", "object"},
            {"properties",
             {{"mec", mec_param},
              {"delta", {{"type", "number"}, {"description", "Trailing window length in seconds"}}}}},
            {"required", {"mec"}}}}}}},
       {{"type", "function"},
        {"function",
         {{"name", kUpfTool},
          {"description", "Update the UPF egress selection so user traffic is routed to the given MEC site."},
          {"parameters",
           {{"type", "object"}, {"properties", {{"mec", mec_param}}}, {"required", {"mec"}}}}}}}});
}

struct ToolOutcome {
  bool known_tool = true;
  bool ok = false;
  nlohmann::json arguments;
  nlohmann::json result;
};

// Executes tool requests against a power source and a UPF. Calls are
// serialized so measurement and actuation never interleave.
class ToolBroker {
public:
  ToolBroker(const telemetry::PowerSource& power, sim::UpfControl& upf, double default_delta_s = kDefaultDeltaSeconds)
      : power_(power), upf_(upf), default_delta_s_(default_delta_s) {}

  MecId upf_target() const { return upf_.upf_get_target(); }

  ToolOutcome execute(std::string_view name, const std::string& raw_arguments, double now) {
    std::lock_guard lock(mutex_);
    ToolOutcome out;
    if (name != kEnergyTool && name != kUpfTool) {
      out.known_tool = false;
      out.arguments = raw_arguments;
      out.result = error_payload("unknown_tool", "no tool named '" + std::string(name) + "'");
      return out;
    }
    nlohmann::json args;
    try {
      args = raw_arguments.empty() ? nlohmann::json::object() : nlohmann::json::parse(raw_arguments);
      if (!args.is_object()) throw std::invalid_argument("arguments must be a JSON object");
    } catch (const std::exception& e) {
      out.arguments = raw_arguments;
      out.result = error_payload("invalid_arguments", std::string("could not parse arguments: ") + e.what());
      return out;
    }
    out.arguments = args;
    try {
      out.result = name == kEnergyTool ? measure(args, now) : actuate(args);
      out.ok = true;
    } catch (const Error& e) {
      out.result = error_payload(e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      out.result = error_payload("invalid_arguments", e.what());
    }
    return out;
  }

private:
  static nlohmann::json error_payload(std::string_view code, std::string_view message) {
    return {{"error", code}, {"message", message}};
  }

  static MecId mec_argument(const nlohmann::json& args) {
    if (!args.contains("mec") || !args.at("mec").is_string()) {
      throw Error("invalid_arguments", "missing string argument 'mec'");
    }
    return parse_mec(args.at("mec").get<std::string>());
  }

  nlohmann::json measure(const nlohmann::json& args, double now) const {
    const MecId mec = mec_argument(args);
    double delta = default_delta_s_;
    if (args.contains("delta") && !args.at("delta").is_null()) {
      if (!args.at("delta").is_number()) throw Error("invalid_arguments", "'delta' must be a number of seconds");
      delta = args.at("delta").get<double>();
    }
    if (!(delta > 0)) throw Error("invalid_arguments", "'delta' must be > 0");
    auto est = power_.mean_power(subject_of(mec), now, delta);
    return {{"mec", to_string(mec)},
            {"mean_power_watts", est.mean_power_watts},
            {"unit", "W"},
            {"window_s", delta},
            {"sample_count", est.sample_count}};
  }

  nlohmann::json actuate(const nlohmann::json& args) {
    auto ack = upf_.upf_set_target(mec_argument(args));
    return {{"previous", to_string(ack.previous)}, {"current", to_string(ack.current)}, {"ts", ack.ts}};
  }

  const telemetry::PowerSource& power_;
  sim::UpfControl& upf_;
  double default_delta_s_;
  std::mutex mutex_;
};

}  // namespace agora::agent
