#pragma once

#include <string>
#include <vector>

#include "agora/agent/engine.hpp"
#include "agora/agent/tools.hpp"
#include "agora/agent/trace.hpp"
#include "agora/clock.hpp"

namespace agora::agent {

inline constexpr std::string_view kSystemPreambleVersion = "agora-preamble/1";

inline constexpr std::string_view kSystemPreamble =
    "You are an energy-aware traffic controller for a 5G edge with two MEC sites. "
    "MEC1 is CPU-only and the greener site; MEC2 is GPU-enabled and may be under load. "
    "Use energy_mean_last_time(mec, delta) to read the mean power in watts of a site over the last "
    "delta seconds, and upf_set_target(mec) to route user traffic to a site. "
    "Always measure MEC2 with energy_mean_last_time before calling upf_set_target, "
    "and base the routing decision only on the measured value and the user's threshold.";

struct DecisionOptions {
  std::string run_id;
  int max_tool_rounds = 6;
  double tool_latency_s = 0.1;
  double default_theta = kStatedThresholdWatts;
  std::string system_preamble = std::string(kSystemPreamble);
};

// Runs one intent through `engine`, routing every tool request through
// `broker`. The interval spans the first prompt to the final reply.
inline DecisionTrace run_decision(DecisionEngine& engine, const Intent& intent, ToolBroker& broker, Clock& clock,
                                  const DecisionOptions& options = {}) {
  DecisionTrace trace;
  trace.run_id = options.run_id;
  trace.engine_id = engine.id();
  trace.intent_id = intent.id;
  trace.theta_watts = extract_theta(intent, options.default_theta);
  trace.target_at_start = broker.upf_target();
  trace.interval.t_start = clock.now();

  const nlohmann::json tools = tool_specs();
  std::vector<ChatMessage> messages;
  messages.push_back({"system", options.system_preamble, {}, {}, {}});
  messages.push_back({"user", intent.text, {}, {}, {}});

  {
    InferenceScope busy(clock);
    while (true) {
      EngineReply reply;
      try {
        reply = engine.complete({intent, messages, tools});
      } catch (const Error& e) {
        trace.failed = true;
        trace.error = e.code() + ": " + e.what();
        break;
      } catch (const std::exception& e) {
        trace.failed = true;
        trace.error = std::string("engine_error: ") + e.what();
        break;
      }
      clock.elapse(reply.inference_s);
      if (reply.usage) {
        trace.usage_reported = true;
        trace.prompt_tokens += reply.usage->prompt_tokens;
        trace.generated_tokens += reply.usage->completion_tokens;
      }
      if (reply.tool_calls.empty()) {
        trace.final_text = reply.content;
        break;
      }
      if (trace.rounds == options.max_tool_rounds) {
        trace.failed = true;
        trace.error = std::string(errc::tool_loop_exceeded) + ": more than " +
                      std::to_string(options.max_tool_rounds) + " tool rounds";
        break;
      }
      ++trace.rounds;

      ChatMessage assistant{"assistant", reply.content, reply.tool_calls, {}, {}};
      messages.push_back(assistant);
      for (const auto& call : reply.tool_calls) {
        const double ts = clock.now();
        ToolOutcome out = broker.execute(call.name, call.arguments, ts);
        if (out.known_tool) {
          ToolCallRecord rec;
          rec.seq = static_cast<int>(trace.tool_calls.size());
          rec.tool_name = call.name;
          rec.arguments = out.arguments;
          rec.result = out.result;
          rec.ok = out.ok;
          rec.ts = ts;
          if (out.ok && call.name == kUpfTool) {
            trace.final_target = action_for(parse_mec(out.result.at("current").get<std::string>()));
          }
          trace.tool_calls.push_back(std::move(rec));
        } else {
          trace.rejected_tools.push_back(call.name);
        }
        messages.push_back({"tool", out.result.dump(), {}, call.id, call.name});
        clock.elapse(options.tool_latency_s);
      }
    }
  }

  trace.interval.t_end = clock.now();
  trace.target_at_end = broker.upf_target();
  return trace;
}

}  // namespace agora::agent
