#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/csv.hpp"
#include "agora/error.hpp"
#include "agora/types.hpp"

namespace agora::agent {

enum class IntentKind { Threshold, PolicyBased, Contextual, Urgent };

// Threshold the policy-based and urgent phrasings state in their text.
inline constexpr double kStatedThresholdWatts = 20.0;

inline constexpr std::string_view to_string(IntentKind k) noexcept {
  switch (k) {
    case IntentKind::Threshold: return "threshold";
    case IntentKind::PolicyBased: return "policy_based";
    case IntentKind::Contextual: return "contextual";
    case IntentKind::Urgent: return "urgent";
  }
  return "?";
}

inline IntentKind parse_intent_kind(std::string_view s) {
  if (s == "threshold") return IntentKind::Threshold;
  if (s == "policy_based") return IntentKind::PolicyBased;
  if (s == "contextual") return IntentKind::Contextual;
  if (s == "urgent") return IntentKind::Urgent;
  throw Error(errc::config_error, "unknown intent kind '" + std::string(s) + "'");
}

struct Intent {
  std::string id;
  IntentKind kind = IntentKind::Threshold;
  std::string text;  // passed to the engine verbatim, any language
  double theta_watts = kStatedThresholdWatts;
  std::string language_tag = "en";
};

inline void validate(const Intent& i) {
  if (i.id.empty()) throw Error(errc::config_error, "intent id is empty");
  if (!(i.theta_watts > 0)) throw Error(errc::config_error, "intent '" + i.id + "': theta_watts must be > 0");
}

// Threshold implied by the intent: the configured value for threshold
// intents, the stated 20 W for policy-based and urgent ones, and the harness
// default for contextual intents (whose text carries no number).
inline double extract_theta(const Intent& intent, double default_theta) {
  switch (intent.kind) {
    case IntentKind::Threshold: return intent.theta_watts;
    case IntentKind::PolicyBased:
    case IntentKind::Urgent: return kStatedThresholdWatts;
    case IntentKind::Contextual: return default_theta;
  }
  return default_theta;
}

inline std::vector<Intent> default_intent_suite(double theta = kStatedThresholdWatts) {
  const std::string theta_text = csv::format_double(theta);
  return {
      {"threshold", IntentKind::Threshold,
       "Monitor MEC2 power. If > " + theta_text + " W, migrate to MEC1.", theta, "en"},
      {"policy_based", IntentKind::PolicyBased,
       "Is there any green policy violation on MEC2? If energy > 20 W, trigger migration.", 20.0, "en"},
      {"contextual", IntentKind::Contextual,
       "Compare MEC power and move traffic if MEC2 usage is too high.", theta, "en"},
      {"urgent", IntentKind::Urgent, "Execute migration to MEC1 now if MEC2 usage > 20 W.", 20.0, "en"},
  };
}

inline Intent intent_from_json(const nlohmann::json& j) {
  try {
    Intent i;
    i.id = j.at("id").get<std::string>();
    i.kind = parse_intent_kind(j.at("kind").get<std::string>());
    i.text = j.at("text").get<std::string>();
    i.theta_watts = j.value("theta_watts", kStatedThresholdWatts);
    i.language_tag = j.value("language", std::string("en"));
    validate(i);
    return i;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::config_error, std::string("intent: ") + e.what());
  }
}

inline nlohmann::json intent_to_json(const Intent& i) {
  return {{"id", i.id},
          {"kind", to_string(i.kind)},
          {"text", i.text},
          {"theta_watts", i.theta_watts},
          {"language", i.language_tag}};
}

}  // namespace agora::agent
