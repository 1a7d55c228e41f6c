#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "agora/error.hpp"

namespace agora {

// MEC1 is the green (CPU-only) site, MEC2 the GPU-enabled site under stress.
enum class MecId { MEC1, MEC2 };

// Telemetry subjects: the two MEC sites plus the inference host.
enum class Subject { MEC1, MEC2, GPU_HOST };

// The discrete actuation space.
enum class Action { RouteToMEC1, RouteToMEC2 };

inline constexpr std::string_view to_string(MecId m) noexcept {
  return m == MecId::MEC1 ? "MEC1" : "MEC2";
}

inline constexpr std::string_view to_string(Subject s) noexcept {
  switch (s) {
    case Subject::MEC1: return "MEC1";
    case Subject::MEC2: return "MEC2";
    case Subject::GPU_HOST: return "GPU_HOST";
  }
  return "?";
}

inline constexpr std::string_view to_string(Action a) noexcept {
  return a == Action::RouteToMEC1 ? "route_to_MEC1" : "route_to_MEC2";
}

inline std::optional<MecId> try_parse_mec(std::string_view s) noexcept {
  if (s == "MEC1") return MecId::MEC1;
  if (s == "MEC2") return MecId::MEC2;
  return std::nullopt;
}

inline MecId parse_mec(std::string_view s) {
  if (auto m = try_parse_mec(s)) return *m;
  throw Error(errc::unknown_mec, "unknown MEC '" + std::string(s) + "'");
}

inline std::optional<Subject> try_parse_subject(std::string_view s) noexcept {
  if (s == "MEC1") return Subject::MEC1;
  if (s == "MEC2") return Subject::MEC2;
  if (s == "GPU_HOST") return Subject::GPU_HOST;
  return std::nullopt;
}

inline std::optional<Action> try_parse_action(std::string_view s) noexcept {
  if (s == "route_to_MEC1") return Action::RouteToMEC1;
  if (s == "route_to_MEC2") return Action::RouteToMEC2;
  return std::nullopt;
}

inline constexpr Subject subject_of(MecId m) noexcept {
  return m == MecId::MEC1 ? Subject::MEC1 : Subject::MEC2;
}

inline constexpr Action action_for(MecId m) noexcept {
  return m == MecId::MEC1 ? Action::RouteToMEC1 : Action::RouteToMEC2;
}

inline constexpr MecId target_of(Action a) noexcept {
  return a == Action::RouteToMEC1 ? MecId::MEC1 : MecId::MEC2;
}

}  // namespace agora
