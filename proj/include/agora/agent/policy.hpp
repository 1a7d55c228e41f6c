#pragma once

#include "agora/types.hpp"

namespace agora::agent {

// Migrate away from MEC2 only when its observed power strictly exceeds the
// threshold; at the threshold traffic stays.
constexpr Action oracle_decide(double p2_watts, double theta_watts) noexcept {
  return p2_watts > theta_watts ? Action::RouteToMEC1 : Action::RouteToMEC2;
}

}  // namespace agora::agent
