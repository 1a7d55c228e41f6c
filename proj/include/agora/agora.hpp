#pragma once

#include "agora/agent/engine.hpp"
#include "agora/agent/intent.hpp"
#include "agora/agent/loop.hpp"
#include "agora/agent/policy.hpp"
#include "agora/agent/remote_engine.hpp"
#include "agora/agent/stub_server.hpp"
#include "agora/agent/tools.hpp"
#include "agora/agent/trace.hpp"
#include "agora/compliance/grade.hpp"
#include "agora/metrics/energy.hpp"
#include "agora/runner/execute.hpp"
#include "agora/runner/plan.hpp"
#include "agora/runner/report.hpp"
#include "agora/sim/world.hpp"
#include "agora/stress/schedule.hpp"
#include "agora/telemetry/remote.hpp"
#include "agora/telemetry/store.hpp"
