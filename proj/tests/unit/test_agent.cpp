#include <gtest/gtest.h>

#include "agora/agent/engine.hpp"
#include "agora/agent/loop.hpp"
#include "agora/agent/remote_engine.hpp"
#include "agora/compliance/grade.hpp"
#include "agora/sim/world.hpp"

using namespace agora;
using namespace agora::agent;

namespace {

sim::WorldConfig quiet() {
  sim::WorldConfig cfg;
  cfg.mec1.noise_sigma_watts = 0;
  cfg.mec2.noise_sigma_watts = 0;
  cfg.probe.period_s = 0;
  return cfg;
}

// MEC2 held at 0.8 load for the whole test horizon.
sim::World stressed_world() {
  sim::World w(quiet(), {{MecId::MEC2, 0.0, 10000.0, 0.8, 3}});
  w.advance(60.0);
  return w;
}

Intent intent_of(IntentKind kind, double theta = kStatedThresholdWatts) {
  for (auto i : default_intent_suite(theta))
    if (i.kind == kind) return i;
  throw std::logic_error("missing intent kind");
}

class FixedPower final : public telemetry::PowerSource {
public:
  explicit FixedPower(double watts) : watts_(watts) {}
  telemetry::PowerEstimate mean_power(Subject s, double now, double delta) const override {
    return {s, {now - delta, now}, watts_, 60};
  }

private:
  double watts_;
};

class RecordingClock final : public Clock {
public:
  double now() const override { return t_; }
  void elapse(double s) override { t_ += s; }
  void set_inference_active(bool a) override { active_ = a; }
  double t_ = 100.0;
  bool active_ = false;
};

}  // namespace

TEST(Policy, StrictThresholdRule) {
  EXPECT_EQ(oracle_decide(25, 20), Action::RouteToMEC1);
  EXPECT_EQ(oracle_decide(20, 20), Action::RouteToMEC2);
  EXPECT_EQ(oracle_decide(0, 20), Action::RouteToMEC2);
  EXPECT_EQ(oracle_decide(20.000001, 20), Action::RouteToMEC1);
  static_assert(oracle_decide(42.4, 20) == Action::RouteToMEC1);
}

TEST(Intent, ThetaMapping) {
  EXPECT_DOUBLE_EQ(extract_theta(intent_of(IntentKind::Urgent), 35), 20.0);
  EXPECT_DOUBLE_EQ(extract_theta(intent_of(IntentKind::PolicyBased), 35), 20.0);
  EXPECT_DOUBLE_EQ(extract_theta(intent_of(IntentKind::Threshold, 20), 35), 20.0);
  EXPECT_DOUBLE_EQ(extract_theta(intent_of(IntentKind::Threshold, 27.5), 35), 27.5);
  EXPECT_DOUBLE_EQ(extract_theta(intent_of(IntentKind::Contextual), 20), 20.0);
  EXPECT_DOUBLE_EQ(extract_theta(intent_of(IntentKind::Contextual), 30), 30.0);
}

TEST(Intent, SuiteTextsAndJson) {
  auto suite = default_intent_suite();
  ASSERT_EQ(suite.size(), 4u);
  EXPECT_NE(suite[0].text.find("20"), std::string::npos);
  for (const auto& i : suite) {
    EXPECT_FALSE(i.text.empty());
    auto back = intent_from_json(intent_to_json(i));
    EXPECT_EQ(back.id, i.id);
    EXPECT_EQ(back.kind, i.kind);
    EXPECT_EQ(back.text, i.text);
    EXPECT_DOUBLE_EQ(back.theta_watts, i.theta_watts);
  }
}

TEST(Intent, NonAsciiTextPassesThrough) {
  auto j = nlohmann::json{{"id", "ctx-es"}, {"kind", "contextual"}, {"text", "Reduce el consumo energético ahora"}};
  auto i = intent_from_json(j);
  EXPECT_EQ(i.text, "Reduce el consumo energético ahora");
}

TEST(OracleLoop, StressedWorldUrgentIntent) {
  auto world = stressed_world();
  telemetry::StorePowerSource source(world.telemetry());
  ToolBroker broker(source, world);
  OracleEngine oracle;
  auto trace = run_decision(oracle, intent_of(IntentKind::Urgent), broker, world);

  ASSERT_EQ(trace.tool_calls.size(), 2u);
  EXPECT_EQ(trace.tool_calls[0].tool_name, kEnergyTool);
  EXPECT_EQ(trace.tool_calls[0].arguments.at("mec"), "MEC2");
  EXPECT_NEAR(trace.tool_calls[0].result.at("mean_power_watts").get<double>(), 42.4, 1e-9);
  EXPECT_EQ(trace.tool_calls[0].result.at("unit"), "W");
  EXPECT_EQ(trace.tool_calls[1].tool_name, kUpfTool);
  EXPECT_EQ(trace.tool_calls[1].arguments.at("mec"), "MEC1");
  ASSERT_TRUE(trace.final_target.has_value());
  EXPECT_EQ(*trace.final_target, Action::RouteToMEC1);
  EXPECT_EQ(world.upf_get_target(), MecId::MEC1);
  EXPECT_FALSE(trace.failed);
  EXPECT_GT(trace.interval.t_end, trace.interval.t_start);
  EXPECT_LT(trace.tool_calls[0].ts, trace.tool_calls[1].ts);

  auto rec = compliance::grade(trace, trace.theta_watts);
  EXPECT_TRUE(rec.c_tool);
  EXPECT_TRUE(rec.c_act);
}

TEST(OracleLoop, IdleWorldStaysExplicitly) {
  sim::World world(quiet());
  world.advance(60.0);
  telemetry::StorePowerSource source(world.telemetry());
  ToolBroker broker(source, world);
  OracleEngine oracle;
  auto trace = run_decision(oracle, intent_of(IntentKind::Threshold), broker, world);
  ASSERT_TRUE(trace.final_target.has_value());
  EXPECT_EQ(*trace.final_target, Action::RouteToMEC2);
  EXPECT_EQ(outcome_of(trace), Outcome::ExplicitStay);
}

TEST(ScriptedLoop, BlindActuatorNeverMeasures) {
  auto world = stressed_world();
  telemetry::StorePowerSource source(world.telemetry());
  ToolBroker broker(source, world);
  auto blind = make_blind_actuator();
  auto trace = run_decision(*blind, intent_of(IntentKind::Urgent), broker, world);
  ASSERT_EQ(trace.tool_calls.size(), 1u);
  EXPECT_EQ(trace.tool_calls[0].tool_name, kUpfTool);
  EXPECT_EQ(trace.final_target, Action::RouteToMEC1);
  auto rec = compliance::grade(trace, 20);
  EXPECT_FALSE(rec.c_tool);
  EXPECT_FALSE(rec.c_act);
}

TEST(ScriptedLoop, TextOnlyHasNoToolCalls) {
  auto world = stressed_world();
  telemetry::StorePowerSource source(world.telemetry());
  ToolBroker broker(source, world);
  auto text = make_text_only();
  auto trace = run_decision(*text, intent_of(IntentKind::PolicyBased), broker, world);
  EXPECT_TRUE(trace.tool_calls.empty());
  EXPECT_FALSE(trace.final_target.has_value());
  EXPECT_FALSE(trace.final_text.empty());
  EXPECT_EQ(trace.rounds, 0);
}

TEST(ScriptedLoop, ToolRoundLimit) {
  ScriptStep again;
  again.tool_calls.emplace_back(std::string(kEnergyTool), R"({"mec":"MEC2","delta":5})");
  ScriptedEngine looping("looper", {again});
  auto world = stressed_world();
  telemetry::StorePowerSource source(world.telemetry());
  ToolBroker broker(source, world);
  DecisionOptions opts;
  opts.max_tool_rounds = 6;
  auto trace = run_decision(looping, intent_of(IntentKind::Urgent), broker, world, opts);
  EXPECT_TRUE(trace.failed);
  EXPECT_EQ(trace.rounds, 6);
  EXPECT_EQ(trace.tool_calls.size(), 6u);
  EXPECT_NE(trace.error.find(errc::tool_loop_exceeded), std::string::npos);
  auto rec = compliance::grade(trace, 20);
  EXPECT_FALSE(rec.valid);
  EXPECT_FALSE(rec.c_tool);
  EXPECT_FALSE(rec.c_act);
}

TEST(ScriptedLoop, ToolErrorsAreRelayedNotFatal) {
  ScriptStep bad;
  bad.tool_calls.emplace_back(std::string(kUpfTool), R"({"mec":"MEC3"})");
  ScriptStep unknown;
  unknown.tool_calls.emplace_back("reboot_everything", "{}");
  ScriptStep done;
  done.content = "gave up";
  ScriptedEngine engine("errs", {bad, unknown, done});
  auto world = stressed_world();
  telemetry::StorePowerSource source(world.telemetry());
  ToolBroker broker(source, world);
  auto trace = run_decision(engine, intent_of(IntentKind::Urgent), broker, world);
  EXPECT_FALSE(trace.failed);
  ASSERT_EQ(trace.tool_calls.size(), 1u);
  EXPECT_FALSE(trace.tool_calls[0].ok);
  EXPECT_EQ(trace.tool_calls[0].result.at("error"), errc::unknown_mec);
  ASSERT_EQ(trace.rejected_tools.size(), 1u);
  EXPECT_EQ(trace.rejected_tools[0], "reboot_everything");
  EXPECT_EQ(world.upf_get_target(), MecId::MEC2);
  EXPECT_FALSE(trace.final_target.has_value());
}

TEST(ToolBroker, MalformedArgumentsAndDefaults) {
  auto world = stressed_world();
  telemetry::StorePowerSource source(world.telemetry());
  ToolBroker broker(source, world, 10.0);
  auto bad = broker.execute(kEnergyTool, "{\"mec\": \"MEC2\"", world.now());
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.result.at("error"), "invalid_arguments");
  EXPECT_TRUE(bad.arguments.is_string());
  auto ok = broker.execute(kEnergyTool, R"({"mec":"MEC2"})", world.now());
  ASSERT_TRUE(ok.ok);
  EXPECT_DOUBLE_EQ(ok.result.at("window_s").get<double>(), 10.0);
  auto neg = broker.execute(kEnergyTool, R"({"mec":"MEC2","delta":-1})", world.now());
  EXPECT_FALSE(neg.ok);
  auto unknown = broker.execute(kEnergyTool, R"({"mec":"MEC9"})", world.now());
  EXPECT_FALSE(unknown.ok);
  EXPECT_EQ(unknown.result.at("error"), errc::unknown_mec);
}

TEST(ToolBroker, NoDataIsExplicitFailure) {
  telemetry::TelemetryStore empty;
  telemetry::StorePowerSource source(empty);
  sim::World world(quiet());
  ToolBroker broker(source, world);
  auto out = broker.execute(kEnergyTool, R"({"mec":"MEC2","delta":5})", 10.0);
  EXPECT_FALSE(out.ok);
  EXPECT_EQ(out.result.at("error"), errc::no_data);
}

TEST(ToolSpecs, DeclareBothTools) {
  auto specs = tool_specs();
  ASSERT_EQ(specs.size(), 2u);
  std::set<std::string> names;
  for (const auto& s : specs) {
    EXPECT_EQ(s.at("type"), "function");
    names.insert(s.at("function").at("name").get<std::string>());
    EXPECT_TRUE(s.at("function").at("parameters").at("properties").contains("mec"));
  }
  EXPECT_EQ(names, (std::set<std::string>{"energy_mean_last_time", "upf_set_target"}));
}

TEST(InferenceFlag, SetDuringDecisionOnly) {
  RecordingClock clock;
  FixedPower power(30);
  sim::World upf(quiet());
  ToolBroker broker(power, upf);
  struct Probe final : DecisionEngine {
    RecordingClock* c;
    std::string name = "probe";
    bool seen = false;
    const std::string& id() const override { return name; }
    void reset() override {}
    EngineReply complete(const EngineRequest&) override {
      seen = c->active_;
      return {{}, "ok", Usage{10, 4}, 0.5};
    }
  } engine;
  engine.c = &clock;
  auto trace = run_decision(engine, intent_of(IntentKind::Urgent), broker, clock);
  EXPECT_TRUE(engine.seen);
  EXPECT_FALSE(clock.active_);
  EXPECT_DOUBLE_EQ(trace.latency_s(), 0.5);
  EXPECT_EQ(trace.prompt_tokens, 10);
  EXPECT_EQ(trace.generated_tokens, 4);
  EXPECT_TRUE(trace.usage_reported);
}

// Every (p2, theta) cell of the grid must come out fully compliant.
TEST(OracleLoop, ExhaustiveComplianceGrid) {
  for (double theta : {10.0, 20.0, 30.0}) {
    for (int k = 0; k <= 10; ++k) {
      const double p2 = 5.0 * k;
      FixedPower power(p2);
      sim::World upf(quiet());
      RecordingClock clock;
      ToolBroker broker(power, upf);
      OracleEngine oracle;
      auto trace = run_decision(oracle, intent_of(IntentKind::Threshold, theta), broker, clock);
      auto rec = compliance::grade(trace, theta);
      EXPECT_TRUE(rec.c_tool) << "p2=" << p2 << " theta=" << theta;
      EXPECT_TRUE(rec.c_act) << "p2=" << p2 << " theta=" << theta;
      const MecId want = p2 > theta ? MecId::MEC1 : MecId::MEC2;
      EXPECT_EQ(upf.upf_get_target(), want);
    }
  }
}

TEST(OracleLoop, RepeatableAcrossResets) {
  auto once = [] {
    auto world = stressed_world();
    telemetry::StorePowerSource source(world.telemetry());
    ToolBroker broker(source, world);
    OracleEngine oracle;
    oracle.reset();
    return to_json(run_decision(oracle, intent_of(IntentKind::Urgent), broker, world)).dump();
  };
  EXPECT_EQ(once(), once());
}

TEST(TraceJson, RoundTrip) {
  auto world = stressed_world();
  telemetry::StorePowerSource source(world.telemetry());
  ToolBroker broker(source, world);
  OracleEngine oracle;
  DecisionOptions opts;
  opts.run_id = "oracle-r001";
  auto trace = run_decision(oracle, intent_of(IntentKind::Urgent), broker, world, opts);
  trace.prompt_tokens = 12;
  trace.generated_tokens = 7;
  std::stringstream buf;
  write_traces({trace}, buf);
  auto back = read_traces(buf);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(to_json(back[0]), to_json(trace));
}

TEST(RemoteEngine, EnvOverrides) {
  RemoteEngineConfig cfg;
  cfg.base_url = "http://a";
  cfg.model = "m";
  ::setenv("AGORA_LLM_BASE_URL", "http://b:1/v1", 1);
  ::setenv("AGORA_LLM_MODEL", "served", 1);
  ::unsetenv("AGORA_LLM_API_KEY");
  auto out = apply_env_overrides(cfg);
  ::unsetenv("AGORA_LLM_BASE_URL");
  ::unsetenv("AGORA_LLM_MODEL");
  EXPECT_EQ(out.base_url, "http://b:1/v1");
  EXPECT_EQ(out.model, "served");
  EXPECT_EQ(out.api_key, "");
}

TEST(RemoteEngine, FailingRestartHook) {
  RemoteEngineConfig cfg{"http://127.0.0.1:9/v1", "m", "", 1.0, "exit 3", 0.0};
  RemoteChatEngine engine("remote", cfg);
  try {
    engine.reset();
    FAIL() << "expected restart_hook_failed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::restart_hook_failed);
  }
  RemoteEngineConfig ok = cfg;
  ok.restart_hook = "true";
  RemoteChatEngine fine("remote", ok);
  EXPECT_NO_THROW(fine.reset());
}

TEST(RemoteEngine, UnreachableEndpoint) {
  RemoteEngineConfig cfg{"http://127.0.0.1:9/v1", "m", "", 1.0, "", 0.0};
  RemoteChatEngine engine("remote", cfg);
  EXPECT_FALSE(engine.health_check());
  auto world = stressed_world();
  telemetry::StorePowerSource source(world.telemetry());
  ToolBroker broker(source, world);
  auto trace = run_decision(engine, intent_of(IntentKind::Urgent), broker, world);
  EXPECT_TRUE(trace.failed);
  EXPECT_NE(trace.error.find(errc::endpoint_unreachable), std::string::npos);
}
