#include <gtest/gtest.h>

#include <fstream>

#include "agora/agent/loop.hpp"
#include "agora/agent/remote_engine.hpp"
#include "agora/agent/stub_server.hpp"
#include "agora/compliance/grade.hpp"
#include "agora/sim/world.hpp"

using namespace agora;
using namespace agora::agent;

namespace {

std::vector<ScriptStep> load_script(const std::string& name) {
  std::ifstream in(std::string(AGORA_SOURCE_DIR) + "/config/scripts/" + name);
  return script_from_json(nlohmann::json::parse(in));
}

struct Fixture {
  sim::World world{[] {
                     sim::WorldConfig c;
                     c.probe.period_s = 0;
                     return c;
                   }(),
                   {{MecId::MEC2, 0.0, 10000.0, 0.8, 3}}};
  telemetry::StorePowerSource source{world.telemetry()};
  ToolBroker broker{source, world};

  Fixture() { world.advance(60.0); }
};

RemoteChatEngine engine_for(const StubLlmServer& stub) {
  RemoteEngineConfig cfg;
  cfg.base_url = stub.base_url();
  cfg.model = "stub-model";
  cfg.timeout_s = 5;
  return RemoteChatEngine("remote", cfg);
}

Intent urgent() { return default_intent_suite()[3]; }

}  // namespace

TEST(Wire, MeasureThenActuateIsCompliant) {
  StubLlmServer stub(load_script("measure_then_actuate.json"));
  stub.start();
  auto engine = engine_for(stub);
  ASSERT_TRUE(engine.health_check());
  Fixture f;
  auto trace = run_decision(engine, urgent(), f.broker, f.world);
  ASSERT_FALSE(trace.failed) << trace.error;
  ASSERT_EQ(trace.tool_calls.size(), 2u);
  EXPECT_EQ(trace.tool_calls[0].tool_name, kEnergyTool);
  EXPECT_TRUE(trace.tool_calls[0].ok);
  EXPECT_EQ(trace.tool_calls[1].tool_name, kUpfTool);
  EXPECT_EQ(trace.final_target, Action::RouteToMEC1);
  EXPECT_EQ(f.world.upf_get_target(), MecId::MEC1);
  auto rec = compliance::grade(trace, 20);
  EXPECT_TRUE(rec.c_tool);
  EXPECT_TRUE(rec.c_act);

  // Usage is summed over the three replies of the script.
  EXPECT_TRUE(trace.usage_reported);
  EXPECT_EQ(trace.prompt_tokens, 310 + 372 + 410);
  EXPECT_EQ(trace.generated_tokens, 24 + 18 + 15);
}

TEST(Wire, RequestShapeFollowsChatCompletions) {
  StubLlmServer stub(load_script("measure_then_actuate.json"));
  stub.start();
  auto engine = engine_for(stub);
  Fixture f;
  run_decision(engine, urgent(), f.broker, f.world);
  auto reqs = stub.requests();
  ASSERT_EQ(reqs.size(), 3u);
  const auto& first = reqs[0];
  EXPECT_EQ(first.at("model"), "stub-model");
  EXPECT_EQ(first.at("tool_choice"), "auto");
  EXPECT_EQ(first.at("tools").size(), 2u);
  ASSERT_EQ(first.at("messages").size(), 2u);
  EXPECT_EQ(first.at("messages")[0].at("role"), "system");
  EXPECT_EQ(first.at("messages")[1].at("role"), "user");
  EXPECT_EQ(first.at("messages")[1].at("content"), urgent().text);

  const auto& second = reqs[1].at("messages");
  ASSERT_EQ(second.size(), 4u);
  EXPECT_EQ(second[2].at("role"), "assistant");
  const auto call_id = second[2].at("tool_calls")[0].at("id");
  EXPECT_EQ(second[2].at("tool_calls")[0].at("type"), "function");
  EXPECT_EQ(second[3].at("role"), "tool");
  EXPECT_EQ(second[3].at("tool_call_id"), call_id);
  auto payload = nlohmann::json::parse(second[3].at("content").get<std::string>());
  EXPECT_EQ(payload.at("unit"), "W");
}

TEST(Wire, MalformedArgumentsAreRelayedThenRetried) {
  StubLlmServer stub(load_script("malformed_then_valid.json"));
  stub.start();
  auto engine = engine_for(stub);
  Fixture f;
  auto trace = run_decision(engine, urgent(), f.broker, f.world);
  ASSERT_FALSE(trace.failed) << trace.error;
  ASSERT_EQ(trace.tool_calls.size(), 3u);
  EXPECT_FALSE(trace.tool_calls[0].ok);
  EXPECT_EQ(trace.tool_calls[0].result.at("error"), "invalid_arguments");
  EXPECT_TRUE(trace.tool_calls[1].ok);
  EXPECT_EQ(trace.final_target, Action::RouteToMEC1);

  // The engine saw the parse error as the tool result of its first call.
  auto reqs = stub.requests();
  ASSERT_GE(reqs.size(), 2u);
  const auto& msgs = reqs[1].at("messages");
  auto relayed = nlohmann::json::parse(msgs.back().at("content").get<std::string>());
  EXPECT_EQ(relayed.at("error"), "invalid_arguments");

  auto rec = compliance::grade(trace, 20);
  EXPECT_TRUE(rec.c_tool);
  EXPECT_TRUE(rec.c_act);
}

TEST(Wire, PlainTextMeansNoToolCalls) {
  StubLlmServer stub(load_script("plain_text.json"));
  stub.start();
  auto engine = engine_for(stub);
  Fixture f;
  auto trace = run_decision(engine, urgent(), f.broker, f.world);
  EXPECT_FALSE(trace.failed);
  EXPECT_TRUE(trace.tool_calls.empty());
  EXPECT_FALSE(trace.final_target.has_value());
  EXPECT_EQ(trace.final_text, "MEC2 looks fine to me.");
  EXPECT_EQ(trace.generated_tokens, 9);
}

TEST(Wire, NoCarryoverBetweenDecisions) {
  StubLlmServer stub(load_script("measure_then_actuate.json"));
  stub.start();
  auto engine = engine_for(stub);
  Fixture f;
  run_decision(engine, urgent(), f.broker, f.world);
  engine.reset();
  run_decision(engine, urgent(), f.broker, f.world);
  auto reqs = stub.requests();
  ASSERT_EQ(reqs.size(), 6u);
  const auto& restart = reqs[3].at("messages");
  ASSERT_EQ(restart.size(), 2u);
  EXPECT_EQ(restart[0].at("role"), "system");
  EXPECT_EQ(restart[1].at("role"), "user");
}

TEST(Wire, HttpErrorFailsTheTrace) {
  ScriptStep boom;
  boom.http_status = 500;
  StubLlmServer stub({boom});
  stub.start();
  auto engine = engine_for(stub);
  Fixture f;
  auto trace = run_decision(engine, urgent(), f.broker, f.world);
  EXPECT_TRUE(trace.failed);
  EXPECT_NE(trace.error.find(errc::engine_http_error), std::string::npos);
  auto rec = compliance::grade(trace, 20);
  EXPECT_FALSE(rec.valid);
  EXPECT_FALSE(rec.c_act);
}

TEST(Wire, ParseChatResponseShapes) {
  auto r = parse_chat_response(
      R"({"choices":[{"message":{"role":"assistant","content":null,"tool_calls":[{"id":"a","type":"function","function":{"name":"upf_set_target","arguments":"{\"mec\":\"MEC1\"}"}}]}}],"usage":{"prompt_tokens":5,"completion_tokens":2}})");
  ASSERT_EQ(r.tool_calls.size(), 1u);
  EXPECT_EQ(r.tool_calls[0].id, "a");
  EXPECT_EQ(r.tool_calls[0].arguments, R"({"mec":"MEC1"})");
  ASSERT_TRUE(r.usage.has_value());
  EXPECT_EQ(r.usage->completion_tokens, 2);
  auto no_usage = parse_chat_response(R"({"choices":[{"message":{"content":"hi"}}]})");
  EXPECT_FALSE(no_usage.usage.has_value());
  EXPECT_THROW(parse_chat_response("<html>"), Error);
  EXPECT_THROW(parse_chat_response(R"({"choices":[]})"), Error);
}
