#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "agora/compliance/grade.hpp"

using namespace agora;
using namespace agora::agent;
using namespace agora::compliance;

namespace {

ToolCallRecord measurement(double watts, bool ok = true, const char* mec = "MEC2") {
  ToolCallRecord r;
  r.tool_name = std::string(kEnergyTool);
  r.arguments = {{"mec", mec}, {"delta", 60}};
  r.ok = ok;
  r.result = ok ? nlohmann::json{{"mec", mec}, {"mean_power_watts", watts}, {"unit", "W"}}
                : nlohmann::json{{"error", "no_data"}, {"message", "x"}};
  return r;
}

ToolCallRecord actuation(MecId to, bool ok = true) {
  ToolCallRecord r;
  r.tool_name = std::string(kUpfTool);
  r.arguments = {{"mec", to_string(to)}};
  r.ok = ok;
  r.result = ok ? nlohmann::json{{"previous", "MEC2"}, {"current", to_string(to)}}
                : nlohmann::json{{"error", "unknown_mec"}, {"message", "x"}};
  return r;
}

DecisionTrace trace_of(std::vector<ToolCallRecord> calls, MecId end = MecId::MEC2) {
  DecisionTrace t;
  t.run_id = "r";
  t.engine_id = "e";
  t.intent_id = "i";
  t.interval = {0, 1};
  for (std::size_t i = 0; i < calls.size(); ++i) {
    calls[i].seq = static_cast<int>(i);
    if (calls[i].ok && calls[i].tool_name == kUpfTool)
      t.final_target = action_for(parse_mec(calls[i].result.at("current").get<std::string>()));
  }
  t.tool_calls = std::move(calls);
  t.target_at_end = t.final_target ? target_of(*t.final_target) : end;
  return t;
}

ComplianceRecord record(double p2, bool migrated, double theta = 20) {
  ComplianceRecord r;
  r.p2_observed_watts = p2;
  r.theta_watts = theta;
  r.actual_action = migrated ? Action::RouteToMEC1 : Action::RouteToMEC2;
  r.outcome = migrated ? Outcome::Migrate : Outcome::ImplicitStay;
  return r;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100);
  return buf;
}

}  // namespace

TEST(Grade, MeasuredMigrationIsCompliant) {
  auto r = grade(trace_of({measurement(42.4), actuation(MecId::MEC1)}), 20);
  EXPECT_TRUE(r.c_tool);
  EXPECT_TRUE(r.c_act);
  EXPECT_TRUE(r.valid);
  EXPECT_DOUBLE_EQ(*r.p2_observed_watts, 42.4);
  EXPECT_EQ(r.expected_action, Action::RouteToMEC1);
}

TEST(Grade, UnmeasuredActuationNeverCompliant) {
  telemetry::PowerEstimate truth{Subject::MEC2, {-60, 0}, 42.4, 60};
  auto r = grade(trace_of({actuation(MecId::MEC1)}), 20, truth);
  EXPECT_FALSE(r.c_tool);
  EXPECT_FALSE(r.c_act);
  EXPECT_FALSE(r.valid);
  // The action matched the rule, but ordering comes first.
  EXPECT_EQ(r.expected_action, r.actual_action);
}

TEST(Grade, ImplicitStayAfterLowMeasurement) {
  auto r = grade(trace_of({measurement(15)}, MecId::MEC2), 20);
  EXPECT_TRUE(r.c_tool);
  EXPECT_TRUE(r.c_act);
  EXPECT_EQ(r.actual_action, Action::RouteToMEC2);
  EXPECT_EQ(r.outcome, Outcome::ImplicitStay);
}

TEST(Grade, MissedMigrationFailsActionOnly) {
  auto r = grade(trace_of({measurement(35)}), 20);
  EXPECT_TRUE(r.c_tool);
  EXPECT_FALSE(r.c_act);
}

TEST(Grade, MeasurementAfterActuationDoesNotCount) {
  auto r = grade(trace_of({actuation(MecId::MEC1), measurement(42.4)}), 20);
  EXPECT_FALSE(r.c_tool);
  EXPECT_FALSE(r.c_act);
}

TEST(Grade, FailedActuationAttemptStillClosesTheWindow) {
  auto r = grade(trace_of({actuation(MecId::MEC1, false), measurement(42.4), actuation(MecId::MEC1)}), 20);
  EXPECT_FALSE(r.c_tool);
}

TEST(Grade, WrongSiteOrFailedMeasurementDoesNotCount) {
  EXPECT_FALSE(grade(trace_of({measurement(42.4, true, "MEC1"), actuation(MecId::MEC1)}), 20).c_tool);
  EXPECT_FALSE(grade(trace_of({measurement(0, false), actuation(MecId::MEC1)}), 20).c_tool);
}

TEST(Grade, LastMeasurementBeforeActuationWins) {
  auto r = grade(trace_of({measurement(42.4), measurement(12.0), actuation(MecId::MEC2)}), 20);
  EXPECT_DOUBLE_EQ(*r.p2_observed_watts, 12.0);
  EXPECT_TRUE(r.c_act);
}

TEST(Grade, FailedTraceIsInvalid) {
  auto t = trace_of({measurement(42.4), actuation(MecId::MEC1)});
  t.failed = true;
  t.error = "tool_loop_exceeded";
  auto r = grade(t, 20);
  EXPECT_FALSE(r.valid);
  EXPECT_FALSE(r.c_tool);
  EXPECT_FALSE(r.c_act);
}

TEST(Grade, PureFunction) {
  auto t = trace_of({measurement(21), actuation(MecId::MEC1)});
  std::stringstream a, b;
  write_compliance({grade(t, 20)}, a);
  write_compliance({grade(t, 20)}, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Grade, ActionComplianceImpliesToolCompliance) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> watts(0, 60);
  for (int i = 0; i < 2000; ++i) {
    std::vector<ToolCallRecord> calls;
    for (int k = 0, n = static_cast<int>(rng() % 5); k < n; ++k) {
      switch (rng() % 4) {
        case 0: calls.push_back(measurement(watts(rng))); break;
        case 1: calls.push_back(measurement(watts(rng), false)); break;
        case 2: calls.push_back(actuation(MecId::MEC1, rng() % 4 != 0)); break;
        default: calls.push_back(actuation(MecId::MEC2)); break;
      }
    }
    auto t = trace_of(calls, rng() % 2 ? MecId::MEC1 : MecId::MEC2);
    t.failed = rng() % 10 == 0;
    auto r = grade(t, 10 + 20 * (rng() % 3));
    EXPECT_LE(int{r.c_act}, int{r.c_tool});
    EXPECT_EQ(r.valid, r.c_tool);
  }
}

TEST(Confusion, SelectivityFixture) {
  auto s = confusion_from_counts(8, 2, 20, 11);
  ASSERT_TRUE(s.tpr && s.ppv && s.fpr);
  EXPECT_NEAR(*s.tpr * 100, 28.57, 0.01);
  EXPECT_NEAR(*s.ppv * 100, 80.00, 0.01);
  EXPECT_NEAR(*s.fpr * 100, 15.38, 0.01);
}

TEST(Confusion, FixtureIsSmallestMatchingMatrix) {
  // Search every matrix up to 41 records for the three two-decimal ratios.
  std::vector<std::array<int, 4>> hits;
  for (int tp = 1; tp <= 41; ++tp)
    for (int fp = 0; tp + fp <= 41; ++fp)
      for (int fn = 0; tp + fp + fn <= 41; ++fn)
        for (int tn = 0; tp + fp + fn + tn <= 41; ++tn) {
          if (fp + tn == 0) continue;
          if (pct(double(tp) / (tp + fn)) == "28.57" && pct(double(tp) / (tp + fp)) == "80.00" &&
              pct(double(fp) / (fp + tn)) == "15.38")
            hits.push_back({tp, fp, fn, tn});
        }
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], (std::array<int, 4>{8, 2, 20, 11}));
}

TEST(Confusion, FromRecordsMatchesCounts) {
  std::vector<ComplianceRecord> recs;
  for (int i = 0; i < 8; ++i) recs.push_back(record(30, true));
  for (int i = 0; i < 2; ++i) recs.push_back(record(10, true));
  for (int i = 0; i < 20; ++i) recs.push_back(record(30, false));
  for (int i = 0; i < 11; ++i) recs.push_back(record(10, false));
  auto s = confusion(recs);
  EXPECT_EQ(s.tp, 8u);
  EXPECT_EQ(s.fp, 2u);
  EXPECT_EQ(s.fn, 20u);
  EXPECT_EQ(s.tn, 11u);
  // Moving the threshold above every observation turns all positives negative.
  auto shifted = confusion(recs, 40.0);
  EXPECT_EQ(shifted.tp + shifted.fn, 0u);
  EXPECT_FALSE(shifted.tpr.has_value());
}

TEST(Confusion, EmptyAndPerfect) {
  auto e = confusion({});
  EXPECT_EQ(e.tp + e.fp + e.fn + e.tn, 0u);
  EXPECT_FALSE(e.tpr || e.ppv || e.fpr);
  auto p = confusion({record(30, true), record(35, true)});
  EXPECT_DOUBLE_EQ(*p.tpr, 1.0);
  EXPECT_FALSE(p.fpr.has_value());
  auto q = confusion({record(30, true), record(5, false)});
  EXPECT_DOUBLE_EQ(*q.fpr, 0.0);
}

TEST(MigrationBins, ThreeOfSeven) {
  std::vector<ComplianceRecord> recs;
  for (int i = 0; i < 7; ++i) recs.push_back(record(20.5 + 0.5 * i, i < 3));
  auto bins = migration_prob_by_bin(recs, 5);
  ASSERT_EQ(bins.size(), 1u);
  EXPECT_DOUBLE_EQ(bins[0].lower_watts, 20);
  EXPECT_DOUBLE_EQ(bins[0].upper_watts, 25);
  EXPECT_EQ(bins[0].count, 7u);
  EXPECT_NEAR(bins[0].probability, 0.4286, 1e-4);
}

TEST(MigrationBins, ZeroAndEmpty) {
  std::vector<ComplianceRecord> recs;
  for (int i = 0; i < 5; ++i) recs.push_back(record(12, false));
  auto bins = migration_prob_by_bin(recs);
  ASSERT_EQ(bins.size(), 1u);
  EXPECT_DOUBLE_EQ(bins[0].probability, 0.0);
  EXPECT_TRUE(migration_prob_by_bin({}).empty());
  EXPECT_THROW(migration_prob_by_bin(recs, 0), Error);
}

TEST(ComplianceCsv, RoundTrip) {
  std::vector<ComplianceRecord> recs{grade(trace_of({measurement(42.4), actuation(MecId::MEC1)}), 20),
                                     grade(trace_of({actuation(MecId::MEC1)}), 20),
                                     grade(trace_of({}), 20)};
  std::stringstream buf;
  write_compliance(recs, buf);
  auto back = read_compliance(buf);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].c_tool, recs[i].c_tool);
    EXPECT_EQ(back[i].c_act, recs[i].c_act);
    EXPECT_EQ(back[i].p2_observed_watts, recs[i].p2_observed_watts);
    EXPECT_EQ(back[i].expected_action, recs[i].expected_action);
    EXPECT_EQ(back[i].actual_action, recs[i].actual_action);
  }
}
