#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "agora/agent/loop.hpp"
#include "agora/compliance/grade.hpp"
#include "agora/metrics/energy.hpp"
#include "agora/runner/artifacts.hpp"
#include "agora/runner/plan.hpp"
#include "agora/sim/world.hpp"

namespace agora::runner {

// Per-run file names inside <output_dir>/<engine_id>/<run_id>/.
namespace files {
inline constexpr const char* traces = "traces.jsonl";
inline constexpr const char* compliance = "compliance.csv";
inline constexpr const char* metrics = "metrics.csv";
inline constexpr const char* stress = "stress.csv";
inline constexpr const char* telemetry = "telemetry.csv";
inline constexpr const char* ue_probes = "ue_probes.csv";
inline constexpr const char* actuations = "actuations.csv";
inline constexpr const char* summary = "summary.csv";
inline constexpr const char* manifest = "manifest.json";
}  // namespace files

struct RunOutput {
  RunRecord record;
  std::vector<agent::DecisionTrace> traces;
  std::vector<compliance::ComplianceRecord> compliance;
  std::vector<metrics::EnergyReport> reports;
  std::vector<sim::UeProbeRecord> ue_records;
  std::vector<stress::StressEvent> stress;
  sim::ActuationLog actuations;
  telemetry::PowerSeries telemetry_snapshot;
  MecId initial_target = MecId::MEC2;
};

struct RunArtifacts {
  std::filesystem::path output_dir;
  Manifest manifest;
  std::vector<metrics::EngineSummary> summaries;
  std::vector<RunOutput> runs;

  bool any_skipped() const {
    return std::any_of(manifest.runs.begin(), manifest.runs.end(), [](const RunRecord& r) { return r.status == "skipped"; });
  }
  bool any_partial() const {
    return std::any_of(manifest.runs.begin(), manifest.runs.end(),
                       [](const RunRecord& r) { return r.status == "partial" || r.status == "invalid"; });
  }
};

struct ExecuteOptions {
  // Called after each decision; throwing aborts the plan (used to exercise
  // interruption handling).
  std::function<void(const agent::DecisionTrace&)> on_decision;
  std::function<std::unique_ptr<agent::DecisionEngine>(const EngineConfig&)> engine_factory = make_engine;
  std::chrono::milliseconds health_retry_delay{500};
  bool write_files = true;
};

inline std::string config_hash(const RunPlan& plan) { return sha256_hex(plan.source.dump()); }

inline std::string run_id_for(const std::string& engine_id, int run_index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "r%03d", run_index);
  return engine_id + "-" + buf;
}

// One cold-start run: fresh world and stress schedule from the run seed,
// background UE probing, the intent suite with fixed spacing, then grading
// and energy attribution.
inline RunOutput execute_run(const RunPlan& plan, agent::DecisionEngine& engine, int run_index,
                             const ExecuteOptions& options) {
  RunOutput out;
  out.record.engine_id = engine.id();
  out.record.run_index = run_index;
  out.record.seed = plan.base_seed + static_cast<std::uint64_t>(run_index);
  out.record.run_id = run_id_for(engine.id(), run_index);

  stress::StressProfile profile = plan.stress_profile;
  profile.seed = out.record.seed;
  auto schedule = stress::generate_schedule(profile);

  sim::WorldConfig wc = plan.world;
  wc.seeded(out.record.seed);
  sim::World world(wc, schedule.events);
  out.initial_target = wc.initial_target;
  if (wc.probe.period_s > 0) world.start_background_probing();
  world.advance(plan.warmup_s);

  telemetry::StorePowerSource source(world.telemetry());
  agent::ToolBroker broker(source, world, plan.tool_delta_s);
  agent::DecisionOptions dopts;
  dopts.run_id = out.record.run_id;
  dopts.max_tool_rounds = plan.max_tool_rounds;
  dopts.default_theta = plan.theta_default;
  if (!plan.system_preamble.empty()) dopts.system_preamble = plan.system_preamble;

  for (std::size_t i = 0; i < plan.intent_suite.size(); ++i) {
    if (i > 0) world.advance(plan.inter_intent_spacing_s);
    out.traces.push_back(agent::run_decision(engine, plan.intent_suite[i], broker, world, dopts));
    if (options.on_decision) options.on_decision(out.traces.back());
  }
  world.advance(plan.inter_intent_spacing_s);

  const auto& store = world.telemetry();
  for (const auto& trace : out.traces) {
    std::optional<telemetry::PowerEstimate> fallback;
    try {
      fallback = store.query_mean_power(Subject::MEC2, trace.interval.t_start, plan.tool_delta_s);
    } catch (const Error& e) {
      if (e.code() != errc::no_data) throw;
    }
    out.compliance.push_back(compliance::grade(trace, trace.theta_watts, fallback));
    out.reports.push_back(metrics::decision_report(trace, store));
    out.record.failed_decisions += trace.failed ? 1 : 0;
  }
  out.record.decisions = out.traces.size();
  out.record.status = out.record.failed_decisions > 0 ? "partial" : "ok";
  out.ue_records = world.probe_log();
  out.stress = schedule.events;
  out.actuations = world.actuation_log();
  out.telemetry_snapshot = store.snapshot();
  return out;
}

inline RunOutput execute_run(const RunPlan& plan, agent::DecisionEngine& engine, int run_index) {
  return execute_run(plan, engine, run_index, ExecuteOptions{});
}

template <typename Write>
std::string render(Write&& write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

inline void write_run_files(ArtifactWriter& writer, const RunOutput& run) {
  const std::string dir = run.record.engine_id + "/" + run.record.run_id + "/";
  writer.write(dir + files::traces, render([&](std::ostream& o) { agent::write_traces(run.traces, o); }));
  writer.write(dir + files::compliance, render([&](std::ostream& o) { compliance::write_compliance(run.compliance, o); }));
  writer.write(dir + files::metrics, render([&](std::ostream& o) { metrics::write_decision_metrics(run.reports, o); }));
  writer.write(dir + files::stress, render([&](std::ostream& o) { stress::write_stress_log(run.stress, o); }));
  writer.write(dir + files::telemetry,
               render([&](std::ostream& o) { telemetry::write_snapshot(run.telemetry_snapshot, o); }));
  writer.write(dir + files::ue_probes, render([&](std::ostream& o) { sim::write_probe_log(run.ue_records, o); }));
  writer.write(dir + files::actuations, render([&](std::ostream& o) { sim::write_actuation_log(run.actuations, o); }));
}

inline void write_manifest(const std::filesystem::path& root, Manifest& manifest, const ArtifactWriter& writer) {
  manifest.files = writer.files();
  write_file_atomic(root / files::manifest, to_json(manifest).dump(2) + "\n");
}

inline metrics::EngineSummary summarize(const std::string& engine_id, const std::vector<RunOutput>& runs) {
  std::vector<metrics::EnergyReport> reports;
  std::vector<compliance::ComplianceRecord> records;
  std::vector<sim::UeProbeRecord> ue;
  for (const auto& r : runs) {
    if (r.record.engine_id != engine_id) continue;
    reports.insert(reports.end(), r.reports.begin(), r.reports.end());
    records.insert(records.end(), r.compliance.begin(), r.compliance.end());
    ue.insert(ue.end(), r.ue_records.begin(), r.ue_records.end());
  }
  return metrics::aggregate(engine_id, reports, records, ue);
}

// Every engine gets R runs with seeds base_seed + r, each on a freshly built
// engine that is also reset first. The manifest is rewritten after every run
// and only marked complete at the end.
inline RunArtifacts execute_plan(const RunPlan& plan, const ExecuteOptions& options = {}) {
  validate(plan);
  RunArtifacts art;
  art.output_dir = plan.output_dir;
  art.manifest.config_hash = config_hash(plan);
  art.manifest.base_seed = plan.base_seed;
  ArtifactWriter writer(plan.output_dir);
  auto checkpoint = [&] {
    if (options.write_files) write_manifest(plan.output_dir, art.manifest, writer);
  };
  checkpoint();

  for (const auto& engine_cfg : plan.engines) {
    for (int r = 1; r <= plan.repetitions; ++r) {
      RunRecord skipped;
      skipped.engine_id = engine_cfg.id;
      skipped.run_index = r;
      skipped.seed = plan.base_seed + static_cast<std::uint64_t>(r);
      skipped.run_id = run_id_for(engine_cfg.id, r);

      std::unique_ptr<agent::DecisionEngine> engine;
      try {
        engine = options.engine_factory(engine_cfg);
        engine->reset();
      } catch (const Error& e) {
        if (e.code() == errc::config_error) throw;
        skipped.status = "invalid";
        skipped.error = e.code() + ": " + e.what();
        art.manifest.runs.push_back(skipped);
        checkpoint();
        continue;
      }
      bool healthy = false;
      for (int attempt = 0; attempt < std::max(1, plan.health_check_attempts) && !healthy; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(options.health_retry_delay);
        healthy = engine->health_check();
      }
      if (!healthy) {
        skipped.status = "skipped";
        skipped.error = std::string(errc::endpoint_unreachable) + ": health check failed";
        art.manifest.runs.push_back(skipped);
        checkpoint();
        continue;
      }

      RunOutput run = execute_run(plan, *engine, r, options);
      if (options.write_files) write_run_files(writer, run);
      art.manifest.runs.push_back(run.record);
      art.runs.push_back(std::move(run));
      checkpoint();
    }
  }

  for (const auto& engine_cfg : plan.engines) art.summaries.push_back(summarize(engine_cfg.id, art.runs));
  if (options.write_files) {
    writer.write(files::summary, render([&](std::ostream& o) { metrics::write_summary(art.summaries, o); }));
  }
  art.manifest.complete = true;
  checkpoint();
  art.manifest.files = writer.files();
  return art;
}

}  // namespace agora::runner
