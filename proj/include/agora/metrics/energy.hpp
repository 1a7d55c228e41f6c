#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "agora/agent/trace.hpp"
#include "agora/compliance/grade.hpp"
#include "agora/csv.hpp"
#include "agora/sim/probe.hpp"
#include "agora/telemetry/store.hpp"

namespace agora::metrics {

struct EnergyReport {
  std::string run_id;
  std::string engine_id;
  std::string intent_id;
  telemetry::DecisionInterval interval;
  std::int64_t prompt_tokens = 0;
  std::int64_t generated_tokens = 0;
  MecId serving_mec = MecId::MEC2;
  double t_seconds = 0;
  std::optional<double> p_hat_watts;    // absent when telemetry had no data
  std::optional<double> e_mec_joules;
  std::optional<double> e_gpu_joules;
  std::optional<double> e_per_token;
  std::optional<Action> final_target;
  bool aligned_fallback = false;

  bool complete() const noexcept { return e_mec_joules.has_value(); }
};

inline std::optional<double> tokens_energy(double e_gpu_joules, std::int64_t generated_tokens) {
  if (e_gpu_joules < 0) throw Error(errc::domain_error, "GPU energy must be >= 0");
  if (generated_tokens <= 0) return std::nullopt;
  return e_gpu_joules / static_cast<double>(generated_tokens);
}

// Serving-site energy over the decision interval: MEC1 when the decision
// migrated traffic, MEC2 otherwise, at the mean power aligned to the interval.
inline EnergyReport mec_energy(const agent::DecisionTrace& trace, bool migration_active,
                               const telemetry::TelemetryStore& store) {
  EnergyReport r;
  r.run_id = trace.run_id;
  r.engine_id = trace.engine_id;
  r.intent_id = trace.intent_id;
  r.interval = trace.interval;
  r.prompt_tokens = trace.prompt_tokens;
  r.generated_tokens = trace.generated_tokens;
  r.final_target = trace.final_target;
  r.serving_mec = migration_active ? MecId::MEC1 : MecId::MEC2;
  r.t_seconds = trace.interval.length();
  try {
    const auto series = store.series(subject_of(r.serving_mec));
    auto aligned = telemetry::align_to_interval(series, trace.interval);
    r.aligned_fallback = aligned.fallback;
    r.p_hat_watts = telemetry::mean_power(aligned.samples);
    r.e_mec_joules = *r.p_hat_watts * r.t_seconds;
  } catch (const Error& e) {
    if (e.code() != errc::no_data) throw;
  }
  return r;
}

// Full per-decision report: serving-site energy plus accelerator energy and
// energy per generated token. Migration is read off the trace's outcome.
inline EnergyReport decision_report(const agent::DecisionTrace& trace, const telemetry::TelemetryStore& store) {
  const bool migrated = agent::actual_action(trace) == Action::RouteToMEC1;
  EnergyReport r = mec_energy(trace, migrated, store);
  const auto gpu = store.series(Subject::GPU_HOST);
  if (!gpu.empty()) {
    r.e_gpu_joules = telemetry::integrate_energy(gpu, trace.interval);
    r.e_per_token = tokens_energy(*r.e_gpu_joules, trace.generated_tokens);
  }
  return r;
}

struct EngineSummary {
  std::string engine_id;
  std::size_t decisions = 0;
  std::size_t data_loss_count = 0;
  double total_e_mec_joules = 0;
  double total_e_gpu_joules = 0;
  std::int64_t total_tokens = 0;
  std::optional<double> mean_e_per_token;  // total GPU energy / total tokens
  std::vector<double> latency_values;      // sorted, for CDF export
  std::optional<double> mean_latency_s;
  std::vector<double> throughput_tokens_per_s;
  std::optional<double> mean_throughput_tokens_per_s;
  std::optional<double> mean_ue_ping_ms;
  std::optional<double> mean_e_mec_joules;
  std::optional<double> c_tool_rate;
  std::optional<double> c_act_rate;
  // Pareto point: (mean serving-site energy, mean UE latency).
  std::optional<std::pair<double, double>> pareto_point;
};

inline std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline EngineSummary aggregate(const std::string& engine_id, const std::vector<EnergyReport>& reports,
                               const std::vector<compliance::ComplianceRecord>& records,
                               const std::vector<sim::UeProbeRecord>& ue_records) {
  EngineSummary s;
  s.engine_id = engine_id;
  s.decisions = reports.size();
  std::vector<double> e_mec;
  std::int64_t tokens_with_gpu = 0;
  for (const auto& r : reports) {
    s.latency_values.push_back(r.t_seconds);
    s.total_tokens += r.generated_tokens;
    if (r.t_seconds > 0) {
      s.throughput_tokens_per_s.push_back(static_cast<double>(r.generated_tokens) / r.t_seconds);
    }
    if (!r.complete()) {
      ++s.data_loss_count;
    } else {
      s.total_e_mec_joules += *r.e_mec_joules;
      e_mec.push_back(*r.e_mec_joules);
    }
    if (r.e_gpu_joules) {
      s.total_e_gpu_joules += *r.e_gpu_joules;
      tokens_with_gpu += r.generated_tokens;
    }
  }
  std::sort(s.latency_values.begin(), s.latency_values.end());
  s.mean_latency_s = mean_of(s.latency_values);
  s.mean_throughput_tokens_per_s = mean_of(s.throughput_tokens_per_s);
  s.mean_e_mec_joules = mean_of(e_mec);
  if (tokens_with_gpu > 0) s.mean_e_per_token = s.total_e_gpu_joules / static_cast<double>(tokens_with_gpu);

  std::vector<double> pings;
  for (const auto& u : ue_records) pings.push_back(u.ping_avg_ms);
  s.mean_ue_ping_ms = mean_of(pings);
  if (s.mean_e_mec_joules && s.mean_ue_ping_ms) s.pareto_point = {{*s.mean_e_mec_joules, *s.mean_ue_ping_ms}};

  if (!records.empty()) {
    double tool = 0, act = 0;
    for (const auto& r : records) {
      tool += r.c_tool;
      act += r.c_act;
    }
    s.c_tool_rate = tool / static_cast<double>(records.size());
    s.c_act_rate = act / static_cast<double>(records.size());
  }
  return s;
}

inline constexpr std::string_view kDecisionMetricsHeader =
    "run_id,engine_id,intent_id,ts_start,ts_end,latency_s,prompt_tokens,gen_tokens,serving_mec,p_hat_w,e_mec_j,"
    "e_gpu_j,e_per_token_j,final_target";

inline void write_decision_metrics(const std::vector<EnergyReport>& reports, std::ostream& out) {
  out << kDecisionMetricsHeader << '\n';
  for (const auto& r : reports) {
    out << r.run_id << ',' << r.engine_id << ',' << r.intent_id << ',' << csv::format_double(r.interval.t_start)
        << ',' << csv::format_double(r.interval.t_end) << ',' << csv::format_double(r.t_seconds) << ','
        << r.prompt_tokens << ',' << r.generated_tokens << ',' << to_string(r.serving_mec) << ','
        << csv::format_optional(r.p_hat_watts) << ',' << csv::format_optional(r.e_mec_joules) << ','
        << csv::format_optional(r.e_gpu_joules) << ',' << csv::format_optional(r.e_per_token) << ','
        << compliance::action_cell(r.final_target) << '\n';
  }
}

inline std::vector<EnergyReport> read_decision_metrics(std::istream& in, std::string source = "metrics") {
  csv::Reader reader(in, kDecisionMetricsHeader, std::move(source));
  std::vector<EnergyReport> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    EnergyReport r;
    r.run_id = f[0];
    r.engine_id = f[1];
    r.intent_id = f[2];
    r.interval = {reader.to_double(f[3], "ts_start"), reader.to_double(f[4], "ts_end")};
    r.t_seconds = reader.to_double(f[5], "latency_s");
    r.prompt_tokens = reader.to_int(f[6], "prompt_tokens");
    r.generated_tokens = reader.to_int(f[7], "gen_tokens");
    auto mec = try_parse_mec(f[8]);
    if (!mec) reader.fail("serving_mec", "unknown MEC '" + f[8] + "'");
    r.serving_mec = *mec;
    r.p_hat_watts = reader.to_optional_double(f[9], "p_hat_w");
    r.e_mec_joules = reader.to_optional_double(f[10], "e_mec_j");
    r.e_gpu_joules = reader.to_optional_double(f[11], "e_gpu_j");
    r.e_per_token = reader.to_optional_double(f[12], "e_per_token_j");
    if (!f[13].empty()) {
      auto a = try_parse_action(f[13]);
      if (!a) reader.fail("final_target", "unknown action '" + f[13] + "'");
      r.final_target = a;
    }
    out.push_back(r);
  }
  return out;
}

inline constexpr std::string_view kSummaryHeader =
    "engine_id,decisions,data_loss_count,total_e_mec_j,total_e_gpu_j,total_gen_tokens,mean_e_per_token_j,"
    "mean_latency_s,mean_throughput_tok_s,mean_ue_ping_ms,pareto_e_mec_j,pareto_ue_ping_ms,c_tool_rate,c_act_rate";

inline void write_summary(const std::vector<EngineSummary>& summaries, std::ostream& out) {
  auto ratio = [](const std::optional<double>& v) { return v ? csv::format_fixed(*v, 4) : std::string{}; };
  out << kSummaryHeader << '\n';
  for (const auto& s : summaries) {
    out << s.engine_id << ',' << s.decisions << ',' << s.data_loss_count << ','
        << csv::format_double(s.total_e_mec_joules) << ',' << csv::format_double(s.total_e_gpu_joules) << ','
        << s.total_tokens << ',' << csv::format_optional(s.mean_e_per_token) << ','
        << csv::format_optional(s.mean_latency_s) << ',' << csv::format_optional(s.mean_throughput_tokens_per_s)
        << ',' << csv::format_optional(s.mean_ue_ping_ms) << ','
        << (s.pareto_point ? csv::format_double(s.pareto_point->first) : "") << ','
        << (s.pareto_point ? csv::format_double(s.pareto_point->second) : "") << ',' << ratio(s.c_tool_rate) << ','
        << ratio(s.c_act_rate) << '\n';
  }
}

}  // namespace agora::metrics
