#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agora/compliance/grade.hpp"
#include "agora/metrics/energy.hpp"
#include "agora/runner/artifacts.hpp"
#include "agora/runner/execute.hpp"

namespace agora::runner {

inline constexpr const char* kNoRuns = "no_runs";

// Directories under `root` holding a persisted decision trace file, sorted.
inline std::vector<std::filesystem::path> find_run_dirs(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec)) return out;
  for (auto it = std::filesystem::recursive_directory_iterator(root, ec);
       it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (it->is_regular_file() && it->path().filename() == files::traces) out.push_back(it->path().parent_path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <typename T, typename Read>
std::vector<T> read_optional_csv(const std::filesystem::path& path, Read&& read) {
  std::ifstream in(path);
  if (!in) return {};
  return read(in, path.string());
}

// Re-grades every persisted trace under `traces_root`. The threshold is the
// one recorded in each trace unless `theta_override` is given; the fallback
// ground truth comes from the run's telemetry snapshot when present.
inline std::vector<compliance::ComplianceRecord> regrade(const std::filesystem::path& traces_root,
                                                         std::optional<double> theta_override = std::nullopt,
                                                         double fallback_delta_s = agent::kDefaultDeltaSeconds) {
  std::vector<compliance::ComplianceRecord> out;
  for (const auto& dir : find_run_dirs(traces_root)) {
    std::ifstream tin(dir / files::traces);
    auto traces = agent::read_traces(tin, (dir / files::traces).string());
    std::optional<telemetry::TelemetryStore> store;
    if (std::filesystem::exists(dir / files::telemetry)) {
      std::ifstream sin(dir / files::telemetry);
      store.emplace(telemetry::read_snapshot(sin, (dir / files::telemetry).string()));
    }
    for (const auto& t : traces) {
      std::optional<telemetry::PowerEstimate> fallback;
      if (store) {
        try {
          fallback = store->query_mean_power(Subject::MEC2, t.interval.t_start, fallback_delta_s);
        } catch (const Error& e) {
          if (e.code() != errc::no_data) throw;
        }
      }
      out.push_back(compliance::grade(t, theta_override.value_or(t.theta_watts), fallback));
    }
  }
  return out;
}

// Engine ids in plan order as recorded by the manifest, then any engines
// found on disk but missing from it, alphabetically.
inline std::vector<std::string> engine_order_of(const std::filesystem::path& artifacts,
                                                const std::vector<std::filesystem::path>& run_dirs) {
  std::vector<std::string> order;
  auto add = [&order](const std::string& id) {
    if (std::find(order.begin(), order.end(), id) == order.end()) order.push_back(id);
  };
  const auto manifest_path = artifacts / files::manifest;
  if (std::filesystem::exists(manifest_path)) {
    auto doc = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
    if (!doc.is_discarded()) {
      for (const auto& r : manifest_from_json(doc).runs) add(r.engine_id);
    }
  }
  std::vector<std::string> rest;
  for (const auto& dir : run_dirs) rest.push_back(dir.parent_path().filename().string());
  std::sort(rest.begin(), rest.end());
  for (const auto& id : rest) add(id);
  return order;
}

struct ReportResult {
  std::size_t runs = 0;
  std::vector<metrics::EngineSummary> summaries;
  std::vector<std::string> written;
};

// Builds the summary tables and the figure-input bundle from a plan's
// artifacts directory.
inline ReportResult build_report(const std::filesystem::path& artifacts, const std::filesystem::path& out_dir,
                                 double bin_width_watts = 5.0) {
  auto runs = find_run_dirs(artifacts);
  if (runs.empty()) throw Error(kNoRuns, "no runs found under '" + artifacts.string() + "'");
  const auto engine_order = engine_order_of(artifacts, runs);
  auto rank = [&engine_order](const std::filesystem::path& dir) {
    const auto id = dir.parent_path().filename().string();
    return std::find(engine_order.begin(), engine_order.end(), id) - engine_order.begin();
  };
  std::stable_sort(runs.begin(), runs.end(), [&rank](const auto& a, const auto& b) { return rank(a) < rank(b); });

  struct EngineData {
    std::vector<metrics::EnergyReport> reports;
    std::vector<compliance::ComplianceRecord> records;
    std::vector<sim::UeProbeRecord> ue;
  };
  std::map<std::string, EngineData> by_engine;
  std::vector<metrics::EnergyReport> all_reports;
  std::vector<compliance::ComplianceRecord> all_records;
  ReportResult result;
  result.runs = runs.size();

  std::ostringstream ue_by_state;
  ue_by_state << "engine_id,run_id,ts_start,ts_end,target_mec,ping_avg_ms,udp_jitter_ms,udp_loss_pct,migrated\n";
  std::ostringstream stay_migrate;
  stay_migrate << "engine_id,run_id,intent_id,p2_w,theta_w,outcome,migrated\n";
  std::ostringstream stress_all;
  stress_all << "engine_id,run_id," << stress::kStressLogHeader << '\n';
  std::ostringstream gpu_power;
  gpu_power << "engine_id,run_id,ts,power_watts\n";

  for (const auto& dir : runs) {
    auto reports = read_optional_csv<metrics::EnergyReport>(dir / files::metrics, [](std::istream& in, std::string s) {
      return metrics::read_decision_metrics(in, std::move(s));
    });
    auto records = regrade(dir);
    auto ue = read_optional_csv<sim::UeProbeRecord>(dir / files::ue_probes, [](std::istream& in, std::string s) {
      return sim::read_probe_log(in, std::move(s));
    });
    auto stress_events = read_optional_csv<stress::StressEvent>(dir / files::stress, [](std::istream& in, std::string s) {
      return stress::read_stress_log(in, std::move(s));
    });
    std::string engine_id = dir.parent_path().filename().string();
    std::string run_id = dir.filename().string();
    if (!records.empty()) {
      engine_id = records.front().engine_id;
      run_id = records.front().run_id;
    }
    for (const auto& u : ue) {
      ue_by_state << engine_id << ',' << run_id << ',' << csv::format_double(u.ts_start) << ','
                  << csv::format_double(u.ts_end) << ',' << to_string(u.target_mec) << ','
                  << csv::format_double(u.ping_avg_ms) << ',' << csv::format_optional(u.udp_jitter_ms) << ','
                  << csv::format_optional(u.udp_loss_pct) << ',' << int{u.target_mec == MecId::MEC1} << '\n';
    }
    for (const auto& r : records) {
      stay_migrate << r.engine_id << ',' << r.run_id << ',' << r.intent_id << ','
                   << csv::format_optional(r.p2_truth()) << ',' << csv::format_double(r.theta_watts) << ','
                   << to_string(r.outcome) << ',' << int{r.migrated()} << '\n';
    }
    for (const auto& e : stress_events) {
      stress_all << engine_id << ',' << run_id << ',' << to_string(e.mec) << ',' << csv::format_double(e.begin) << ','
                 << csv::format_double(e.end) << ',' << csv::format_double(e.cpu_load) << ',' << e.workers << ','
                 << csv::format_double(e.duration()) << '\n';
    }
    if (std::filesystem::exists(dir / files::telemetry)) {
      std::ifstream sin(dir / files::telemetry);
      auto store = telemetry::read_snapshot(sin, (dir / files::telemetry).string());
      for (const auto& s : store.series(Subject::GPU_HOST)) {
        gpu_power << engine_id << ',' << run_id << ',' << csv::format_double(s.ts) << ','
                  << csv::format_double(s.power_watts) << '\n';
      }
    }
    auto& data = by_engine[engine_id];
    data.reports.insert(data.reports.end(), reports.begin(), reports.end());
    data.records.insert(data.records.end(), records.begin(), records.end());
    data.ue.insert(data.ue.end(), ue.begin(), ue.end());
    all_reports.insert(all_reports.end(), reports.begin(), reports.end());
    all_records.insert(all_records.end(), records.begin(), records.end());
  }

  std::ostringstream cdf, bins, selectivity, by_intent;
  by_intent << "engine_id,intent_id,decisions,c_tool,c_act,c_tool_rate,c_act_rate\n";
  cdf << "engine_id,latency_s,cdf\n";
  bins << "engine_id,bin_lower_w,bin_upper_w,count,migrations,probability\n";
  selectivity << "engine_id,tp,fp,fn,tn,tpr,ppv,fpr,tpr_pct,ppv_pct,fpr_pct\n";
  auto fixed4 = [](const std::optional<double>& v) { return v ? csv::format_fixed(*v, 4) : std::string{}; };
  auto pct2 = [](const std::optional<double>& v) { return v ? csv::format_fixed(*v * 100.0, 2) : std::string{}; };
  for (const auto& engine_id : engine_order) {
    auto found = by_engine.find(engine_id);
    if (found == by_engine.end()) continue;
    const auto& data = found->second;
    auto summary = metrics::aggregate(engine_id, data.reports, data.records, data.ue);
    const auto n = summary.latency_values.size();
    for (std::size_t i = 0; i < n; ++i) {
      cdf << engine_id << ',' << csv::format_double(summary.latency_values[i]) << ','
          << csv::format_fixed(static_cast<double>(i + 1) / static_cast<double>(n), 4) << '\n';
    }
    for (const auto& b : compliance::migration_prob_by_bin(data.records, bin_width_watts)) {
      bins << engine_id << ',' << csv::format_double(b.lower_watts) << ',' << csv::format_double(b.upper_watts) << ','
           << b.count << ',' << b.migrations << ',' << csv::format_fixed(b.probability, 4) << '\n';
    }
    auto c = compliance::confusion(data.records);
    selectivity << engine_id << ',' << c.tp << ',' << c.fp << ',' << c.fn << ',' << c.tn << ',' << fixed4(c.tpr)
                << ',' << fixed4(c.ppv) << ',' << fixed4(c.fpr) << ',' << pct2(c.tpr) << ',' << pct2(c.ppv) << ','
                << pct2(c.fpr) << '\n';
    std::vector<std::string> intents;
    std::map<std::string, std::array<std::size_t, 3>> per_intent;  // decisions, c_tool, c_act
    for (const auto& r : data.records) {
      if (!per_intent.count(r.intent_id)) intents.push_back(r.intent_id);
      auto& row = per_intent[r.intent_id];
      ++row[0];
      row[1] += r.c_tool;
      row[2] += r.c_act;
    }
    for (const auto& id : intents) {
      const auto& [n, tool, act] = per_intent[id];
      by_intent << engine_id << ',' << id << ',' << n << ',' << tool << ',' << act << ','
                << csv::format_fixed(static_cast<double>(tool) / static_cast<double>(n), 4) << ','
                << csv::format_fixed(static_cast<double>(act) / static_cast<double>(n), 4) << '\n';
    }
    result.summaries.push_back(std::move(summary));
  }

  auto emit = [&](const char* name, const std::string& content) {
    write_file_atomic(out_dir / name, content);
    result.written.emplace_back(name);
  };
  emit("summary.csv", render([&](std::ostream& o) { metrics::write_summary(result.summaries, o); }));
  emit("metrics.csv", render([&](std::ostream& o) { metrics::write_decision_metrics(all_reports, o); }));
  emit("compliance.csv", render([&](std::ostream& o) { compliance::write_compliance(all_records, o); }));
  emit("latency_cdf.csv", cdf.str());
  emit("migration_bins.csv", bins.str());
  emit("selectivity.csv", selectivity.str());
  emit("compliance_by_intent.csv", by_intent.str());
  emit("ue_by_state.csv", ue_by_state.str());
  emit("stay_migrate_p2.csv", stay_migrate.str());
  emit("stress_timeline.csv", stress_all.str());
  emit("gpu_power.csv", gpu_power.str());
  return result;
}

}  // namespace agora::runner
