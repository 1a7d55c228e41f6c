// agora: command-line front end for the simulation and evaluation harness.
//
//   agora gen-stress --profile <file> --seed <n> --out <csv>
//   agora run --plan <file>
//   agora grade --traces <dir> [--theta <w>] [--out <csv>]
//   agora report --artifacts <dir> --out <dir>
//   agora stub-llm --script <file> --port <n>
//
// Exit codes: 0 success, 1 internal error, 2 config error, 3 engine
// unreachable, 4 partial failure, 5 no runs found.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "agora/agora.hpp"

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kUnreachable = 3,
  kPartial = 4,
  kNoRuns = 5,
};

// One machine-readable JSON line, then a human-readable one.
int report_error(const std::string& command, const std::string& code, const std::string& message, int exit_code) {
  nlohmann::json line = {{"error", code}, {"exit", exit_code}, {"command", command}, {"message", message}};
  std::cerr << line.dump() << '\n';
  std::cerr << "agora " << command << ": " << message << '\n';
  return exit_code;
}

int exit_for(const agora::Error& e) {
  using namespace agora;
  if (e.code() == runner::kNoRuns) return kNoRuns;
  if (e.code() == errc::endpoint_unreachable) return kUnreachable;
  if (e.code() == errc::io_error) return kPartial;
  if (e.code() == errc::config_error || e.code() == errc::parse_error || e.code() == errc::domain_error) {
    return kConfig;
  }
  return kInternal;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw agora::Error(agora::errc::config_error, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw agora::Error(agora::errc::config_error, path + ": " + e.what());
  }
}

int cmd_gen_stress(const std::string& profile_path, std::optional<std::uint64_t> seed, const std::string& out_path) {
  agora::stress::StressProfile profile;
  if (!profile_path.empty()) profile = agora::stress::profile_from_json(load_json(profile_path));
  if (seed) profile.seed = *seed;
  auto schedule = agora::stress::generate_schedule(profile);
  std::ostringstream out;
  agora::stress::write_stress_log(schedule.events, out);
  agora::runner::write_file_atomic(out_path, out.str());
  if (schedule.horizon_too_short) {
    std::cerr << "warning: horizon " << profile.horizon_s << " s is too short for one episode; empty schedule\n";
  }
  std::cout << "wrote " << schedule.events.size() << " events to " << out_path << '\n';
  return kOk;
}

int cmd_run(const std::string& plan_path) {
  auto plan = agora::runner::load_plan(plan_path);
  auto art = agora::runner::execute_plan(plan);
  for (const auto& s : art.summaries) {
    std::cout << s.engine_id << ": decisions=" << s.decisions;
    if (s.c_tool_rate) std::cout << " c_tool=" << agora::csv::format_fixed(*s.c_tool_rate * 100, 2) << "%";
    if (s.c_act_rate) std::cout << " c_act=" << agora::csv::format_fixed(*s.c_act_rate * 100, 2) << "%";
    std::cout << " total_e_mec_j=" << agora::csv::format_fixed(s.total_e_mec_joules, 2) << '\n';
  }
  std::cout << "manifest: " << (art.output_dir / agora::runner::files::manifest).string() << '\n';
  if (art.any_skipped()) {
    return report_error("run", agora::errc::endpoint_unreachable, "one or more engines were unreachable; runs skipped",
                        kUnreachable);
  }
  if (art.any_partial()) {
    return report_error("run", "partial_failure", "one or more runs had failed decisions or were invalid", kPartial);
  }
  return kOk;
}

int cmd_grade(const std::string& traces_dir, std::optional<double> theta, std::string out_path) {
  if (agora::runner::find_run_dirs(traces_dir).empty()) {
    throw agora::Error(agora::runner::kNoRuns, "no traces found under '" + traces_dir + "'");
  }
  auto records = agora::runner::regrade(traces_dir, theta);
  if (out_path.empty()) out_path = (std::filesystem::path(traces_dir) / "compliance_regraded.csv").string();
  std::ostringstream out;
  agora::compliance::write_compliance(records, out);
  agora::runner::write_file_atomic(out_path, out.str());
  std::size_t tool = 0, act = 0;
  for (const auto& r : records) {
    tool += r.c_tool;
    act += r.c_act;
  }
  std::cout << "graded " << records.size() << " decisions: c_tool=" << tool << " c_act=" << act << " -> " << out_path
            << '\n';
  return kOk;
}

int cmd_report(const std::string& artifacts, const std::string& out_dir, double bin_width) {
  auto result = agora::runner::build_report(artifacts, out_dir, bin_width);
  std::cout << "report over " << result.runs << " runs:";
  for (const auto& f : result.written) std::cout << ' ' << f;
  std::cout << '\n';
  return kOk;
}

std::atomic<bool> g_stop{false};

int cmd_stub_llm(const std::string& script_path, int port) {
  auto script = agora::agent::script_from_json(load_json(script_path));
  agora::agent::StubLlmServer server(std::move(script));
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  const int bound = server.start(port);
  std::cout << "stub-llm listening on " << server.base_url() << " (port " << bound << ")" << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware agentic orchestration harness"};
  app.require_subcommand(1);

  std::string profile_path, stress_out;
  std::optional<std::uint64_t> seed;
  auto* gen = app.add_subcommand("gen-stress", "Generate and persist a stress schedule");
  gen->add_option("--profile", profile_path, "Stress profile JSON (defaults when omitted)")->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "RNG seed (overrides the profile)");
  gen->add_option("--out", stress_out, "Output CSV")->required();

  std::string plan_path;
  auto* run = app.add_subcommand("run", "Execute a run plan");
  run->add_option("--plan", plan_path, "Plan JSON")->required()->check(CLI::ExistingFile);

  std::string traces_dir, grade_out;
  std::optional<double> theta;
  auto* grade = app.add_subcommand("grade", "Re-grade persisted decision traces");
  grade->add_option("--traces", traces_dir, "Directory containing traces.jsonl files")->required()->check(CLI::ExistingDirectory);
  grade->add_option("--theta", theta, "Threshold in watts (default: the one recorded in each trace)");
  grade->add_option("--out", grade_out, "Output CSV (default: <traces>/compliance_regraded.csv)");

  std::string artifacts_dir, report_out;
  double bin_width = 5.0;
  auto* report = app.add_subcommand("report", "Emit summary CSVs and the figure-input bundle");
  report->add_option("--artifacts", artifacts_dir, "Artifacts directory of a plan")->required();
  report->add_option("--out", report_out, "Output directory")->required();
  report->add_option("--bin-width", bin_width, "Migration-probability bin width (W)");

  std::string script_path;
  int port = 8089;
  auto* stub = app.add_subcommand("stub-llm", "Serve a scripted chat-completions stub");
  stub->add_option("--script", script_path, "Script JSON")->required()->check(CLI::ExistingFile);
  stub->add_option("--port", port, "TCP port (0 picks a free one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("cli", "usage_error", e.what(), kConfig);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*gen) return cmd_gen_stress(profile_path, seed, stress_out);
    if (*run) return cmd_run(plan_path);
    if (*grade) return cmd_grade(traces_dir, theta, grade_out);
    if (*report) return cmd_report(artifacts_dir, report_out, bin_width);
    if (*stub) return cmd_stub_llm(script_path, port);
  } catch (const agora::Error& e) {
    return report_error(command, e.code(), e.what(), exit_for(e));
  } catch (const std::exception& e) {
    return report_error(command, "internal_error", e.what(), kInternal);
  }
  return kInternal;
}
