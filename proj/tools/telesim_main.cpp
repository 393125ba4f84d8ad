// Command-line front end: simulate scripted scenarios, compute trajectory
// metrics from run logs, compare paired conditions, and check the transport
// layer against the latency budget.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "telesim/telesim.hpp"
#include "telesim/udp.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitViolation = 3;

std::optional<telesim::Vec3> parse_vec3_arg(const std::string& s) {
  telesim::Vec3 v;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &v.x(), &v.y(), &v.z()) != 3)
    return std::nullopt;
  return v;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed,
                 bool seed_given, const std::string& out_path) {
  telesim::ScenarioConfig cfg = telesim::load_scenario(config_path);
  if (seed_given) cfg.seed = seed;
  const telesim::RunLog log = telesim::run_scenario(cfg);
  telesim::write_run_log(log, fs::path(out_path));

  std::size_t violations = 0;
  for (const auto& e : log.events)
    if (e.kind == "violation") ++violations;
  std::cout << "scenario=" << cfg.name << " seed=" << cfg.seed
            << " samples=" << log.samples.size() << " events=" << log.events.size()
            << " out=" << out_path << "\n";
  if (violations > 0) {
    std::cerr << "runtime violation: " << violations << " event(s) in log\n";
    return kExitViolation;
  }
  return kExitOk;
}

int cmd_metrics(const std::string& log_path, const std::string& apex_arg,
                const std::string& json_out) {
  const telesim::RunLog log = telesim::read_run_log(log_path);
  std::optional<telesim::Vec3> apex;
  if (!apex_arg.empty()) {
    apex = parse_vec3_arg(apex_arg);
    if (!apex) {
      std::cerr << "bad --apex, expected x,y,z\n";
      return kExitConfig;
    }
  }
  telesim::ReportEnvelope env;
  env.scenario = log.header.scenario;
  env.config_hash = log.header.config_hash;
  env.seed = log.header.seed;
  env.metrics = telesim::replay_metrics(log, apex);
  std::cout << telesim::report_to_text(env);
  if (!json_out.empty()) telesim::write_report_json(env, json_out);
  return kExitOk;
}

std::map<std::uint64_t, telesim::ReportEnvelope> load_report_dir(
    const fs::path& dir) {
  std::map<std::uint64_t, telesim::ReportEnvelope> by_seed;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    telesim::ReportEnvelope env = telesim::read_report_json(f);
    by_seed[env.seed] = std::move(env);
  }
  return by_seed;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b,
                const std::string& paired_by) {
  if (paired_by != "seed") {
    std::cerr << "only --paired-by seed is supported\n";
    return kExitConfig;
  }
  const auto a = load_report_dir(dir_a);
  const auto b = load_report_dir(dir_b);
  std::vector<telesim::MetricsReport> col_a, col_b;
  for (const auto& [seed, env] : a) {
    const auto it = b.find(seed);
    if (it == b.end()) continue;
    col_a.push_back(env.metrics);
    col_b.push_back(it->second.metrics);
  }
  if (col_a.empty()) throw telesim::UnpairedInput("no seed-paired reports found");
  const telesim::ComparisonTable table = telesim::compare_conditions(
      {col_a, col_b}, {fs::path(dir_a).filename().string(),
                       fs::path(dir_b).filename().string()});
  std::cout << telesim::format_comparison_table(table);
  return kExitOk;
}

int cmd_netcheck_udp() {
  // real-socket loopback pass: one second of command traffic at 90 Hz
  const telesim::UdpLoopbackResult r = telesim::run_udp_loopback(90);
  if (!r.sockets_ok) {
    std::cerr << "udp loopback unavailable\n";
    return 1;
  }
  std::cout << "mode=udp_loopback sent=" << r.sent << " accepted=" << r.accepted
            << " discarded=" << r.discarded << "\n";
  if (!r.traffic) {
    std::cout << "no traffic accepted\n";
    return kExitViolation;
  }
  std::printf("latency_mean_ms=%.3f latency_p95_ms=%.3f latency_max_ms=%.3f\n",
              r.latency.mean_ms, r.latency.p95_ms, r.latency.max_ms);
  std::printf("budget_ms=%.3f verdict=%s violations=%zu\n", r.latency.budget_ms,
              r.latency.pass ? "pass" : "fail", r.latency.violations.size());
  return r.latency.pass ? kExitOk : kExitViolation;
}

int cmd_netcheck(const std::string& config_path) {
  const telesim::ScenarioConfig cfg = telesim::load_scenario(config_path);
  const telesim::NetcheckReport rep = telesim::run_netcheck(cfg);
  std::cout << "sent=" << rep.sent << " dropped=" << rep.dropped
            << " accepted=" << rep.accepted << " discarded=" << rep.discarded
            << "\n";
  if (rep.traffic) {
    std::printf("latency_mean_ms=%.3f latency_p95_ms=%.3f latency_max_ms=%.3f\n",
                rep.latency.mean_ms, rep.latency.p95_ms, rep.latency.max_ms);
    std::printf("budget_ms=%.3f verdict=%s violations=%zu\n", rep.latency.budget_ms,
                rep.latency.pass ? "pass" : "fail", rep.latency.violations.size());
  } else {
    std::cout << "no traffic accepted\n";
  }
  std::cout << "safe_hold_transitions=" << rep.safe_hold_transitions;
  if (rep.first_safe_hold_ms >= 0.0)
    std::printf(" first_safe_hold_ms=%.3f", rep.first_safe_hold_ms);
  std::cout << "\nfinal_mode=" << telesim::to_string(rep.final_mode) << "\n";
  for (std::size_t i = 0; i < rep.sync_rounds.size(); ++i)
    std::printf("sync_round=%zu offset_us=%.1f rtt_us=%.1f\n", i,
                rep.sync_rounds[i].offset_us, rep.sync_rounds[i].rtt_us);
  return rep.traffic && rep.latency.pass ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bimanual teleoperation simulator with haptic rendering"};
  app.require_subcommand(1);

  std::string config_path, out_path, log_path, apex_arg, json_out;
  std::string dir_a, dir_b, paired_by = "seed";
  std::uint64_t seed = 0;

  auto* simulate = app.add_subcommand("simulate", "run a scripted scenario");
  simulate->add_option("--config", config_path, "scenario JSON")->required();
  auto* seed_opt = simulate->add_option("--seed", seed, "override scenario seed");
  simulate->add_option("--out", out_path, "run log output path")->required();

  auto* metrics = app.add_subcommand("metrics", "compute metrics from a run log");
  metrics->add_option("--log", log_path, "run log path")->required();
  metrics->add_option("--apex", apex_arg, "tumor apex x,y,z (mm)");
  metrics->add_option("--json", json_out, "also write a JSON report");

  auto* compare = app.add_subcommand("compare", "compare two report directories");
  compare->add_option("--a", dir_a, "condition A report dir")->required();
  compare->add_option("--b", dir_b, "condition B report dir")->required();
  compare->add_option("--paired-by", paired_by, "pairing key (seed)");

  bool use_udp = false;
  auto* netcheck = app.add_subcommand("netcheck", "transport latency report");
  auto* netcheck_cfg = netcheck->add_option("--config", config_path, "scenario JSON");
  netcheck->add_flag("--udp", use_udp, "run over real loopback sockets instead");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return cmd_simulate(config_path, seed, seed_opt->count() > 0, out_path);
    if (metrics->parsed()) return cmd_metrics(log_path, apex_arg, json_out);
    if (compare->parsed()) return cmd_compare(dir_a, dir_b, paired_by);
    if (netcheck->parsed()) {
      if (use_udp) return cmd_netcheck_udp();
      if (netcheck_cfg->count() == 0) {
        std::cerr << "netcheck needs --config (or --udp)\n";
        return kExitConfig;
      }
      return cmd_netcheck(config_path);
    }
  } catch (const telesim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const telesim::RuntimeViolation& e) {
    std::cerr << "runtime violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
