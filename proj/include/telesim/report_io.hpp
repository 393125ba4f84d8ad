#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "telesim/compare.hpp"
#include "telesim/errors.hpp"
#include "telesim/metrics.hpp"

namespace telesim {

// Identity of the run a report came from, carried for pairing.
struct ReportEnvelope {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

inline std::string report_to_text(const ReportEnvelope& env) {
  std::ostringstream os;
  os.precision(12);
  os << "scenario=" << env.scenario << "\n";
  os << "config_hash=" << env.config_hash << "\n";
  os << "seed=" << env.seed << "\n";
  for (const auto& [name, value] : metric_values(env.metrics)) {
    os << name << "=";
    if (value)
      os << *value;
    else
      os << "n/a";
    os << "\n";
  }
  return os.str();
}

inline nlohmann::json report_to_json(const ReportEnvelope& env) {
  nlohmann::json j;
  j["scenario"] = env.scenario;
  j["config_hash"] = env.config_hash;
  j["seed"] = env.seed;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [name, value] : metric_values(env.metrics)) {
    if (value)
      m[name] = *value;
    else
      m[name] = nullptr;
  }
  j["metrics"] = m;
  return j;
}

inline ReportEnvelope report_from_json(const nlohmann::json& j) {
  ReportEnvelope env;
  try {
    env.scenario = j.at("scenario").get<std::string>();
    env.config_hash = j.at("config_hash").get<std::string>();
    env.seed = j.at("seed").get<std::uint64_t>();
    const auto& m = j.at("metrics");
    env.metrics.duration_s = m.value("duration_s", 0.0);
    env.metrics.path_length_mm = m.value("path_length_mm", 0.0);
    env.metrics.v_mean_mm_s = m.value("v_mean_mm_s", 0.0);
    env.metrics.v_max_mm_s = m.value("v_max_mm_s", 0.0);
    env.metrics.speed_sd_mm_s = m.value("speed_sd_mm_s", 0.0);
    env.metrics.collision_time_s = m.value("collision_time_s", 0.0);
    env.metrics.puncture_count =
        static_cast<std::uint64_t>(m.value("puncture_count", 0.0));
    if (m.contains("min_clearance_L_mm") && !m.at("min_clearance_L_mm").is_null())
      env.metrics.min_clearance_left_mm = m.at("min_clearance_L_mm").get<double>();
    if (m.contains("min_clearance_R_mm") && !m.at("min_clearance_R_mm").is_null())
      env.metrics.min_clearance_right_mm = m.at("min_clearance_R_mm").get<double>();
    env.metrics.rho_sub_mm = m.value("rho_sub_mm", 0.0);
    env.metrics.fps_avg = m.value("fps_avg", 0.0);
    env.metrics.fps_p1 = m.value("fps_p1", 0.0);
    const auto anchor = [&](const char* min_key, const char* mean_key)
        -> std::optional<AnchorStats> {
      if (!m.contains(min_key) || m.at(min_key).is_null()) return std::nullopt;
      AnchorStats a;
      a.d_min_mm = m.at(min_key).get<double>();
      a.d_mean_mm = m.value(mean_key, 0.0);
      return a;
    };
    env.metrics.anchor_left = anchor("anchor_d_min_L_mm", "anchor_d_mean_L_mm");
    env.metrics.anchor_right = anchor("anchor_d_min_R_mm", "anchor_d_mean_R_mm");
  } catch (const nlohmann::json::exception& e) {
    throw CorruptLog(std::string("bad report JSON: ") + e.what());
  }
  return env;
}

inline void write_report_json(const ReportEnvelope& env,
                              const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << report_to_json(env).dump(2) << "\n";
}

inline ReportEnvelope read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorruptLog("cannot open report: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw CorruptLog(std::string("bad report JSON: ") + e.what());
  }
  return report_from_json(j);
}

// ---------- Table rendering ----------

inline std::string format_comparison_table(const ComparisonTable& table) {
  std::ostringstream os;
  os << "paired runs: " << table.pairs << "  (";
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    if (i) os << " vs ";
    os << table.labels[i];
  }
  os << ")\n";

  const bool with_friedman =
      !table.rows.empty() && table.rows.front().friedman.has_value();
  os << std::left;
  os.width(22);
  os << "metric";
  if (with_friedman) os << "  chi2(df)      p";
  os << "        Z       p      p_holm  direction\n";
  for (const auto& row : table.rows) {
    std::ostringstream line;
    line << std::left;
    line.width(22);
    line << row.metric;
    char buf[160];
    if (with_friedman && row.friedman) {
      std::snprintf(buf, sizeof(buf), "  %6.2f(%d)  %6.4f", row.friedman->statistic,
                    row.friedman->df, row.friedman->p);
      line << buf;
    }
    std::snprintf(buf, sizeof(buf), "  %+6.3f  %6.4f  %6.4f  %s",
                  row.wilcoxon.statistic, row.wilcoxon.p, row.p_holm,
                  row.degenerate ? "no change" : row.direction.c_str());
    line << buf;
    os << line.str() << "\n";
  }

  // repeated Z/p rows are expected when metrics share a within-pair ordering
  std::map<std::pair<double, double>, int> seen;
  for (const auto& row : table.rows)
    if (!row.degenerate)
      ++seen[{row.wilcoxon.statistic, row.wilcoxon.p}];
  for (const auto& [key, count] : seen) {
    if (count > 1) {
      os << "note: " << count
         << " rows share identical Z/p; those metrics have the same "
            "within-pair rank ordering\n";
      break;
    }
  }
  return os.str();
}

}  // namespace telesim
