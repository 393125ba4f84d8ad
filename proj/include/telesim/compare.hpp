#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "telesim/errors.hpp"
#include "telesim/metrics.hpp"
#include "telesim/stats.hpp"

namespace telesim {

// Numeric view of a report for paired analysis; optional fields are included
// only when present so single-hand runs compare cleanly.
inline std::vector<std::pair<std::string, std::optional<double>>> metric_values(
    const MetricsReport& r) {
  std::vector<std::pair<std::string, std::optional<double>>> out;
  out.emplace_back("duration_s", r.duration_s);
  out.emplace_back("path_length_mm", r.path_length_mm);
  out.emplace_back("v_mean_mm_s", r.v_mean_mm_s);
  out.emplace_back("v_max_mm_s", r.v_max_mm_s);
  out.emplace_back("speed_sd_mm_s", r.speed_sd_mm_s);
  out.emplace_back("collision_time_s", r.collision_time_s);
  out.emplace_back("puncture_count", static_cast<double>(r.puncture_count));
  out.emplace_back("min_clearance_L_mm", r.min_clearance_left_mm);
  out.emplace_back("min_clearance_R_mm", r.min_clearance_right_mm);
  out.emplace_back("rho_sub_mm", r.rho_sub_mm);
  out.emplace_back("fps_avg", r.fps_avg);
  out.emplace_back("fps_p1", r.fps_p1);
  out.emplace_back("anchor_d_min_L_mm",
                   r.anchor_left ? std::optional<double>(r.anchor_left->d_min_mm)
                                 : std::nullopt);
  out.emplace_back("anchor_d_mean_L_mm",
                   r.anchor_left ? std::optional<double>(r.anchor_left->d_mean_mm)
                                 : std::nullopt);
  out.emplace_back("anchor_d_min_R_mm",
                   r.anchor_right ? std::optional<double>(r.anchor_right->d_min_mm)
                                  : std::nullopt);
  out.emplace_back("anchor_d_mean_R_mm",
                   r.anchor_right ? std::optional<double>(r.anchor_right->d_mean_mm)
                                  : std::nullopt);
  return out;
}

struct ComparisonRow {
  std::string metric;
  std::optional<TestResult> friedman;  // only with >= 3 conditions
  WilcoxonResult wilcoxon;             // condition[1] vs condition[0]
  bool degenerate = false;             // all paired differences zero
  double p_holm = 1.0;
  std::string direction;  // change of the last condition relative to the first
  double mean_delta = 0.0;
};

struct ComparisonTable {
  std::vector<std::string> labels;
  std::size_t pairs = 0;
  std::vector<ComparisonRow> rows;
};

// Paired nonparametric comparison across condition columns: Friedman omnibus
// (k >= 3), Wilcoxon signed-rank on the first-vs-second contrast, Holm
// adjustment across the metric rows.
inline ComparisonTable compare_conditions(
    const std::vector<std::vector<MetricsReport>>& conditions,
    const std::vector<std::string>& labels) {
  if (conditions.size() < 2)
    throw UnpairedInput("need at least two condition columns");
  const std::size_t n = conditions.front().size();
  if (n == 0) throw UnpairedInput("empty condition column");
  for (const auto& col : conditions)
    if (col.size() != n)
      throw UnpairedInput("condition columns differ in length");

  ComparisonTable table;
  table.labels = labels;
  table.pairs = n;

  const auto names = metric_values(conditions[0][0]);
  for (std::size_t mi = 0; mi < names.size(); ++mi) {
    // include the metric only when every report provides it
    bool available = true;
    std::vector<std::vector<double>> matrix(n,
                                            std::vector<double>(conditions.size()));
    for (std::size_t c = 0; c < conditions.size() && available; ++c) {
      for (std::size_t s = 0; s < n; ++s) {
        const auto vals = metric_values(conditions[c][s]);
        if (!vals[mi].second) {
          available = false;
          break;
        }
        matrix[s][c] = *vals[mi].second;
      }
    }
    if (!available) continue;

    ComparisonRow row;
    row.metric = names[mi].first;

    if (conditions.size() >= 3 && n >= 2)
      row.friedman = friedman(ConditionMatrix{matrix});

    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(n);
    double delta_sum = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      pairs.emplace_back(matrix[s][0], matrix[s][1]);
      delta_sum += matrix[s][1] - matrix[s][0];
    }
    row.mean_delta = delta_sum / static_cast<double>(n);
    try {
      row.wilcoxon = wilcoxon_signed_rank(pairs);
    } catch (const AllZeroDifferences&) {
      row.degenerate = true;
      row.wilcoxon.statistic = 0.0;
      row.wilcoxon.p = 1.0;
      row.wilcoxon.n_used = 0;
      row.wilcoxon.n_zeros = n;
    }

    // direction of the second condition relative to the first, by median delta
    std::vector<double> deltas(n);
    for (std::size_t s = 0; s < n; ++s) deltas[s] = matrix[s][1] - matrix[s][0];
    std::sort(deltas.begin(), deltas.end());
    const double median = n % 2 == 1
                              ? deltas[n / 2]
                              : 0.5 * (deltas[n / 2 - 1] + deltas[n / 2]);
    if (median < 0.0)
      row.direction = "lower";
    else if (median > 0.0)
      row.direction = "higher";
    else
      row.direction = "no change";

    table.rows.push_back(std::move(row));
  }

  std::vector<double> raw_p;
  raw_p.reserve(table.rows.size());
  for (const auto& row : table.rows) raw_p.push_back(row.wilcoxon.p);
  const auto adjusted = holm_correct(raw_p);
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    table.rows[i].p_holm = adjusted[i];
  return table;
}

}  // namespace telesim
