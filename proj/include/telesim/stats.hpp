#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "telesim/errors.hpp"

namespace telesim {

struct TestResult {
  double statistic = 0.0;  // chi^2 or Z
  double p = 1.0;          // two-sided
  int df = -1;             // -1 when not applicable
};

namespace detail {

// Regularized incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a): series expansion
// below x = a+1, Lentz continued fraction above.
inline double regularized_gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    // P(a,x) by series, Q = 1 - P
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(log_prefix);
  }
  // Q(a,x) by continued fraction (modified Lentz)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefix) * h;
}

inline double chi_squared_sf(double x, int df) {
  if (x <= 0.0) return 1.0;
  return std::clamp(regularized_gamma_q(static_cast<double>(df) / 2.0, x / 2.0),
                    0.0, 1.0);
}

// two-sided normal tail
inline double normal_two_sided_p(double z) {
  return std::clamp(std::erfc(std::abs(z) / std::sqrt(2.0)), 0.0, 1.0);
}

// Average ranks (1-based); also accumulates sum of (t^3 - t) over tie groups.
inline std::vector<double> average_ranks(const std::vector<double>& values,
                                         double& tie_term) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// values[subject][condition]
struct ConditionMatrix {
  std::vector<std::vector<double>> values;

  std::size_t subjects() const { return values.size(); }
  std::size_t conditions() const { return values.empty() ? 0 : values[0].size(); }
};

// Friedman omnibus test with average-rank tie correction. A fully tied matrix
// carries no ordering information: chi^2 = 0, p = 1.
inline TestResult friedman(const ConditionMatrix& m) {
  const std::size_t n = m.subjects();
  const std::size_t k = m.conditions();
  if (n < 2 || k < 2) throw DegenerateInput("need n >= 2 subjects, k >= 2 conditions");
  for (const auto& row : m.values) {
    if (row.size() != k) throw DegenerateInput("ragged condition matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw DegenerateInput("non-finite value");
  }

  std::vector<double> rank_sums(k, 0.0);
  double tie_term = 0.0;
  for (const auto& row : m.values) {
    const auto ranks = detail::average_ranks(row, tie_term);
    for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];
  }

  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  double sum_r2 = 0.0;
  for (double r : rank_sums) sum_r2 += r * r;
  const double raw = 12.0 / (nd * kd * (kd + 1.0)) * sum_r2 - 3.0 * nd * (kd + 1.0);
  const double correction = 1.0 - tie_term / (nd * kd * (kd * kd - 1.0));

  TestResult out;
  out.df = static_cast<int>(k) - 1;
  if (correction <= 0.0) {
    out.statistic = 0.0;
    out.p = 1.0;
    return out;
  }
  out.statistic = raw / correction;
  out.p = detail::chi_squared_sf(out.statistic, out.df);
  return out;
}

struct WilcoxonResult : TestResult {
  bool exact = false;      // exact enumeration vs normal approximation
  std::size_t n_used = 0;  // pairs after dropping zero differences
  std::size_t n_zeros = 0;
};

inline constexpr std::size_t kWilcoxonExactLimit = 12;

// Two-sided signed-rank test on paired samples. Zero differences are dropped
// (standard practice, count reported). Exact p by enumerating all 2^n sign
// assignments for n <= 12; tie-corrected normal approximation with continuity
// correction above.
inline WilcoxonResult wilcoxon_signed_rank(
    const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> diffs;
  std::size_t zeros = 0;
  for (const auto& [a, b] : pairs) {
    const double d = b - a;
    if (d == 0.0)
      ++zeros;
    else
      diffs.push_back(d);
  }
  if (diffs.empty()) throw AllZeroDifferences("every pair is tied");

  const std::size_t n = diffs.size();
  std::vector<double> abs_d(n);
  for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(diffs[i]);
  double tie_term = 0.0;
  const auto ranks = detail::average_ranks(abs_d, tie_term);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (diffs[i] > 0.0) w_plus += ranks[i];

  const double nd = static_cast<double>(n);
  const double mu = nd * (nd + 1.0) / 4.0;
  const double sigma2 = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
  const double sigma = std::sqrt(std::max(sigma2, 0.0));

  WilcoxonResult out;
  out.n_used = n;
  out.n_zeros = zeros;
  const double dev = w_plus - mu;
  if (sigma > 0.0) {
    const double cc = dev > 0.0 ? 0.5 : (dev < 0.0 ? -0.5 : 0.0);
    out.statistic = (dev - cc) / sigma;
  } else {
    out.statistic = 0.0;
  }

  if (n <= kWilcoxonExactLimit) {
    out.exact = true;
    const std::uint64_t total = 1ULL << n;
    std::uint64_t count = 0;
    const double threshold = std::abs(dev) - 1e-12;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1ULL << i)) w += ranks[i];
      if (std::abs(w - mu) >= threshold) ++count;
    }
    out.p = static_cast<double>(count) / static_cast<double>(total);
  } else {
    out.exact = false;
    out.p = detail::normal_two_sided_p(out.statistic);
  }
  return out;
}

// Holm step-down adjustment, returned in the original order.
inline std::vector<double> holm_correct(const std::vector<double>& p_values) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] < p_values[b];
  });
  std::vector<double> adjusted(m, 0.0);
  double running_max = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double scaled =
        std::min(1.0, static_cast<double>(m - i) * p_values[idx[i]]);
    running_max = std::max(running_max, scaled);
    adjusted[idx[i]] = running_max;
  }
  return adjusted;
}

}  // namespace telesim
