#include "telesim/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "telesim/types.hpp"

namespace telesim {
namespace {

// ---------- chi-squared tail ----------

TEST(ChiSquaredTail, TabulatedValues) {
  // classic chi-squared critical values, df = 3
  EXPECT_NEAR(detail::chi_squared_sf(7.815, 3), 0.05, 5e-4);
  EXPECT_NEAR(detail::chi_squared_sf(11.345, 3), 0.01, 2e-4);
  EXPECT_NEAR(detail::chi_squared_sf(6.251, 3), 0.10, 5e-4);
  EXPECT_DOUBLE_EQ(detail::chi_squared_sf(0.0, 3), 1.0);
  // df = 1 and df = 7 spot checks
  EXPECT_NEAR(detail::chi_squared_sf(3.841, 1), 0.05, 5e-4);
  EXPECT_NEAR(detail::chi_squared_sf(14.067, 7), 0.05, 5e-4);
}

TEST(ChiSquaredTail, ReportedOmnibusValue) {
  const double p = detail::chi_squared_sf(12.20, 3);
  EXPECT_GE(p, 0.0065);
  EXPECT_LE(p, 0.0070);
}

// ---------- Friedman ----------

TEST(Friedman, AllConditionsIdenticalPerSubject) {
  ConditionMatrix m;
  m.values = {{1, 1, 1, 1}, {2, 2, 2, 2}, {3, 3, 3, 3}};
  const TestResult r = friedman(m);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p, 1.0);
}

TEST(Friedman, PerfectMonotoneOrdering) {
  // n = 8 subjects, k = 4 conditions, same ordering for all: rank sums 8j
  ConditionMatrix m;
  for (int s = 0; s < 8; ++s)
    m.values.push_back({1.0 + s, 2.0 + s, 3.0 + s, 4.0 + s});
  const TestResult r = friedman(m);
  EXPECT_NEAR(r.statistic, 24.0, 1e-12);
  EXPECT_EQ(r.df, 3);
}

// independent re-implementation: rank each row by sorting, raw formula
double friedman_oracle(const std::vector<std::vector<double>>& values) {
  const std::size_t n = values.size();
  const std::size_t k = values[0].size();
  std::vector<double> rank_sum(k, 0.0);
  for (const auto& row : values) {
    std::vector<std::size_t> order(k);
    for (std::size_t j = 0; j < k; ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    for (std::size_t pos = 0; pos < k; ++pos)
      rank_sum[order[pos]] += static_cast<double>(pos + 1);
  }
  double sum_sq = 0.0;
  for (double r : rank_sum) sum_sq += r * r;
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  return 12.0 / (nd * kd * (kd + 1.0)) * sum_sq - 3.0 * nd * (kd + 1.0);
}

TEST(Friedman, MatchesIndependentOracleOnRandomData) {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 50; ++trial) {
    ConditionMatrix m;
    for (int s = 0; s < 8; ++s) {
      std::vector<double> row;
      for (int c = 0; c < 4; ++c) row.push_back(uniform(rng, -10.0, 10.0));
      m.values.push_back(row);
    }
    EXPECT_NEAR(friedman(m).statistic, friedman_oracle(m.values), 1e-10);
  }
}

TEST(Friedman, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(113);
  ConditionMatrix m;
  for (int s = 0; s < 6; ++s) {
    std::vector<double> row;
    for (int c = 0; c < 4; ++c) row.push_back(uniform(rng, 0.1, 5.0));
    m.values.push_back(row);
  }
  ConditionMatrix cubed = m;
  for (auto& row : cubed.values)
    for (double& v : row) v = v * v * v;  // strictly monotone on (0, inf)
  EXPECT_NEAR(friedman(m).statistic, friedman(cubed).statistic, 1e-12);
}

TEST(Friedman, RejectsDegenerateShapes) {
  ConditionMatrix one_subject;
  one_subject.values = {{1, 2, 3}};
  EXPECT_THROW(friedman(one_subject), DegenerateInput);
  ConditionMatrix one_condition;
  one_condition.values = {{1}, {2}};
  EXPECT_THROW(friedman(one_condition), DegenerateInput);
  ConditionMatrix bad;
  bad.values = {{1, 2}, {std::nan(""), 3}};
  EXPECT_THROW(friedman(bad), DegenerateInput);
}

// ---------- Wilcoxon ----------

TEST(Wilcoxon, AllZeroDifferencesThrows) {
  std::vector<std::pair<double, double>> pairs(5, {2.0, 2.0});
  EXPECT_THROW(wilcoxon_signed_rank(pairs), AllZeroDifferences);
}

TEST(Wilcoxon, EightPositiveDifferencesExactP) {
  std::vector<std::pair<double, double>> pairs;
  for (int i = 1; i <= 8; ++i)
    pairs.emplace_back(0.0, static_cast<double>(i));  // strictly positive
  const WilcoxonResult r = wilcoxon_signed_rank(pairs);
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.p, 2.0 / 256.0, 1e-15);  // enumeration of all 2^8 sign patterns
  EXPECT_GT(r.statistic, 0.0);
}

TEST(Wilcoxon, BalancedSymmetricPattern) {
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 4; ++i) {
    pairs.emplace_back(0.0, 1.0);
    pairs.emplace_back(0.0, -1.0);
  }
  const WilcoxonResult r = wilcoxon_signed_rank(pairs);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p, 1.0);
}

TEST(Wilcoxon, NegationFlipsZOnly) {
  std::mt19937_64 rng(127);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<double, double>> pairs, negated;
    for (int i = 0; i < 10; ++i) {
      const double d = uniform(rng, -3.0, 3.0);
      pairs.emplace_back(0.0, d);
      negated.emplace_back(0.0, -d);
    }
    bool all_zero = true;
    for (const auto& [a, b] : pairs) all_zero &= (b == a);
    if (all_zero) continue;
    const WilcoxonResult r1 = wilcoxon_signed_rank(pairs);
    const WilcoxonResult r2 = wilcoxon_signed_rank(negated);
    EXPECT_NEAR(r1.statistic, -r2.statistic, 1e-12);
    EXPECT_NEAR(r1.p, r2.p, 1e-12);
  }
}

TEST(Wilcoxon, ZeroPairsDroppedAndCounted) {
  std::vector<std::pair<double, double>> pairs = {
      {1.0, 1.0}, {2.0, 3.0}, {5.0, 5.0}, {1.0, 4.0}, {0.0, 2.0}};
  const WilcoxonResult r = wilcoxon_signed_rank(pairs);
  EXPECT_EQ(r.n_used, 3u);
  EXPECT_EQ(r.n_zeros, 2u);
}

TEST(Wilcoxon, ExactTracksNormalApproximationAtN12) {
  std::mt19937_64 rng(131);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 50; ++trial) {
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 12; ++i) pairs.emplace_back(0.0, gaussian(rng));
    const WilcoxonResult r = wilcoxon_signed_rank(pairs);
    ASSERT_TRUE(r.exact);
    if (r.p < 0.05 || r.p > 0.95) continue;  // sanity band for mid-range stats
    const double p_normal = detail::normal_two_sided_p(r.statistic);
    EXPECT_NEAR(r.p, p_normal, 0.02);
    ++checked;
  }
  EXPECT_GE(checked, 20);
}

TEST(Wilcoxon, LargeSampleUsesNormalBranch) {
  std::mt19937_64 rng(137);
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 30; ++i) pairs.emplace_back(0.0, gaussian(rng) + 0.4);
  const WilcoxonResult r = wilcoxon_signed_rank(pairs);
  EXPECT_FALSE(r.exact);
  EXPECT_GE(r.p, 0.0);
  EXPECT_LE(r.p, 1.0);
}

// ---------- Holm ----------

TEST(Holm, SinglePUnchanged) {
  const auto out = holm_correct({0.03});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0], 0.03);
}

TEST(Holm, TwoStepExample) {
  const auto out = holm_correct({0.01, 0.04});
  EXPECT_DOUBLE_EQ(out[0], 0.02);  // 2 * 0.01
  EXPECT_DOUBLE_EQ(out[1], 0.04);  // max(0.02, 1 * 0.04)
}

// independent step-down oracle, 1-based textbook formulation
std::vector<double> holm_oracle(std::vector<double> p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> adj(m);
  for (std::size_t i = 0; i < m; ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j <= i; ++j)
      best = std::max(best,
                      std::min(1.0, static_cast<double>(m - j) * p[order[j]]));
    adj[order[i]] = best;
  }
  return adj;
}

TEST(Holm, MatchesOracleAndBounds) {
  std::mt19937_64 rng(139);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p;
    const int m = 1 + static_cast<int>(uniform(rng, 0, 8));
    for (int i = 0; i < m; ++i) p.push_back(uniform01(rng));
    const auto ours = holm_correct(p);
    const auto expected = holm_oracle(p);
    for (int i = 0; i < m; ++i) {
      EXPECT_NEAR(ours[i], expected[i], 1e-15);
      EXPECT_GE(ours[i], p[i]);
      EXPECT_LE(ours[i], 1.0);
    }
  }
}

TEST(Holm, MonotoneAlongSortedOrder) {
  const std::vector<double> p = {0.5, 0.6, 0.9};
  const auto out = holm_correct(p);
  for (double v : out) EXPECT_LE(v, 1.0);
  // sorted raw order here is the given order
  EXPECT_LE(out[0], out[1]);
  EXPECT_LE(out[1], out[2]);
}

}  // namespace
}  // namespace telesim
