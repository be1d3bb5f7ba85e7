#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "combopt/stats.hpp"
#include "support/oracles.hpp"

namespace combopt {
namespace {

const std::vector<std::string> kAlgs{"NL", "CQM", "BQM"};

TEST(Ratio, Basics) {
  EXPECT_EQ(approximation_ratio(426, 426.0, Sense::Minimize), 1.0);
  EXPECT_EQ(approximation_ratio(852, 426.0, Sense::Minimize), 0.5);
  EXPECT_EQ(approximation_ratio(75, 100.0, Sense::Maximize), 0.75);
  EXPECT_EQ(approximation_ratio(75, 100.0, Sense::Maximize, false), 0.0);
  std::size_t clamps = 0;
  EXPECT_EQ(approximation_ratio(120, 100.0, Sense::Maximize, true, &clamps), 1.0);
  EXPECT_EQ(approximation_ratio(90, 100.0, Sense::Minimize, true, &clamps), 1.0);
  EXPECT_EQ(clamps, 2u);
  EXPECT_EQ(approximation_ratio(-5, 100.0, Sense::Maximize), 0.0);
}

TEST(Ratio, Errors) {
  EXPECT_THROW(approximation_ratio(1, std::nullopt, Sense::Minimize), MetricError);
  EXPECT_THROW(approximation_ratio(1, 0.0, Sense::Minimize), MetricError);
  EXPECT_THROW(approximation_ratio(1, -3.0, Sense::Minimize), MetricError);
  EXPECT_THROW(approximation_ratio(1, 0.0, Sense::Maximize), MetricError);
}

TEST(Ratio, KnapsackOptimumAgainstItself) {
  std::mt19937_64 gen(1);
  auto kp = oracle::random_kp(12, 150, gen);
  const double opt = static_cast<double>(exact_kp(kp).value);
  if (opt > 0) EXPECT_EQ(approximation_ratio(opt, opt, Sense::Maximize), 1.0);
}

Sample sample(double objective, bool feasible) {
  Sample s;
  s.objective = objective;
  s.feasible = feasible;
  return s;
}

TEST(SampleSetMetrics, HandComputed) {
  std::vector<Sample> opt{sample(10, true), sample(10, true)};
  auto all = sampleset_metrics(opt, 10.0, Sense::Minimize);
  EXPECT_EQ(all.best_ratio, 1.0);
  EXPECT_EQ(all.mean_ratio, 1.0);

  std::vector<Sample> half{sample(10, true), sample(5, false)};
  auto h = sampleset_metrics(half, 10.0, Sense::Minimize);
  EXPECT_EQ(h.best_ratio, 1.0);
  EXPECT_EQ(h.mean_ratio, 0.5);

  // Maximization: objectives are negated profits.
  std::vector<Sample> five{sample(-100, true), sample(-80, true), sample(-80, true),
                           sample(-50, true), sample(-200, false)};
  auto m = sampleset_metrics(five, 100.0, Sense::Maximize);
  EXPECT_DOUBLE_EQ(m.best_ratio, 1.0);
  EXPECT_DOUBLE_EQ(m.mean_ratio, (1.0 + 0.8 + 0.8 + 0.5 + 0.0) / 5.0);
}

TEST(Ranks, IdenticalAndDominant) {
  std::vector<std::vector<double>> same(4, std::vector<double>{0.7, 0.7, 0.7});
  auto s = average_ranks(same, ScoreDirection::HigherBetter, kAlgs);
  for (double r : s.avg_ranks) EXPECT_EQ(r, 2.0);

  std::vector<std::vector<double>> dom{{1, 0.5, 0.9}, {1, 0.2, 0.3}};
  auto d = average_ranks(dom);
  EXPECT_EQ(d.avg_ranks[0], 1.0);
  EXPECT_EQ(d.algorithms[0], "A1");
}

TEST(Ranks, HandBuiltWithTie) {
  std::vector<std::vector<double>> m{{0.9, 0.9, 0.5}, {0.3, 0.8, 0.6}, {0.7, 0.6, 0.8}};
  auto s = average_ranks(m);
  EXPECT_EQ(s.rows[0], (std::vector<double>{1.5, 1.5, 3}));
  EXPECT_EQ(s.rows[1], (std::vector<double>{3, 1, 2}));
  EXPECT_EQ(s.rows[2], (std::vector<double>{2, 3, 1}));
  EXPECT_DOUBLE_EQ(s.avg_ranks[0], 6.5 / 3);
  EXPECT_DOUBLE_EQ(s.avg_ranks[1], 5.5 / 3);
  EXPECT_DOUBLE_EQ(s.avg_ranks[2], 2.0);
  double total = 0;
  for (double r : s.avg_ranks) total += r;
  EXPECT_DOUBLE_EQ(total, 6.0);

  auto low = average_ranks(m, ScoreDirection::LowerBetter);
  EXPECT_EQ(low.rows[1], (std::vector<double>{1, 3, 2}));
}

TEST(Ranks, RaggedMatrixRejected) {
  EXPECT_THROW(average_ranks({{1, 2}, {1}}), MetricError);
}

TEST(Friedman, ReferenceRankings) {
  EXPECT_NEAR(friedman_statistic(rank_summary({1, 2.0667, 2.9333}, 15, kAlgs)).statistic, 28.13, 0.01);
  EXPECT_NEAR(friedman_statistic(rank_summary({1.1333, 1.8667, 3}, 15, kAlgs)).statistic, 26.53, 0.01);
  auto r = friedman_statistic(rank_summary({1, 2, 3}, 15, kAlgs));
  EXPECT_NEAR(r.statistic, 30.0, 0.01);
  EXPECT_EQ(r.df, 2u);
  EXPECT_NEAR(r.critical, 9.21, 0.005);
  EXPECT_TRUE(r.significant);
  EXPECT_FALSE(friedman_statistic(rank_summary({2, 2, 2}, 15, kAlgs)).significant);
}

TEST(Friedman, InvariantUnderMonotoneTransform) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<std::vector<double>> m(10, std::vector<double>(4));
  for (auto& row : m) {
    for (auto& v : row) v = u(gen);
  }
  auto t = m;
  for (auto& row : t) {
    for (auto& v : row) v = std::exp(3 * v) - 7;
  }
  EXPECT_DOUBLE_EQ(friedman_statistic(average_ranks(m)).statistic,
                   friedman_statistic(average_ranks(t)).statistic);
}

const HolmEntry& entry(const std::vector<HolmEntry>& h, const std::string& name) {
  for (const auto& e : h) {
    if (e.algorithm == name) return e;
  }
  throw std::runtime_error("missing " + name);
}

TEST(Holm, ReferenceAdjustedPValues) {
  auto kp_best = holm_posthoc(rank_summary({1.1333, 1.8667, 3}, 15, kAlgs), "NL");
  EXPECT_NEAR(entry(kp_best, "CQM").p_adjusted, 0.04461, 5e-4);
  EXPECT_LE(entry(kp_best, "BQM").p_adjusted, 1e-5);
  auto tsp_set = holm_posthoc(rank_summary({1, 2.0667, 2.9333}, 15, kAlgs), "NL");
  EXPECT_NEAR(entry(tsp_set, "CQM").p_adjusted, 0.003487, 1e-4);
  auto kp_set = holm_posthoc(rank_summary({1, 2, 3}, 15, kAlgs), "NL");
  EXPECT_NEAR(entry(kp_set, "CQM").p_adjusted, 0.00617, 5e-4);
}

TEST(Holm, StepDownProperties) {
  auto s = rank_summary({1.0, 2.4, 2.5, 4.1, 5.0}, 12, {"a", "b", "c", "d", "e"});
  auto h = holm_posthoc(s, "a");
  ASSERT_EQ(h.size(), 4u);
  for (std::size_t i = 0; i < h.size(); ++i) {
    EXPECT_GE(h[i].p_adjusted, h[i].p_unadjusted);
    EXPECT_LE(h[i].p_adjusted, 1.0);
    if (i > 0) {
      EXPECT_GE(h[i].p_unadjusted, h[i - 1].p_unadjusted);
      EXPECT_GE(h[i].p_adjusted, h[i - 1].p_adjusted);
    }
  }
  // Literal step-down formula.
  const double m = 4;
  double running = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    running = std::max(running, std::min(1.0, (m - static_cast<double>(i)) * h[i].p_unadjusted));
    EXPECT_NEAR(h[i].p_adjusted, running, 1e-15);
  }
  EXPECT_THROW(holm_posthoc(s, "zzz"), MetricError);
}

TEST(NormalCdf, AgainstSeries) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.96), 0.9750021048517795, 1e-12);
  for (double z = -8.0; z <= 8.0; z += 0.125) {
    EXPECT_NEAR(normal_cdf(z), oracle::normal_cdf_series(z), 1e-10) << z;
    EXPECT_NEAR(normal_cdf(-z), 1.0 - normal_cdf(z), 1e-12) << z;
  }
}

TEST(Wilcoxon, IdenticalSamples) {
  std::vector<double> a{1, 2, 3, 4, 5};
  auto r = wilcoxon_rank_sum(a, a);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_EQ(r.z, 0.0);
  EXPECT_EQ(r.symbol, "=");
  std::vector<double> flat{2, 2, 2};
  EXPECT_EQ(wilcoxon_rank_sum(flat, flat).p, 1.0);
}

TEST(Wilcoxon, SeparatedSamplesAgainstExact) {
  std::vector<double> a{1, 2, 3, 4, 5};
  std::vector<double> b{11, 12, 13, 14, 15};
  auto r = wilcoxon_rank_sum(a, b);
  EXPECT_NEAR(r.p, oracle::exact_rank_sum_p(a, b), 0.05);
  EXPECT_EQ(r.rank_sum, 15.0);
  EXPECT_EQ(wilcoxon_rank_sum(b, a).p, r.p);
  // p ~ 0.012 > 0.01: not significant at 99%.
  EXPECT_EQ(r.symbol, "=");
  std::vector<double> c(20), d(20);
  for (int i = 0; i < 20; ++i) {
    c[i] = i;
    d[i] = 100 + i;
  }
  EXPECT_EQ(wilcoxon_rank_sum(d, c).symbol, "▲");
  EXPECT_EQ(wilcoxon_rank_sum(c, d).symbol, "▽");
  EXPECT_EQ(wilcoxon_rank_sum(c, d, ScoreDirection::LowerBetter).symbol, "▲");
}

TEST(Format, SignificantFigures) {
  EXPECT_EQ(format_sig(0.0446123), "0.04461");
  EXPECT_EQ(format_sig(28.1333), "28.13");
  EXPECT_EQ(format_sig(0.00348712), "0.003487");
}

}  // namespace
}  // namespace combopt
