#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "combopt/solver.hpp"

namespace combopt {

enum class Sense { Minimize, Maximize };

std::string_view to_string(Sense sense);

/// min: optimum / value, max: value / optimum, clamped to [0, 1].
/// Infeasible values score 0. Each clamp from above increments *clamps.
double approximation_ratio(double value, std::optional<double> optimum, Sense sense,
                           bool feasible = true, std::size_t* clamps = nullptr);

struct SampleSetMetrics {
  double best_ratio = 0.0;
  double mean_ratio = 0.0;  // unweighted, duplicates included
  std::size_t clamps = 0;
};

/// Sample objectives are in minimization form; for Maximize the problem
/// value is the negated objective.
SampleSetMetrics sampleset_metrics(std::span<const Sample> samples,
                                   std::optional<double> optimum, Sense sense);

enum class ScoreDirection { HigherBetter, LowerBetter };

struct RankSummary {
  std::size_t k = 0;  // algorithms
  std::size_t n = 0;  // instances (blocks)
  std::vector<std::string> algorithms;
  std::vector<double> avg_ranks;
  std::vector<std::vector<double>> rows;  // per-instance ranks, 1 = best

  std::size_t index_of(std::string_view algorithm) const;  // MetricError if absent
};

/// Ranks each row (ties share the mean of their positions) and averages
/// over rows. `algorithms` defaults to "A1".."Ak".
RankSummary average_ranks(const std::vector<std::vector<double>>& scores,
                          ScoreDirection direction = ScoreDirection::HigherBetter,
                          std::vector<std::string> algorithms = {});

/// Builds a summary directly from average ranks (no per-row data).
RankSummary rank_summary(std::vector<double> avg_ranks, std::size_t n,
                         std::vector<std::string> algorithms = {});

struct FriedmanResult {
  double statistic = 0.0;
  std::size_t df = 0;
  double critical = 0.0;  // chi-square quantile at `confidence`
  bool significant = false;
};

double chi_square_critical(std::size_t df, double confidence = 0.99);
FriedmanResult friedman_statistic(const RankSummary& summary, double confidence = 0.99);

struct HolmEntry {
  std::string algorithm;
  double avg_rank = 0.0;
  double z = 0.0;
  double p_unadjusted = 0.0;
  double p_adjusted = 0.0;
};

/// Entries for every non-control algorithm, ascending by unadjusted p.
std::vector<HolmEntry> holm_posthoc(const RankSummary& summary,
                                    std::string_view control);

struct WilcoxonResult {
  double rank_sum = 0.0;  // of sample a
  double z = 0.0;
  double p = 1.0;
  std::string symbol;  // "▲" a significantly better, "▽" worse, "=" otherwise
};

/// Two-sided rank-sum test, normal approximation with midranks,
/// tie-corrected variance and continuity correction.
WilcoxonResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                                 ScoreDirection direction = ScoreDirection::HigherBetter,
                                 double alpha = 0.01);

/// Standard normal CDF via the complementary error function.
double normal_cdf(double z);

/// Four significant figures, as used in the statistical tables.
std::string format_sig(double value, int digits = 4);

}  // namespace combopt
