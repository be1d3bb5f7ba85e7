#include "combopt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "combopt/errors.hpp"

namespace combopt {

namespace {

// Midranks (1-based) of `values` in ascending order.
std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<std::string> default_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < k; ++j) names.push_back("A" + std::to_string(j + 1));
  return names;
}

}  // namespace

std::string_view to_string(Sense sense) {
  return sense == Sense::Minimize ? "min" : "max";
}

double approximation_ratio(double value, std::optional<double> optimum, Sense sense,
                           bool feasible, std::size_t* clamps) {
  if (!optimum) throw MetricError("approximation ratio: optimum missing");
  const double opt = *optimum;
  if (sense == Sense::Minimize && !(opt > 0.0)) {
    throw MetricError("approximation ratio: minimization optimum must be positive");
  }
  if (sense == Sense::Maximize && opt == 0.0) {
    throw MetricError("approximation ratio: maximization optimum must be nonzero");
  }
  if (!feasible) return 0.0;
  double r = 0.0;
  if (sense == Sense::Minimize) {
    r = value > 0.0 ? opt / value : 0.0;
  } else {
    r = value / opt;
  }
  if (!std::isfinite(r) || r < 0.0) return 0.0;
  if (r > 1.0) {
    if (clamps) ++*clamps;
    return 1.0;
  }
  return r;
}

SampleSetMetrics sampleset_metrics(std::span<const Sample> samples,
                                   std::optional<double> optimum, Sense sense) {
  if (!optimum) throw MetricError("sample-set metrics: optimum missing");
  SampleSetMetrics m;
  if (samples.empty()) return m;
  double total = 0.0;
  for (const auto& s : samples) {
    const double value = sense == Sense::Maximize ? -s.objective : s.objective;
    const double r = approximation_ratio(value, optimum, sense, s.feasible, &m.clamps);
    m.best_ratio = std::max(m.best_ratio, r);
    total += r;
  }
  m.mean_ratio = total / static_cast<double>(samples.size());
  return m;
}

std::size_t RankSummary::index_of(std::string_view algorithm) const {
  auto it = std::find(algorithms.begin(), algorithms.end(), algorithm);
  if (it == algorithms.end()) {
    throw MetricError("algorithm '" + std::string(algorithm) + "' not in rank summary");
  }
  return static_cast<std::size_t>(it - algorithms.begin());
}

RankSummary average_ranks(const std::vector<std::vector<double>>& scores,
                          ScoreDirection direction, std::vector<std::string> algorithms) {
  RankSummary s;
  s.n = scores.size();
  s.k = scores.empty() ? algorithms.size() : scores.front().size();
  if (s.k == 0) throw MetricError("rank summary needs at least one algorithm");
  s.algorithms = algorithms.empty() ? default_names(s.k) : std::move(algorithms);
  if (s.algorithms.size() != s.k) throw MetricError("algorithm names do not match columns");
  s.avg_ranks.assign(s.k, 0.0);
  for (const auto& row : scores) {
    if (row.size() != s.k) throw MetricError("ragged score matrix");
    std::vector<double> keyed(row);
    if (direction == ScoreDirection::HigherBetter) {
      for (double& v : keyed) v = -v;
    }
    auto ranks = midranks(keyed);
    for (std::size_t j = 0; j < s.k; ++j) s.avg_ranks[j] += ranks[j];
    s.rows.push_back(std::move(ranks));
  }
  if (s.n > 0) {
    for (double& r : s.avg_ranks) r /= static_cast<double>(s.n);
  } else {
    std::fill(s.avg_ranks.begin(), s.avg_ranks.end(), 0.5 * static_cast<double>(s.k + 1));
  }
  return s;
}

RankSummary rank_summary(std::vector<double> avg_ranks, std::size_t n,
                         std::vector<std::string> algorithms) {
  RankSummary s;
  s.k = avg_ranks.size();
  s.n = n;
  s.algorithms = algorithms.empty() ? default_names(s.k) : std::move(algorithms);
  if (s.algorithms.size() != s.k) throw MetricError("algorithm names do not match ranks");
  s.avg_ranks = std::move(avg_ranks);
  return s;
}

double chi_square_critical(std::size_t df, double confidence) {
  if (df == 0) throw MetricError("chi-square critical value needs df >= 1");
  boost::math::chi_squared dist(static_cast<double>(df));
  return boost::math::quantile(dist, confidence);
}

FriedmanResult friedman_statistic(const RankSummary& s, double confidence) {
  if (s.k < 2) throw MetricError("Friedman test needs at least two algorithms");
  FriedmanResult r;
  const double k = static_cast<double>(s.k);
  const double center = 0.5 * (k + 1.0);
  double ss = 0.0;
  for (double rj : s.avg_ranks) ss += (rj - center) * (rj - center);
  r.statistic = 12.0 * static_cast<double>(s.n) / (k * (k + 1.0)) * ss;
  r.df = s.k - 1;
  r.critical = chi_square_critical(r.df, confidence);
  r.significant = r.statistic > r.critical;
  return r;
}

std::vector<HolmEntry> holm_posthoc(const RankSummary& s, std::string_view control) {
  const std::size_t c = s.index_of(control);
  if (s.n == 0) throw MetricError("Holm procedure needs at least one instance");
  const double k = static_cast<double>(s.k);
  const double se = std::sqrt(k * (k + 1.0) / (6.0 * static_cast<double>(s.n)));
  std::vector<HolmEntry> out;
  for (std::size_t j = 0; j < s.k; ++j) {
    if (j == c) continue;
    HolmEntry e;
    e.algorithm = s.algorithms[j];
    e.avg_rank = s.avg_ranks[j];
    e.z = (s.avg_ranks[j] - s.avg_ranks[c]) / se;
    e.p_unadjusted = std::min(1.0, std::erfc(std::abs(e.z) / std::sqrt(2.0)));
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const HolmEntry& a, const HolmEntry& b) {
    return a.p_unadjusted < b.p_unadjusted;
  });
  const double m = static_cast<double>(out.size());
  double running = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double adj = std::min(1.0, (m - static_cast<double>(i)) * out[i].p_unadjusted);
    running = std::max(running, adj);
    out[i].p_adjusted = running;
  }
  return out;
}

WilcoxonResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                                 ScoreDirection direction, double alpha) {
  if (a.empty() || b.empty()) throw MetricError("rank-sum test needs nonempty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;

  WilcoxonResult r;
  for (std::size_t i = 0; i < a.size(); ++i) r.rank_sum += ranks[i];

  // Tie correction: sum of t^3 - t over tie groups.
  std::vector<double> sorted(pooled);
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double mean = n1 * (n + 1.0) / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  const double diff = r.rank_sum - mean;
  if (var <= 0.0) {
    r.z = 0.0;
    r.p = 1.0;
  } else {
    const double corrected = std::max(0.0, std::abs(diff) - 0.5);
    r.z = std::copysign(corrected / std::sqrt(var), diff);
    r.p = std::min(1.0, std::erfc(corrected / std::sqrt(var) / std::sqrt(2.0)));
  }
  // Higher rank sum means larger values in a.
  const bool a_larger = diff > 0.0;
  const bool a_better = direction == ScoreDirection::HigherBetter ? a_larger : !a_larger;
  if (r.p < alpha && diff != 0.0) {
    r.symbol = a_better ? "▲" : "▽";
  } else {
    r.symbol = "=";
  }
  return r;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::string format_sig(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

}  // namespace combopt
