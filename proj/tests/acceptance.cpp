// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "combopt/experiment.hpp"
#include "combopt/problems.hpp"
#include "combopt/qubo.hpp"
#include "combopt/solver.hpp"
#include "combopt/stats.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace combopt;

namespace {

const fs::path kData = COMBOPT_TEST_DATA;

// Sample sets from criteria 2 and 3, re-validated by criterion 4.
struct Collected {
  const Model* model;
  std::vector<State> states;
};
std::vector<std::unique_ptr<Model>> g_models;
std::vector<Collected> g_collected;

const Model& keep(Model m) {
  g_models.push_back(std::make_unique<Model>(std::move(m)));
  return *g_models.back();
}

void collect(const Model& model, const SampleSet& set) {
  Collected c{&model, {}};
  for (const auto& s : set.samples) c.states.push_back(s.state);
  g_collected.push_back(std::move(c));
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1. Statistics fidelity -------------------------------------------------------

Outcome statistics_fidelity() {
  Outcome o;
  const std::vector<std::string> algs{"NL", "CQM", "BQM"};
  struct Case {
    std::vector<double> ranks;
    double friedman;
    double holm_cqm;
    double holm_tol;
  };
  const Case cases[] = {
      {{1, 2.0667, 2.9333}, 28.13, 0.003487, 5e-4},
      {{1.1333, 1.8667, 3}, 26.53, 0.04461, 5e-4},
      {{1, 2, 3}, 30.00, 0.00617, 5e-4},
  };
  for (const auto& c : cases) {
    RankSummary s = rank_summary(c.ranks, 15, algs);
    const double f = friedman_statistic(s).statistic;
    double p = -1;
    for (const auto& e : holm_posthoc(s, "NL")) {
      if (e.algorithm == "CQM") p = e.p_adjusted;
    }
    o.detail << " F=" << format_sig(f) << " holm=" << format_sig(p);
    o.require(std::abs(f - c.friedman) <= 0.01, "friedman " + format_sig(c.friedman));
    o.require(std::abs(p - c.holm_cqm) <= c.holm_tol, "holm " + format_sig(c.holm_cqm));
  }
  // Same statistics through score matrices that realise the rankings.
  for (const auto& [file, expect] : {std::pair{"ranks_28_13.csv", 28.13}, {"ranks_26_53.csv", 26.53},
                                     {"ranks_30_00.csv", 30.0}}) {
    auto rows = parse_csv(read_text_file(kData / "stats" / file));
    std::vector<std::vector<double>> scores;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      std::vector<double> row;
      for (std::size_t c = 1; c < rows[r].size(); ++c) row.push_back(std::stod(rows[r][c]));
      scores.push_back(row);
    }
    const double f = friedman_statistic(average_ranks(scores, ScoreDirection::HigherBetter, algs)).statistic;
    o.require(std::abs(f - expect) <= 0.01, std::string("matrix ") + file);
  }
  return o;
}

// --- 2. Oracle equivalence --------------------------------------------------------

template <typename Fn>
double model_min(const Model& m, std::size_t count, Fn make_state, bool* all_valid) {
  Evaluator ev(m);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    State s = make_state(i);
    if (!m.validate_state(s).empty()) *all_valid = false;
    const Evaluation& e = ev(s);
    if (e.feasible) best = std::min(best, e.objective);
  }
  return best;
}

std::size_t g_oracle_states = 0;

struct QuboCheck {
  bool ok = true;
  std::size_t checked = 0;
};

// Ground state of an encoding must decode feasibly to the oracle value.
void check_qubo_ground(const QuboEncoding& enc, double expected_objective, QuboCheck& q) {
  if (enc.qubo.size() > 20) return;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> arg;
  oracle::enumerate_qubo(enc.qubo, [&](const std::vector<std::uint8_t>& x, double e) {
    if (e < best) {
      best = e;
      arg = x;
    }
  });
  const DecodedSample d = enc.decode(arg);
  ++q.checked;
  if (!d.feasible || std::abs(best - expected_objective) > 1e-9 ||
      std::abs(d.objective - expected_objective) > 1e-9) {
    q.ok = false;
  }
}

Outcome oracle_equivalence() {
  Outcome o;
  std::mt19937_64 gen(20240601);
  bool valid = true;
  QuboCheck q;
  int tsp_bad = 0, kp_bad = 0, mc_bad = 0;

  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + static_cast<std::size_t>(t % 7);  // 3..9
    auto inst = oracle::random_tsp(n, gen, t % 2 == 0);
    Model m = build_tsp_model(inst);
    std::vector<std::int64_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t count = 1;
    for (std::size_t k = 2; k < n; ++k) count *= k;
    const double via_model = model_min(
        m, count,
        [&](std::size_t) {
          State s{{DecisionValue{{perm}}}};
          std::next_permutation(perm.begin() + 1, perm.end());
          return s;
        },
        &valid);
    g_oracle_states += count;
    const double brute = oracle::brute_tsp(inst);
    if (via_model != brute || exact_tsp(inst).value != brute) ++tsp_bad;
    check_qubo_ground(tsp_to_qubo(inst), brute, q);
  }

  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t % 20);  // 1..20
    auto inst = oracle::random_kp(n, t % 3 == 0 ? 40 : 400, gen);
    Model m = build_kp_model(inst);
    const double via_model = model_min(
        m, std::size_t{1} << n,
        [&](std::size_t mask) {
          std::vector<std::int64_t> items;
          for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1) items.push_back(static_cast<std::int64_t>(i));
          }
          return State{{DecisionValue{{items}}}};
        },
        &valid);
    g_oracle_states += std::size_t{1} << n;
    const auto dp = exact_kp(inst).value;
    if (via_model != -static_cast<double>(dp) || dp != oracle::brute_kp(inst)) ++kp_bad;
    check_qubo_ground(kp_to_qubo(inst), -static_cast<double>(dp), q);
  }

  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 11);  // 2..12
    auto inst = oracle::random_maxcut(n, gen);
    Model m = build_mcp_model(inst);
    const double via_model = model_min(
        m, std::size_t{1} << n,
        [&](std::size_t mask) {
          std::vector<std::int64_t> bits(n);
          for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<std::int64_t>(mask >> i & 1);
          return State{{DecisionValue{{bits}}}};
        },
        &valid);
    g_oracle_states += std::size_t{1} << n;
    const double brute = oracle::brute_maxcut(inst);
    if (via_model != -brute || exact_maxcut(inst).value != brute) ++mc_bad;
    check_qubo_ground(mcp_to_qubo(inst), -brute, q);
  }

  o.detail << " tsp_mismatch=" << tsp_bad << " kp_mismatch=" << kp_bad << " maxcut_mismatch=" << mc_bad
           << " qubo_ground_states=" << q.checked;
  o.require(tsp_bad == 0 && kp_bad == 0 && mc_bad == 0, "model path vs oracles");
  o.require(q.ok, "qubo ground-state path");
  o.require(valid, "enumerated states valid");
  return o;
}

// --- 3. Solver quality ------------------------------------------------------------

struct QualityRun {
  double ratio = 0.0;
  double wall = 0.0;
};

QualityRun quality_run(const LoadedInstance& inst, double optimum, double time_limit,
                       std::uint64_t seed) {
  const Model& m = keep(inst.build_model());
  SolverConfig c;
  c.seed = seed;
  c.time_limit = time_limit;
  c.target_objective = inst.kind == ProblemKind::Tsp ? optimum : -optimum;
  SampleSet set = solve(m, c);
  collect(m, set);
  const Sample& b = set.best();
  return {approximation_ratio(inst.native_value(b.objective), optimum, sense_of(inst.kind), b.feasible),
          set.wall_time};
}

Outcome solver_quality() {
  Outcome o;
  const auto optima = read_optima(kData / "optima.txt");
  auto opt = [&](const std::string& id) { return optima.at(id); };

  for (const char* id : {"euc7", "euc8", "euc9"}) {
    auto inst = load_instance(ProblemKind::Tsp, kData / "tsp" / (std::string(id) + ".tsp"));
    int hits = 0;
    for (std::uint64_t r = 0; r < 10; ++r) {
      auto q = quality_run(inst, opt(id), 10.0, 1000 + r);
      if (q.ratio == 1.0) ++hits;
    }
    o.detail << " " << id << "=" << hits << "/10";
    o.require(hits >= 9, std::string(id) + " optimum in >= 9/10");
  }
  for (const char* id : {"eil51", "berlin52"}) {
    auto inst = load_instance(ProblemKind::Tsp, kData / "tsp" / (std::string(id) + ".tsp"));
    auto q = quality_run(inst, opt(id), 60.0, 1);
    o.detail << " " << id << "=" << format_fixed(q.ratio, 4) << "@" << format_fixed(q.wall, 1) << "s";
    o.require(q.ratio >= 0.92, std::string(id) + " ratio >= 0.92");
  }
  {
    auto inst = load_instance(ProblemKind::Kp, kData / "kp" / "s50_syn.kp");
    auto q = quality_run(inst, opt("s50_syn"), 10.0, 1);
    o.detail << " s50_syn=" << format_fixed(q.ratio, 4);
    o.require(q.ratio >= 0.95, "s50_syn ratio >= 0.95");
  }
  {
    auto inst = load_instance(ProblemKind::MaxCut, kData / "maxcut" / "mc10.txt");
    int hits = 0;
    for (std::uint64_t r = 0; r < 10; ++r) {
      if (quality_run(inst, opt("mc10"), 5.0, 2000 + r).ratio == 1.0) ++hits;
    }
    o.detail << " mc10=" << hits << "/10";
    o.require(hits >= 9, "mc10 optimum in >= 9/10");
  }
  return o;
}

// --- 4. Structural invariants -----------------------------------------------------

Outcome structural_invariants() {
  Outcome o;
  std::mt19937_64 gen(4);
  std::vector<Model> models;
  models.push_back(build_tsp_model(load_tsplib(kData / "tsp" / "berlin52.tsp")));
  models.push_back(build_kp_model(load_kplib(kData / "kp" / "s50_syn.kp")));
  models.push_back(build_mcp_model(load_maxcut(kData / "maxcut" / "mc10.txt")));
  {
    Model mixed;
    mixed.add_decision(DecisionSpec::list(9));
    mixed.add_decision(DecisionSpec::set(12));
    mixed.add_decision(DecisionSpec::disjoint_lists(10, 3));
    mixed.add_decision(DecisionSpec::disjoint_bit_sets(10, 4));
    mixed.freeze();
    models.push_back(std::move(mixed));
  }
  std::size_t sampled = 0;
  std::size_t failures = 0;
  Rng rng(44);
  for (const auto& m : models) {
    for (int restart = 0; restart < 10; ++restart) {
      State s = initial_state(m, rng);
      for (int step = 0; step < 25000; ++step) {
        if (auto mv = random_move(m, s, rng)) apply_move(m, s, *mv);
        ++sampled;
        if (!m.validate_state(s).empty()) ++failures;
      }
    }
  }
  std::size_t set_states = 0;
  for (const auto& c : g_collected) {
    for (const auto& s : c.states) {
      ++set_states;
      if (!c.model->validate_state(s).empty()) ++failures;
    }
  }
  o.detail << " walk_states=" << sampled << " oracle_states=" << g_oracle_states
           << " sampleset_states=" << set_states << " failures=" << failures;
  o.require(sampled >= 1000000, ">= 1e6 sampled states");
  o.require(set_states > 0, "sample sets from criterion 3 present");
  o.require(failures == 0, "zero validate_state failures");
  return o;
}

// --- 5. Determinism and anytime behaviour -------------------------------------------

Outcome determinism_anytime() {
  Outcome o;
  std::vector<Model> models;
  models.push_back(build_tsp_model(load_tsplib(kData / "tsp" / "euc9.tsp")));
  models.push_back(build_tsp_model(load_tsplib(kData / "tsp" / "eil51.tsp")));
  models.push_back(build_kp_model(load_kplib(kData / "kp" / "s50_syn.kp")));
  models.push_back(build_mcp_model(load_maxcut(kData / "maxcut" / "mc10.txt")));

  int identical = 0;
  int compared = 0;
  for (std::size_t k = 0; k < models.size(); ++k) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      SolverConfig c;
      c.seed = seed;
      c.n_branches = 1;
      c.threads = 1;
      c.deterministic = true;
      c.max_iterations = 20000;
      c.time_limit = 120.0;
      ++compared;
      if (to_json(solve(models[k], c), false) == to_json(solve(models[k], c), false)) ++identical;
    }
  }

  int monotone = 0;
  int runs = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Model& m = models[seed % models.size()];
    SolverConfig c;
    c.seed = seed;
    c.n_branches = 1 + seed % 3;
    c.time_limit = 0.25;
    SampleSet set = solve(m, c);
    ++runs;
    bool ok = !set.trace.empty();
    for (std::size_t i = 1; i < set.trace.size(); ++i) {
      const auto& a = set.trace[i - 1];
      const auto& b = set.trace[i];
      Evaluation ea{a.objective, {}, {a.violation}, a.feasible};
      Evaluation eb{b.objective, {}, {b.violation}, b.feasible};
      if (compare(eb, ea) == std::partial_ordering::greater || b.time < a.time) ok = false;
    }
    if (ok) ++monotone;
  }
  o.detail << " byte_identical=" << identical << "/" << compared << " monotone_traces=" << monotone
           << "/" << runs;
  o.require(identical == compared, "byte-identical runs");
  o.require(monotone == runs, "nonincreasing best-so-far");
  return o;
}

// --- 6. Penalty dominance ---------------------------------------------------------

// Infeasibility of a bitstring is judged on the encoding's own constraints:
// slack equality for KP, both one-hot families for TSP.
bool dominance_holds(const QuboEncoding& enc, const std::function<bool(const std::vector<std::uint8_t>&)>& feasible) {
  double best_feasible = std::numeric_limits<double>::infinity();
  double best_infeasible = std::numeric_limits<double>::infinity();
  oracle::enumerate_qubo(enc.qubo, [&](const std::vector<std::uint8_t>& x, double e) {
    if (feasible(x)) {
      best_feasible = std::min(best_feasible, e);
    } else {
      best_infeasible = std::min(best_infeasible, e);
    }
  });
  return best_infeasible > best_feasible;
}

Outcome penalty_dominance() {
  Outcome o;
  std::mt19937_64 gen(6);
  int kp_ok = 0, kp_total = 0, tsp_ok = 0, tsp_total = 0;
  std::size_t max_bits = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t % 10);
    auto inst = oracle::random_kp(n, 500, gen);
    QuboEncoding enc = kp_to_qubo(inst);
    const auto slack = slack_coefficients(inst.capacity);
    max_bits = std::max(max_bits, enc.qubo.size());
    auto feasible = [&](const std::vector<std::uint8_t>& x) {
      std::int64_t total = 0;
      for (std::size_t i = 0; i < n; ++i) total += x[i] * inst.weights[i];
      for (std::size_t j = 0; j < slack.size(); ++j) total += x[n + j] * slack[j];
      return total == inst.capacity;
    };
    ++kp_total;
    if (dominance_holds(enc, feasible)) ++kp_ok;
  }
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = t < 3 ? 5 : 3 + static_cast<std::size_t>(t % 2);
    auto inst = oracle::random_tsp(n, gen, t % 2 == 0);
    QuboEncoding enc = tsp_to_qubo(inst);
    max_bits = std::max(max_bits, enc.qubo.size());
    auto feasible = [&](const std::vector<std::uint8_t>& x) {
      for (std::size_t a = 0; a < n; ++a) {
        int row = 0, col = 0;
        for (std::size_t b = 0; b < n; ++b) {
          row += x[a * n + b];
          col += x[b * n + a];
        }
        if (row != 1 || col != 1) return false;
      }
      return true;
    };
    ++tsp_total;
    if (dominance_holds(enc, feasible)) ++tsp_ok;
  }
  o.detail << " kp=" << kp_ok << "/" << kp_total << " tsp=" << tsp_ok << "/" << tsp_total
           << " max_bits=" << max_bits;
  o.require(kp_ok == kp_total && tsp_ok == tsp_total, "infeasible energies above feasible optimum");
  return o;
}

// --- 7. Wilcoxon correctness ------------------------------------------------------

Outcome wilcoxon_correctness() {
  Outcome o;
  std::mt19937_64 gen(7);
  std::normal_distribution<double> value(0.0, 1.0);
  double worst = 0.0;
  int labelings = 0;
  for (int pair = 0; pair < 50; ++pair) {
    std::vector<double> pooled(10);
    for (auto& v : pooled) v = value(gen);
    for (unsigned mask = 0; mask < 1024; ++mask) {
      if (std::popcount(mask) != 5) continue;
      std::vector<double> a, b;
      for (int i = 0; i < 10; ++i) (mask >> i & 1 ? a : b).push_back(pooled[i]);
      const double approx = wilcoxon_rank_sum(a, b).p;
      const double exact = oracle::exact_rank_sum_p(a, b);
      worst = std::max(worst, std::abs(approx - exact));
      ++labelings;
    }
  }
  o.detail << " labelings=" << labelings << " max_abs_diff=" << format_sig(worst);
  o.require(labelings == 50 * 252, "252 labelings per pair");
  o.require(worst <= 0.05, "normal approximation within 0.05");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional argument: comma-free list of criterion numbers to run, e.g. "157".
  const std::string only = argc > 1 ? argv[1] : "";
  struct Criterion {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {1, "statistics fidelity", statistics_fidelity},
      {2, "oracle equivalence", oracle_equivalence},
      {3, "solver quality", solver_quality},
      {4, "structural invariants", structural_invariants},
      {5, "determinism and anytime", determinism_anytime},
      {6, "penalty dominance", penalty_dominance},
      {7, "wilcoxon correctness", wilcoxon_correctness},
  };
  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && only.find(std::to_string(c.id)) == std::string::npos) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    all = all && out.pass;
    std::printf("%s criterion %d (%s):%s (%.1fs)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
