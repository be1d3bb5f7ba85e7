#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "combopt/errors.hpp"
#include "combopt/experiment.hpp"
#include "combopt/problems.hpp"
#include "combopt/qubo.hpp"
#include "combopt/solver.hpp"
#include "combopt/stats.hpp"

namespace fs = std::filesystem;
using namespace combopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;
constexpr int kExitOversize = 4;

const char* kFormats = R"(File formats:
  TSP      TSPLib: NAME, DIMENSION, EDGE_WEIGHT_TYPE (EUC_2D, CEIL_2D, ATT, GEO,
           EXPLICIT with FULL_MATRIX/UPPER_ROW/LOWER_DIAG_ROW/UPPER_DIAG_ROW),
           NODE_COORD_SECTION or EDGE_WEIGHT_SECTION, EOF.
  KP       "n", "capacity", then n lines "profit weight".
  MaxCut   "n m", then m lines "u v w" with 1-based nodes; each edge once.
  Optima   lines "instance_id optimum"; '#' starts a comment.
  QUBO     "p qubo n m", optional "c offset v", then m lines "i j coeff" (0-based, i <= j).
  Plan     JSON {"instances":[{"id","problem","path"}], "algorithms":[{"id","solver":"nl"|"qubo-sa",...}],
           "runs", "time_limit", "master_seed", "optima", "ratios"}.
  Results  CSV written by bench (raw.csv/results.csv), or a score matrix "instance,alg1,alg2,...".
Exit codes: 0 ok, 2 parse error, invalid value or missing file, 3 solver error, 4 instance over the exact cap.)";

void write_output(const std::optional<std::string>& path, const std::string& content) {
  if (!path || *path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(*path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write " + *path);
  out << content;
}

std::string join(const std::vector<std::int64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

// --- solve ---------------------------------------------------------------------------

struct SolveArgs {
  std::string problem;
  std::string instance;
  std::string solver = "nl";
  std::optional<double> time_limit;
  std::optional<std::size_t> branches;
  std::uint64_t seed = 0;
  std::optional<std::string> out;
  std::size_t threads = 0;
  std::string cm = "sa";
  bool no_qm = false;
  std::uint64_t max_iterations = 0;
  bool deterministic = false;
  std::optional<double> optimum;
  std::optional<std::string> optima;
  std::size_t reads = 100;
  std::size_t sweeps = 1000;
};

int run_solve(const SolveArgs& a) {
  const LoadedInstance inst = load_instance(parse_problem_kind(a.problem), a.instance);
  const bool deterministic = a.deterministic || a.threads == 1;
  SampleSet set;
  if (a.solver == "nl") {
    SolverConfig cfg;
    cfg.time_limit = a.time_limit;
    cfg.n_branches = a.branches;
    cfg.seed = a.seed;
    cfg.cm_kind = parse_cm_kind(a.cm);
    cfg.qm_enabled = !a.no_qm;
    cfg.max_iterations = a.max_iterations;
    cfg.deterministic = deterministic;
    cfg.threads = a.threads;
    set = solve(inst.build_model(), cfg);
  } else {
    SaParams params;
    params.reads = a.reads;
    params.sweeps = a.sweeps;
    params.seed = a.seed;
    set.samples = solve_qubo_path(inst, PenaltyConfig::automatic(), params);
    set.config.seed = a.seed;
  }
  if (set.empty()) throw StateError("solver returned no samples");
  if (a.out) write_output(a.out, to_json(set, !deterministic) + "\n");

  const Sample& best = set.best();
  std::printf("best value %s objective %s feasible %s\n",
              format_sig(inst.native_value(best.objective), 10).c_str(),
              format_sig(best.objective, 10).c_str(), best.feasible ? "yes" : "no");
  std::optional<double> opt = a.optimum;
  if (!opt && a.optima) {
    auto optima = read_optima(*a.optima);
    if (auto it = optima.find(inst.id); it != optima.end()) opt = it->second;
  }
  if (opt) {
    const double r = approximation_ratio(inst.native_value(best.objective), opt,
                                         sense_of(inst.kind), best.feasible);
    std::printf("ratio %.2f\n", r);
  }
  return kExitOk;
}

// --- bench ---------------------------------------------------------------------------

int run_bench(const std::string& plan_path, const std::string& out_dir, bool resume,
              std::size_t threads, std::optional<std::uint64_t> seed) {
  ExperimentPlan plan = ExperimentPlan::load(plan_path);
  if (seed) plan.master_seed = *seed;
  ExperimentOptions opts;
  opts.log_path = fs::path(out_dir) / "results.csv";
  opts.resume = resume;
  opts.threads = std::max<std::size_t>(1, threads);
  std::size_t done = 0;
  opts.on_record = [&](const RunRecord& r) {
    ++done;
    std::fprintf(stderr, "%s %s run %zu: value %s\n", r.instance.c_str(), r.algorithm.c_str(),
                 r.run, format_sig(r.best_value, 10).c_str());
  };
  const ResultsTable table = run_experiment(plan, opts);
  emit_report(table, out_dir);
  std::printf("%zu cells run, %zu records in %s\n", done, table.records.size(), out_dir.c_str());
  return kExitOk;
}

// --- gen-maxcut ------------------------------------------------------------------------

int run_gen(std::size_t nodes, double density, std::int64_t min_w, std::int64_t max_w,
            std::uint64_t seed, const std::optional<std::string>& out) {
  write_output(out, emit_maxcut(generate_random_maxcut(nodes, density, min_w, max_w, seed)));
  return kExitOk;
}

// --- exact ---------------------------------------------------------------------------

int run_exact(const std::string& problem, const std::string& path) {
  const LoadedInstance inst = load_instance(parse_problem_kind(problem), path);
  std::visit(
      [](const auto& in) {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, TspInstance>) {
          auto s = exact_tsp(in);
          std::printf("optimum %s\ntour %s\n", format_sig(s.value, 12).c_str(),
                      join(s.tour).c_str());
        } else if constexpr (std::is_same_v<T, KpInstance>) {
          auto s = exact_kp(in);
          std::printf("optimum %lld\nitems %s\n", static_cast<long long>(s.value),
                      join(s.items).c_str());
        } else {
          auto s = exact_maxcut(in);
          std::printf("optimum %s\nsides %s\n", format_sig(s.value, 12).c_str(),
                      join(s.sides).c_str());
        }
      },
      inst.data);
  return kExitOk;
}

// --- export-qubo ------------------------------------------------------------------------

int run_export(const std::string& problem, const std::string& path,
               std::optional<double> penalty, const std::optional<std::string>& out) {
  const LoadedInstance inst = load_instance(parse_problem_kind(problem), path);
  const PenaltyConfig pc = penalty ? PenaltyConfig::fixed(*penalty) : PenaltyConfig::automatic();
  QuboEncoding enc = std::visit(
      [&](const auto& in) -> QuboEncoding {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, TspInstance>) {
          return tsp_to_qubo(in, pc);
        } else if constexpr (std::is_same_v<T, KpInstance>) {
          return kp_to_qubo(in, pc);
        } else {
          return mcp_to_qubo(in);
        }
      },
      inst.data);
  write_output(out, write_qubo(enc.qubo));
  if (enc.penalty > 0.0) std::fprintf(stderr, "penalty %s\n", format_sig(enc.penalty, 10).c_str());
  return kExitOk;
}

// --- stats ---------------------------------------------------------------------------

struct StatsInput {
  std::vector<std::string> instances;
  std::vector<std::string> algorithms;
  std::vector<std::vector<double>> scores;  // instances x algorithms
  // Raw results only: per (instance, algorithm) run values.
  std::vector<std::vector<std::vector<double>>> runs;
  ScoreDirection direction = ScoreDirection::HigherBetter;
};

StatsInput load_stats_input(const std::string& path, const std::string& metric,
                            bool lower_better) {
  const std::string text = read_text_file(path);
  const auto rows = parse_csv(text);
  if (rows.empty()) throw ParseError(path + ": empty results file");
  StatsInput in;
  in.direction = lower_better ? ScoreDirection::LowerBetter : ScoreDirection::HigherBetter;
  if (rows.front() == ResultsTable::columns()) {
    const ResultsTable table = ResultsTable::from_csv(text);
    for (const auto& r : table.records) {
      if (std::find(in.instances.begin(), in.instances.end(), r.instance) == in.instances.end()) {
        in.instances.push_back(r.instance);
      }
      if (std::find(in.algorithms.begin(), in.algorithms.end(), r.algorithm) ==
          in.algorithms.end()) {
        in.algorithms.push_back(r.algorithm);
      }
    }
    in.runs.assign(in.instances.size(),
                   std::vector<std::vector<double>>(in.algorithms.size()));
    for (const auto& r : table.records) {
      const auto i = static_cast<std::size_t>(
          std::find(in.instances.begin(), in.instances.end(), r.instance) - in.instances.begin());
      const auto j = static_cast<std::size_t>(
          std::find(in.algorithms.begin(), in.algorithms.end(), r.algorithm) -
          in.algorithms.begin());
      std::optional<double> v;
      if (metric == "best_ratio") {
        v = r.best_ratio;
      } else if (metric == "mean_ratio") {
        v = r.mean_ratio;
      } else if (metric == "best_value") {
        v = r.best_value;
      } else {
        throw ParseError("unknown metric '" + metric + "'");
      }
      if (!v) throw MetricError("record " + r.instance + "/" + r.algorithm + " has no " + metric);
      in.runs[i][j].push_back(*v);
    }
    if (metric == "best_value" && !table.records.empty() &&
        sense_of(table.records.front().problem) == Sense::Minimize) {
      in.direction = ScoreDirection::LowerBetter;
    }
    for (std::size_t i = 0; i < in.instances.size(); ++i) {
      std::vector<double> row;
      for (const auto& cell : in.runs[i]) {
        if (cell.empty()) throw MetricError("instance " + in.instances[i] + " lacks an algorithm");
        double s = 0.0;
        for (double v : cell) s += v;
        row.push_back(s / static_cast<double>(cell.size()));
      }
      in.scores.push_back(std::move(row));
    }
    return in;
  }
  // Score matrix: instance,alg1,...
  in.algorithms.assign(rows.front().begin() + 1, rows.front().end());
  if (in.algorithms.empty()) throw ParseError(path + ": score matrix needs algorithm columns");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != in.algorithms.size() + 1) {
      throw ParseError(path + ": row " + std::to_string(r) + " has the wrong field count");
    }
    in.instances.push_back(rows[r][0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < rows[r].size(); ++j) {
      try {
        row.push_back(std::stod(rows[r][j]));
      } catch (const std::logic_error&) {
        throw ParseError(path + ": bad number '" + rows[r][j] + "'");
      }
    }
    in.scores.push_back(std::move(row));
  }
  return in;
}

int run_stats(const std::string& results, const std::string& test,
              std::optional<std::string> control, const std::string& metric,
              bool lower_better, const std::optional<std::string>& csv_out) {
  const StatsInput in = load_stats_input(results, metric, lower_better);
  const RankSummary s = average_ranks(in.scores, in.direction, in.algorithms);
  if (!control) {
    control = s.algorithms[static_cast<std::size_t>(
        std::min_element(s.avg_ranks.begin(), s.avg_ranks.end()) - s.avg_ranks.begin())];
  }
  s.index_of(*control);
  std::string csv;

  if (test == "friedman") {
    const FriedmanResult f = friedman_statistic(s);
    std::printf("%-16s %s\n", "Algorithm", "Ranking");
    csv = csv_row({"algorithm", "avg_rank"});
    for (std::size_t j = 0; j < s.k; ++j) {
      std::printf("%-16s %.4f\n", s.algorithms[j].c_str(), s.avg_ranks[j]);
      csv += csv_row({s.algorithms[j], format_sig(s.avg_ranks[j])});
    }
    std::printf("Friedman statistic (df %zu, N %zu): %s\n", f.df, s.n,
                format_sig(f.statistic).c_str());
    std::printf("critical value (99%%): %s\n", format_sig(f.critical).c_str());
    std::printf("%s\n", f.significant ? "significant differences" : "no significant differences");
    csv += csv_row({"friedman", format_sig(f.statistic)});
    csv += csv_row({"critical", format_sig(f.critical)});
  } else if (test == "holm") {
    const auto entries = holm_posthoc(s, *control);
    std::printf("control %s (rank %.4f)\n", control->c_str(), s.avg_ranks[s.index_of(*control)]);
    std::printf("%-16s %-10s %-10s %-12s %s\n", "Algorithm", "Ranking", "z", "p", "Holm p");
    csv = csv_row({"algorithm", "avg_rank", "z", "p_unadjusted", "p_adjusted"});
    for (const auto& e : entries) {
      std::printf("%-16s %-10.4f %-10s %-12s %s\n", e.algorithm.c_str(), e.avg_rank,
                  format_sig(e.z).c_str(), format_sig(e.p_unadjusted).c_str(),
                  format_sig(e.p_adjusted).c_str());
      csv += csv_row({e.algorithm, format_sig(e.avg_rank), format_sig(e.z),
                      format_sig(e.p_unadjusted), format_sig(e.p_adjusted)});
    }
  } else if (test == "wilcoxon") {
    const std::size_t c = s.index_of(*control);
    csv = csv_row({"instance", "control", "algorithm", "p", "symbol"});
    std::printf("%-16s %-16s %-16s %-12s %s\n", "Instance", "Control", "Algorithm", "p", "");
    auto emit = [&](const std::string& inst, std::size_t j, const std::vector<double>& a,
                    const std::vector<double>& b) {
      const WilcoxonResult w = wilcoxon_rank_sum(a, b, in.direction);
      std::printf("%-16s %-16s %-16s %-12s %s\n", inst.c_str(), control->c_str(),
                  s.algorithms[j].c_str(), format_sig(w.p).c_str(), w.symbol.c_str());
      csv += csv_row({inst, *control, s.algorithms[j], format_sig(w.p), w.symbol});
    };
    for (std::size_t j = 0; j < s.k; ++j) {
      if (j == c) continue;
      if (!in.runs.empty()) {
        for (std::size_t i = 0; i < in.instances.size(); ++i) {
          emit(in.instances[i], j, in.runs[i][c], in.runs[i][j]);
        }
      } else {
        std::vector<double> a;
        std::vector<double> b;
        for (const auto& row : in.scores) {
          a.push_back(row[c]);
          b.push_back(row[j]);
        }
        emit("*", j, a, b);
      }
    }
  } else {
    throw ParseError("unknown test '" + test + "'");
  }
  if (csv_out) write_output(csv_out, csv);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combinatorial optimization toolkit: modeling, hybrid solver, QUBO baseline, "
               "benchmark statistics"};
  app.footer(kFormats);
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one instance and write a sample set");
  solve_cmd->add_option("--problem", solve_args.problem, "tsp | kp | maxcut")
      ->required()
      ->check(CLI::IsMember({"tsp", "kp", "maxcut"}));
  solve_cmd->add_option("--instance", solve_args.instance, "Instance file")->required();
  solve_cmd->add_option("--solver", solve_args.solver, "nl | qubo-sa")
      ->check(CLI::IsMember({"nl", "qubo-sa"}));
  solve_cmd->add_option("--time-limit", solve_args.time_limit, "Seconds (default max(5, N/20))");
  solve_cmd->add_option("--branches", solve_args.branches, "Portfolio branches");
  solve_cmd->add_option("--seed", solve_args.seed, "Random seed");
  solve_cmd->add_option("--out", solve_args.out, "Sample-set JSON path ('-' for stdout)");
  solve_cmd->add_option("--threads", solve_args.threads,
                        "Concurrent branches cap; 1 runs deterministically");
  solve_cmd->add_option("--cm", solve_args.cm, "sa | tabu")->check(CLI::IsMember({"sa", "tabu"}));
  solve_cmd->add_flag("--no-qm", solve_args.no_qm, "Disable the QUBO subproblem module");
  solve_cmd->add_option("--max-iterations", solve_args.max_iterations,
                        "Per-branch iteration budget (0: time only)");
  solve_cmd->add_flag("--deterministic", solve_args.deterministic,
                      "Sequential branches, inline QM, timing omitted from JSON");
  solve_cmd->add_option("--optimum", solve_args.optimum, "Reference optimum for the ratio line");
  solve_cmd->add_option("--optima", solve_args.optima, "Reference optima file");
  solve_cmd->add_option("--reads", solve_args.reads, "qubo-sa reads");
  solve_cmd->add_option("--sweeps", solve_args.sweeps, "qubo-sa sweeps per read");

  std::string plan_path;
  std::string out_dir;
  bool resume = false;
  std::size_t bench_threads = 1;
  std::optional<std::uint64_t> bench_seed;
  auto* bench_cmd = app.add_subcommand("bench", "Run an experiment plan and emit reports");
  bench_cmd->add_option("--plan", plan_path, "Plan JSON")->required();
  bench_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  bench_cmd->add_flag("--resume", resume, "Keep finished cells from results.csv");
  bench_cmd->add_option("--threads", bench_threads, "Concurrent cells");
  bench_cmd->add_option("--seed", bench_seed, "Override the plan master seed");

  std::size_t nodes = 0;
  double density = 0.5;
  std::int64_t min_w = 1;
  std::int64_t max_w = 10;
  std::uint64_t gen_seed = 0;
  std::optional<std::string> gen_out;
  auto* gen_cmd = app.add_subcommand("gen-maxcut", "Generate a random weighted graph");
  gen_cmd->add_option("--nodes", nodes, "Node count")->required();
  gen_cmd->add_option("--density", density, "Edge probability in [0, 1]");
  gen_cmd->add_option("--min-w", min_w, "Minimum integer weight");
  gen_cmd->add_option("--max-w", max_w, "Maximum integer weight");
  gen_cmd->add_option("--seed", gen_seed, "Random seed");
  gen_cmd->add_option("--out", gen_out, "Output path (default stdout)");

  std::string exact_problem;
  std::string exact_instance;
  auto* exact_cmd = app.add_subcommand("exact", "Exact optimum for small instances");
  exact_cmd->add_option("--problem", exact_problem, "tsp | kp | maxcut")
      ->required()
      ->check(CLI::IsMember({"tsp", "kp", "maxcut"}));
  exact_cmd->add_option("--instance", exact_instance, "Instance file")->required();

  std::string results;
  std::string test = "friedman";
  std::optional<std::string> control;
  std::string metric = "best_ratio";
  bool lower_better = false;
  std::optional<std::string> stats_csv;
  auto* stats_cmd = app.add_subcommand("stats", "Friedman, Holm and rank-sum tests");
  stats_cmd->add_option("--results", results, "Results CSV or score matrix")->required();
  stats_cmd->add_option("--test", test, "friedman | holm | wilcoxon")
      ->check(CLI::IsMember({"friedman", "holm", "wilcoxon"}));
  stats_cmd->add_option("--control", control, "Control algorithm (default: best ranked)");
  stats_cmd->add_option("--metric", metric, "best_ratio | mean_ratio | best_value (results CSV)");
  stats_cmd->add_flag("--lower-better", lower_better, "Score matrix values are costs");
  stats_cmd->add_option("--csv", stats_csv, "Machine-readable output path");

  std::string qubo_problem;
  std::string qubo_instance;
  std::optional<double> qubo_penalty;
  std::optional<std::string> qubo_out;
  auto* export_cmd = app.add_subcommand("export-qubo", "Write the penalty QUBO of an instance");
  export_cmd->add_option("--problem", qubo_problem, "tsp | kp | maxcut")
      ->required()
      ->check(CLI::IsMember({"tsp", "kp", "maxcut"}));
  export_cmd->add_option("--instance", qubo_instance, "Instance file")->required();
  export_cmd->add_option("--penalty", qubo_penalty, "Fixed penalty (default automatic)");
  export_cmd->add_option("--out", qubo_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (*solve_cmd) return run_solve(solve_args);
    if (*bench_cmd) return run_bench(plan_path, out_dir, resume, bench_threads, bench_seed);
    if (*gen_cmd) return run_gen(nodes, density, min_w, max_w, gen_seed, gen_out);
    if (*exact_cmd) return run_exact(exact_problem, exact_instance);
    if (*stats_cmd) return run_stats(results, test, control, metric, lower_better, stats_csv);
    if (*export_cmd) return run_export(qubo_problem, qubo_instance, qubo_penalty, qubo_out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const SizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOversize;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}
