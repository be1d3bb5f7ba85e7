#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "combopt/problems.hpp"
#include "combopt/qubo.hpp"
#include "combopt/solver.hpp"
#include "combopt/stats.hpp"

namespace combopt {

enum class ProblemKind { Tsp, Kp, MaxCut };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view text);  // "tsp" | "kp" | "maxcut"
Sense sense_of(ProblemKind kind);                        // TSP minimizes, others maximize

/// Parsed instance of any of the three problems.
struct LoadedInstance {
  std::string id;
  ProblemKind kind = ProblemKind::Tsp;
  std::variant<TspInstance, KpInstance, McInstance> data;

  Model build_model() const;
  /// Problem-native value (tour cost, profit, cut weight) of a model objective.
  double native_value(double objective) const;
};

LoadedInstance load_instance(ProblemKind kind, const std::filesystem::path& path,
                             std::string id = {});

/// Exact optimum in problem-native units, or nullopt when the instance is
/// beyond the oracle caps.
std::optional<double> exact_optimum(const LoadedInstance& instance);

/// Lines "instance_id optimum"; '#' starts a comment.
std::map<std::string, double> parse_optima(std::string_view text);
std::map<std::string, double> read_optima(const std::filesystem::path& path);

struct AlgorithmSpec {
  enum class Solver { Nl, QuboSa };
  std::string id;
  Solver solver = Solver::Nl;
  SolverConfig nl;                 // seed and time limit are set per cell
  SaParams sa;                     // seed is set per cell
  PenaltyConfig penalty;           // QUBO path only
  std::optional<double> time_limit;  // overrides the plan default
};

struct InstanceSpec {
  std::string id;
  ProblemKind kind = ProblemKind::Tsp;
  std::filesystem::path path;
};

/// Declarative experiment: instances x algorithms x runs.
struct ExperimentPlan {
  std::vector<InstanceSpec> instances;
  std::vector<AlgorithmSpec> algorithms;
  std::size_t runs = 10;
  double time_limit = 10.0;
  std::uint64_t master_seed = 0;
  std::optional<std::filesystem::path> optima_path;
  bool ratios = true;  // require an optimum for every instance

  /// Relative paths resolve against base_dir. Unknown keys are rejected.
  static ExperimentPlan from_json(std::string_view text,
                                  const std::filesystem::path& base_dir = {});
  static ExperimentPlan load(const std::filesystem::path& path);
};

/// Binary baseline: encode, sample, decode. Feasible samples first,
/// ascending objective.
std::vector<Sample> solve_qubo_path(const LoadedInstance& instance, PenaltyConfig penalty,
                                    const SaParams& params);

std::uint64_t cell_seed(std::uint64_t master_seed, std::string_view instance,
                        std::string_view algorithm, std::size_t run);

struct RunRecord {
  std::string instance;
  ProblemKind problem = ProblemKind::Tsp;
  std::string algorithm;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double best_value = 0.0;  // problem-native units
  bool best_feasible = false;
  std::optional<double> mean_value;  // over feasible samples
  double feasible_fraction = 0.0;
  double wall_time = 0.0;
  std::optional<double> best_ratio;
  std::optional<double> mean_ratio;
  std::size_t samples = 0;
  std::size_t clamps = 0;
};

RunRecord run_cell(const LoadedInstance& instance, const AlgorithmSpec& algorithm,
                   std::size_t run, std::uint64_t seed, double time_limit,
                   std::optional<double> optimum, std::size_t threads = 0);

/// Append-only record log; CSV with a fixed column order.
class ResultsTable {
 public:
  std::vector<RunRecord> records;

  bool contains(std::string_view instance, std::string_view algorithm,
                std::size_t run) const;
  std::size_t count(std::string_view instance, std::string_view algorithm) const;

  static const std::vector<std::string>& columns();
  static std::string record_row(const RunRecord& record);
  std::string to_csv() const;
  static ResultsTable from_csv(std::string_view text);
  static ResultsTable load(const std::filesystem::path& path);
};

struct ExperimentOptions {
  std::filesystem::path log_path;  // empty: keep results in memory only
  bool resume = false;             // keep existing log rows, run missing cells
  std::size_t threads = 1;         // concurrent cells
  std::function<void(const RunRecord&)> on_record;
};

/// Runs every missing cell. Each record is appended to the log as soon as
/// its cell finishes. MetricError lists instances without an optimum when
/// ratios are required.
ResultsTable run_experiment(const ExperimentPlan& plan, const ExperimentOptions& options);

struct Aggregate {
  std::string instance;
  ProblemKind problem = ProblemKind::Tsp;
  std::string algorithm;
  std::size_t runs = 0;
  double best_value_mean = 0.0;
  double best_value_min = 0.0;
  double best_value_max = 0.0;
  std::optional<double> best_ratio_mean;
  std::optional<double> mean_ratio_mean;
  double feasible_fraction_mean = 0.0;
  double wall_time_mean = 0.0;
};

/// Per (instance, algorithm) aggregates in first-appearance order.
std::vector<Aggregate> aggregate(const ResultsTable& table);
std::string aggregates_csv(const std::vector<Aggregate>& aggregates);

/// Writes raw.csv, aggregates.csv, stats.csv, wilcoxon.csv and one
/// plot_<problem>_<metric>.csv per problem and ratio metric. Returns the
/// written paths.
std::vector<std::filesystem::path> emit_report(const ResultsTable& table,
                                               const std::filesystem::path& out_dir);

// RFC-4180 helpers.
std::string csv_row(const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string format_fixed(double value, int decimals = 9);

}  // namespace combopt
