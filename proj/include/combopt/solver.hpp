#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "combopt/model.hpp"
#include "combopt/qubo.hpp"
#include "combopt/rng.hpp"

namespace combopt {

enum class CmKind { SimulatedAnnealing, TabuSearch };

std::string_view to_string(CmKind kind);
CmKind parse_cm_kind(std::string_view text);

struct SolverConfig {
  std::optional<double> time_limit;        // seconds; default scales with size
  std::optional<std::size_t> n_branches;   // default: hardware threads, max 8
  std::uint64_t seed = 0;
  CmKind cm_kind = CmKind::SimulatedAnnealing;
  bool qm_enabled = true;
  std::size_t qm_period = 500;   // CM iterations between QM queries
  std::size_t qm_window = 16;    // decision elements freed per query
  std::size_t qm_reads = 10;
  std::size_t qm_sweeps = 200;
  std::size_t tabu_candidates = 16;
  std::size_t stagnation_limit = 10'000;
  std::uint64_t max_iterations = 0;         // per branch; 0 = time bound only
  std::optional<double> target_objective;   // stop once a feasible sample reaches it
  bool deterministic = false;  // branches in sequence, QM inline
  std::size_t threads = 0;     // cap on concurrent branches; 0 = no cap

  /// Throws DomainError when an invariant is broken.
  void validate() const;
};

/// Fills the size-scaled defaults: time limit max(5 s, N/20 s) over the
/// total number of decision elements N, and branch count.
SolverConfig resolve_config(const SolverConfig& config, const Model& model);

/// Feasible beats infeasible, then lower total violation, then lower
/// objective. Equivalent evaluations compare equal.
std::partial_ordering compare(const Evaluation& a, const Evaluation& b);
/// Total order: compare() with the state hash as final tie break.
std::strong_ordering compare(const Evaluation& a, std::uint64_t hash_a,
                             const Evaluation& b, std::uint64_t hash_b);

// --- Neighborhood ---------------------------------------------------------------

enum class MoveKind {
  Swap,           // List: exchange positions a and b
  Reverse,        // List: reverse positions a..b (2-opt)
  Insert,         // List: move the element at a to position b
  Add,            // Set: insert element a
  Drop,           // Set: remove element a
  SwapInOut,      // Set: remove a, insert b
  Flip,           // Binary: toggle coordinate a
  SetValue,       // Integer: coordinate a takes value b
  Transfer,       // Disjoint: element at index a of part_a moves to part_b (index b)
  Exchange,       // Disjoint: part_a[a] <-> part_b[b]
  ReverseInPart,  // DisjointLists: reverse part_a[a..b]
};

struct Move {
  DecisionId decision = 0;
  MoveKind kind = MoveKind::Swap;
  std::size_t part_a = 0;
  std::size_t part_b = 0;
  std::int64_t a = 0;
  std::int64_t b = 0;
};

/// Uniformly random structurally valid assignment of every decision.
State initial_state(const Model& model, Rng& rng);

/// Random move for one decision; nullopt when the decision admits none
/// (e.g. a one-element list). Moves always keep the state valid.
std::optional<Move> random_move(const Model& model, const State& state,
                                DecisionId decision, Rng& rng);
/// Random move on a decision drawn with probability proportional to size.
std::optional<Move> random_move(const Model& model, const State& state, Rng& rng);
void apply_move(const Model& model, State& state, const Move& move);

/// Element-level attributes touched by a move; used as tabu keys.
std::vector<std::uint64_t> move_attributes(const State& state, const Move& move);

// --- Branch machinery -----------------------------------------------------------

struct Schedule {
  double t0 = 1.0;         // initial temperature
  double alpha = 0.999;    // geometric cooling factor per iteration
  double t_floor_ratio = 1e-3;
  double penalty = 1.0;    // weight of one unit of violation in SA energy
  std::uint64_t budget = 0;  // predicted iterations
};

struct BranchState {
  std::size_t index = 0;
  Rng rng;
  State current;
  State scratch;  // equals current between steps
  Evaluation current_eval;
  std::uint64_t current_hash = 0;
  State best;
  Evaluation best_eval;
  std::uint64_t best_hash = 0;
  double temperature = 1.0;
  std::uint64_t iteration = 0;
  std::uint64_t last_improvement = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> tabu;  // attribute -> expiry
  std::size_t restarts = 0;
  std::size_t qm_queries = 0;
  std::size_t qm_merges = 0;
  std::size_t qm_improvements = 0;
  std::vector<std::string> warnings;
  bool improved = false;  // best changed during the last step
};

/// Starts a branch at a random state.
BranchState make_branch(const Model& model, Evaluator& evaluator,
                        std::size_t index, std::uint64_t seed);

/// T0 from the mean |delta| of 100 random neighbor probes; alpha reaches
/// t_floor_ratio * T0 after `budget` iterations.
Schedule make_schedule(const Model& model, Evaluator& evaluator,
                       BranchState& branch, std::uint64_t budget);

/// One CM iteration (SA or tabu) updating current, best and bookkeeping.
void cm_step(BranchState& branch, Evaluator& evaluator, const Schedule& schedule,
             CmKind kind, std::size_t tabu_candidates);

/// A QUBO subproblem over a window of one decision of the incumbent.
struct QmQuery {
  enum class Encoding {
    Value,      // one bit per freed element: membership / bit value
    Placement,  // one-hot (element k, slot p) at index k * w + p
  };
  Qubo qubo;
  DecisionId decision = 0;
  DecisionKind kind = DecisionKind::Binary;
  Encoding encoding = Encoding::Value;
  std::vector<std::int64_t> elements;  // freed elements
  std::vector<std::size_t> positions;  // Placement: freed list positions
  State base;                          // incumbent the window is cut from
  bool clamped = false;
};

/// Builds the subproblem for `window` elements of the incumbent's decision
/// `decision`; nullopt when the decision kind has no QUBO window.
/// Binary/Set windows probe the energy objective + penalty * violation
/// (exact for quadratic energies); List windows need a tour-cost matrix
/// found in the model.
std::optional<QmQuery> qm_query(const Model& model, Evaluator& evaluator,
                                const State& incumbent, DecisionId decision,
                                std::size_t window, double penalty, Rng& rng);

/// Maps a subproblem bitstring back to a full state; nullopt when the
/// bits do not encode a valid placement.
std::optional<State> decode_qm(const QmQuery& query,
                               std::span<const std::uint8_t> bits);

/// Decoded states compete with the incumbent via compare(); infeasible
/// decodes are discarded. Returns true when the incumbent changed.
bool merge_qm_result(BranchState& branch, Evaluator& evaluator,
                     const std::vector<State>& decoded);

/// Locates an n x n constant indexed by adjacent slices of a List decision,
/// i.e. a closed-tour cost over that matrix.
std::optional<NodeId> find_tour_matrix(const Model& model, DecisionId decision);

// --- Solve ------------------------------------------------------------------------

struct Sample {
  State state;
  double objective = 0.0;
  bool feasible = false;
  double violation = 0.0;
  std::size_t branch = 0;
  std::uint64_t iteration = 0;
  double time = 0.0;     // seconds since solve start
  std::string origin;    // "cm", "qm" or "final"
};

struct Checkpoint {
  double time = 0.0;
  std::uint64_t iteration = 0;
  std::size_t branch = 0;
  double objective = 0.0;
  bool feasible = false;
  double violation = 0.0;
};

struct BranchReport {
  std::size_t index = 0;
  std::uint64_t iterations = 0;
  std::size_t restarts = 0;
  std::size_t qm_queries = 0;
  std::size_t qm_merges = 0;
  std::size_t qm_improvements = 0;
  std::vector<std::string> warnings;
};

struct SampleSet {
  std::vector<Sample> samples;  // best first
  std::vector<BranchReport> branches;
  std::vector<Checkpoint> trace;  // global best-so-far, in time order
  SolverConfig config;            // resolved
  double wall_time = 0.0;

  const Sample& best() const;
  bool empty() const { return samples.empty(); }
};

SampleSet solve(const Model& model, const SolverConfig& config);

/// JSON document with states, objectives, feasibility, provenance and the
/// config echo. Timing fields are omitted when include_timing is false.
std::string to_json(const SampleSet& set, bool include_timing = true);
SampleSet sampleset_from_json(std::string_view text);

}  // namespace combopt
