#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "combopt/errors.hpp"

namespace combopt {

using NodeId = std::size_t;
using DecisionId = std::size_t;
using ConstraintId = std::size_t;

enum class DecisionKind {
  List,             // permutation of 0..n-1
  Set,              // subset of 0..n-1, any cardinality
  DisjointLists,    // n_lists ordered sequences partitioning 0..n-1
  DisjointBitSets,  // n_sets index sets partitioning 0..n-1
  Binary,           // n bits
  Integer,          // n bounded integers
};

std::string_view to_string(DecisionKind kind);

struct DecisionSpec {
  DecisionKind kind = DecisionKind::List;
  std::size_t size = 0;    // n, or n_vars for the disjoint kinds
  std::size_t groups = 1;  // n_lists / n_sets; 1 otherwise
  std::int64_t lower = 0;  // Integer bounds; Binary uses [0, 1]
  std::int64_t upper = 1;

  static DecisionSpec list(std::size_t n);
  static DecisionSpec set(std::size_t n);
  static DecisionSpec disjoint_lists(std::size_t n_vars, std::size_t n_lists);
  static DecisionSpec disjoint_bit_sets(std::size_t n_vars, std::size_t n_sets);
  static DecisionSpec binary(std::size_t n);
  static DecisionSpec integer(std::size_t n, std::int64_t lower,
                              std::int64_t upper);

  /// Throws DomainError when the size or bound invariants are broken.
  void validate() const;

  /// Number of sequences the assignment of this decision is made of.
  std::size_t part_count() const;
};

/// Value of one decision. Single-part kinds use parts[0]; the disjoint
/// kinds use one part per list/set.
struct DecisionValue {
  std::vector<std::vector<std::int64_t>> parts;

  friend bool operator==(const DecisionValue&, const DecisionValue&) = default;
};

/// A concrete assignment of every decision of a model, in declaration order.
struct State {
  std::vector<DecisionValue> decisions;

  friend bool operator==(const State&, const State&) = default;
};

/// Stable FNV-1a hash of a state; identical across runs and platforms.
std::uint64_t state_hash(const State& state);

struct Shape {
  int rank = 0;  // 0 scalar, 1 vector, 2 matrix
  std::array<std::size_t, 2> dims{0, 0};
  bool dynamic = false;  // rank-1 length only known at evaluation time

  static Shape scalar() { return {}; }
  static Shape vector(std::size_t n, bool dynamic = false) {
    return {1, {n, 0}, dynamic};
  }
  static Shape matrix(std::size_t rows, std::size_t cols) {
    return {2, {rows, cols}, false};
  }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class Op {
  Constant,
  Decision,
  Group,  // one list/set of a disjoint decision
  Index,
  Slice,
  Add,
  Sub,
  Mul,
  Neg,
  Abs,
  Sum,
  Le,
  Ge,
  Eq,
};

std::string_view to_string(Op op);
bool is_comparison(Op op);

struct ExprNode {
  Op op = Op::Constant;
  std::vector<NodeId> operands;
  Shape shape;
  bool integral = false;     // every value is integer valued
  std::size_t payload = 0;   // constant slot, decision id, or group index
  std::optional<std::int64_t> start;  // Slice bounds, Python semantics
  std::optional<std::int64_t> stop;
};

struct ConstantArray {
  Shape shape;
  std::vector<double> values;  // row-major
};

struct DecisionRef {
  DecisionId id = 0;
  NodeId node = 0;  // disjoint kinds: per-element group label vector
  std::vector<NodeId> groups;  // disjoint kinds: one node per list/set
};

struct Evaluation {
  double objective = 0.0;
  std::vector<bool> constraint_results;
  std::vector<double> violations;
  bool feasible = true;

  double total_violation() const;

  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

/// Append-only expression DAG with decision variables, constraints and a
/// single minimization objective. Operands always precede their users, so
/// node order is a topological order.
class Model {
 public:
  Model() = default;

  DecisionRef add_decision(const DecisionSpec& spec);

  NodeId add_constant(double value);
  NodeId add_constant(std::span<const double> values);
  NodeId add_constant(std::span<const double> values, std::size_t rows,
                      std::size_t cols);

  /// Generic builder for the arithmetic, reduction and comparison ops.
  NodeId build(Op op, std::span<const NodeId> operands);
  NodeId add(NodeId a, NodeId b) { return binary(Op::Add, a, b); }
  NodeId sub(NodeId a, NodeId b) { return binary(Op::Sub, a, b); }
  NodeId mul(NodeId a, NodeId b) { return binary(Op::Mul, a, b); }
  NodeId neg(NodeId a) { return unary(Op::Neg, a); }
  NodeId abs(NodeId a) { return unary(Op::Abs, a); }
  NodeId sum(NodeId a) { return unary(Op::Sum, a); }
  NodeId le(NodeId a, NodeId b) { return binary(Op::Le, a, b); }
  NodeId ge(NodeId a, NodeId b) { return binary(Op::Ge, a, b); }
  NodeId eq(NodeId a, NodeId b) { return binary(Op::Eq, a, b); }

  /// Advanced (gather) indexing: one indexer per base dimension. Scalar
  /// indexers broadcast against vector indexers of a common length.
  NodeId index(NodeId base, std::span<const NodeId> indexers);
  /// Unit-step slice of a vector, with Python bounds semantics.
  NodeId slice(NodeId base, std::optional<std::int64_t> start,
               std::optional<std::int64_t> stop);

  ConstraintId add_constraint(NodeId node);
  void minimize(NodeId node);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  const std::vector<ExprNode>& nodes() const { return nodes_; }
  const ExprNode& node(NodeId id) const;
  const std::vector<DecisionSpec>& decisions() const { return decisions_; }
  const std::vector<NodeId>& decision_nodes() const { return decision_nodes_; }
  const std::vector<NodeId>& constraints() const { return constraints_; }
  std::optional<NodeId> objective() const { return objective_; }
  const ConstantArray& constant(std::size_t slot) const;

  /// Structural violations of the State invariants; empty iff valid.
  std::vector<std::string> validate_state(const State& state) const;

  /// Validates the state, then evaluates every constraint and the objective.
  Evaluation evaluate(const State& state) const;

 private:
  NodeId binary(Op op, NodeId a, NodeId b);
  NodeId unary(Op op, NodeId a);
  NodeId push(ExprNode node);
  void check_mutable() const;
  void check_node(NodeId id) const;

  std::vector<ExprNode> nodes_;
  std::vector<ConstantArray> constants_;
  std::vector<DecisionSpec> decisions_;
  std::vector<NodeId> decision_nodes_;
  std::vector<NodeId> constraints_;
  std::optional<NodeId> objective_;
  bool frozen_ = false;
};

/// Reusable evaluation workspace bound to one model. Not thread safe; use
/// one per thread. The model must outlive the evaluator and stay unchanged.
class Evaluator {
 public:
  explicit Evaluator(const Model& model);

  /// Evaluates without structural validation; the caller guarantees the
  /// state is valid (solver hot path).
  const Evaluation& operator()(const State& state);

  const Model& model() const { return *model_; }

 private:
  struct Buffer {
    int rank = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
  };

  void eval_node(NodeId id, const State& state);

  const Model* model_;
  std::vector<Buffer> buffers_;
  Evaluation result_;
};

/// Lightweight handle for writing models with operators:
///   auto cost = matrix.at({route.slice(0, -1), route.slice(1, {})}).sum();
class Expr {
 public:
  Expr(Model& model, NodeId id) : model_(&model), id_(id) {}

  NodeId id() const { return id_; }
  Model& model() const { return *model_; }
  const Shape& shape() const { return model_->node(id_).shape; }

  Expr at(std::initializer_list<Expr> indexers) const;
  Expr at(std::int64_t i) const;
  Expr slice(std::optional<std::int64_t> start,
             std::optional<std::int64_t> stop) const;
  Expr sum() const { return {*model_, model_->sum(id_)}; }
  Expr abs() const { return {*model_, model_->abs(id_)}; }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr operator<=(const Expr& a, const Expr& b);
  friend Expr operator>=(const Expr& a, const Expr& b);
  friend Expr operator==(const Expr& a, const Expr& b);

 private:
  Model* model_;
  NodeId id_;
};

}  // namespace combopt
