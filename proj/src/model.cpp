#include "combopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace combopt {

namespace {

bool is_integer_value(double v) { return std::isfinite(v) && std::floor(v) == v; }

std::size_t element_count(const Shape& s) {
  switch (s.rank) {
    case 0:
      return 1;
    case 1:
      return s.dims[0];
    default:
      return s.dims[0] * s.dims[1];
  }
}

// Resolves a Python-style unit-step slice against a runtime length.
std::pair<std::size_t, std::size_t> resolve_slice(
    std::optional<std::int64_t> start, std::optional<std::int64_t> stop,
    std::size_t length) {
  const auto n = static_cast<std::int64_t>(length);
  auto clamp = [n](std::int64_t v) {
    if (v < 0) v += n;
    return std::clamp<std::int64_t>(v, 0, n);
  };
  std::int64_t b = start ? clamp(*start) : 0;
  std::int64_t e = stop ? clamp(*stop) : n;
  if (e < b) e = b;
  return {static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
}

}  // namespace

std::string_view to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::List:
      return "list";
    case DecisionKind::Set:
      return "set";
    case DecisionKind::DisjointLists:
      return "disjoint_lists";
    case DecisionKind::DisjointBitSets:
      return "disjoint_bit_sets";
    case DecisionKind::Binary:
      return "binary";
    case DecisionKind::Integer:
      return "integer";
  }
  return "?";
}

std::string_view to_string(Op op) {
  switch (op) {
    case Op::Constant:
      return "constant";
    case Op::Decision:
      return "decision";
    case Op::Group:
      return "group";
    case Op::Index:
      return "index";
    case Op::Slice:
      return "slice";
    case Op::Add:
      return "add";
    case Op::Sub:
      return "sub";
    case Op::Mul:
      return "mul";
    case Op::Neg:
      return "neg";
    case Op::Abs:
      return "abs";
    case Op::Sum:
      return "sum";
    case Op::Le:
      return "le";
    case Op::Ge:
      return "ge";
    case Op::Eq:
      return "eq";
  }
  return "?";
}

bool is_comparison(Op op) { return op == Op::Le || op == Op::Ge || op == Op::Eq; }

std::string Shape::str() const {
  std::ostringstream os;
  os << '(';
  if (rank >= 1) {
    if (dynamic) {
      os << '?';
    } else {
      os << dims[0];
    }
    os << (rank == 1 ? "," : ", ");
  }
  if (rank == 2) os << dims[1];
  os << ')';
  return os.str();
}

// --- DecisionSpec ---------------------------------------------------------

DecisionSpec DecisionSpec::list(std::size_t n) {
  return {DecisionKind::List, n, 1, 0, static_cast<std::int64_t>(n) - 1};
}
DecisionSpec DecisionSpec::set(std::size_t n) {
  return {DecisionKind::Set, n, 1, 0, static_cast<std::int64_t>(n) - 1};
}
DecisionSpec DecisionSpec::disjoint_lists(std::size_t n_vars,
                                          std::size_t n_lists) {
  return {DecisionKind::DisjointLists, n_vars, n_lists, 0,
          static_cast<std::int64_t>(n_vars) - 1};
}
DecisionSpec DecisionSpec::disjoint_bit_sets(std::size_t n_vars,
                                             std::size_t n_sets) {
  return {DecisionKind::DisjointBitSets, n_vars, n_sets, 0,
          static_cast<std::int64_t>(n_vars) - 1};
}
DecisionSpec DecisionSpec::binary(std::size_t n) {
  return {DecisionKind::Binary, n, 1, 0, 1};
}
DecisionSpec DecisionSpec::integer(std::size_t n, std::int64_t lower,
                                   std::int64_t upper) {
  return {DecisionKind::Integer, n, 1, lower, upper};
}

void DecisionSpec::validate() const {
  if (size < 1) {
    throw DomainError(std::string(to_string(kind)) +
                      " decision needs at least one element");
  }
  if (kind == DecisionKind::DisjointLists ||
      kind == DecisionKind::DisjointBitSets) {
    if (groups < 1 || groups > size) {
      throw DomainError(std::string(to_string(kind)) + " decision needs 1 <= " +
                        "groups <= n_vars, got groups=" +
                        std::to_string(groups) +
                        " n_vars=" + std::to_string(size));
    }
  } else if (groups != 1) {
    throw DomainError(std::string(to_string(kind)) +
                      " decision has exactly one group");
  }
  if (kind == DecisionKind::Integer && lower > upper) {
    throw DomainError("integer decision needs lower <= upper");
  }
}

std::size_t DecisionSpec::part_count() const {
  return (kind == DecisionKind::DisjointLists ||
          kind == DecisionKind::DisjointBitSets)
             ? groups
             : 1;
}

// --- State ----------------------------------------------------------------

std::uint64_t state_hash(const State& state) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& d : state.decisions) {
    mix(0xD0D0D0D0ULL);
    for (const auto& part : d.parts) {
      mix(part.size());
      for (auto v : part) mix(static_cast<std::uint64_t>(v));
    }
  }
  return h;
}

double Evaluation::total_violation() const {
  return std::accumulate(violations.begin(), violations.end(), 0.0);
}

// --- Model construction ----------------------------------------------------

void Model::check_mutable() const {
  if (frozen_) throw StateError("model is frozen");
}

void Model::check_node(NodeId id) const {
  if (id >= nodes_.size()) {
    throw DomainError("unknown node id " + std::to_string(id));
  }
}

const ExprNode& Model::node(NodeId id) const {
  check_node(id);
  return nodes_[id];
}

const ConstantArray& Model::constant(std::size_t slot) const {
  return constants_.at(slot);
}

NodeId Model::push(ExprNode node) {
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

DecisionRef Model::add_decision(const DecisionSpec& spec) {
  check_mutable();
  spec.validate();
  DecisionRef ref;
  ref.id = decisions_.size();
  decisions_.push_back(spec);

  ExprNode node;
  node.op = Op::Decision;
  node.payload = ref.id;
  node.integral = true;
  node.shape = Shape::vector(spec.size, spec.kind == DecisionKind::Set);
  ref.node = push(node);
  decision_nodes_.push_back(ref.node);

  if (spec.kind == DecisionKind::DisjointLists ||
      spec.kind == DecisionKind::DisjointBitSets) {
    for (std::size_t g = 0; g < spec.groups; ++g) {
      ExprNode group;
      group.op = Op::Group;
      group.operands = {ref.node};
      group.payload = g;
      group.integral = true;
      group.shape = spec.kind == DecisionKind::DisjointLists
                        ? Shape::vector(0, true)
                        : Shape::vector(spec.size);
      ref.groups.push_back(push(group));
    }
  }
  return ref;
}

NodeId Model::add_constant(double value) {
  return add_constant(std::span<const double>(&value, 1), 0, 0);
}

NodeId Model::add_constant(std::span<const double> values) {
  check_mutable();
  ConstantArray c{Shape::vector(values.size()), {values.begin(), values.end()}};
  for (double v : c.values) {
    if (!std::isfinite(v)) throw DomainError("constant contains NaN or inf");
  }
  ExprNode node;
  node.op = Op::Constant;
  node.shape = c.shape;
  node.payload = constants_.size();
  node.integral = std::all_of(c.values.begin(), c.values.end(), is_integer_value);
  constants_.push_back(std::move(c));
  return push(node);
}

// rows == cols == 0 encodes a scalar.
NodeId Model::add_constant(std::span<const double> values, std::size_t rows,
                           std::size_t cols) {
  check_mutable();
  Shape shape = (rows == 0 && cols == 0) ? Shape::scalar()
                                         : Shape::matrix(rows, cols);
  if (values.size() != element_count(shape)) {
    throw ShapeError("constant of shape " + shape.str() + " needs " +
                     std::to_string(element_count(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  ConstantArray c{shape, {values.begin(), values.end()}};
  for (double v : c.values) {
    if (!std::isfinite(v)) throw DomainError("constant contains NaN or inf");
  }
  ExprNode node;
  node.op = Op::Constant;
  node.shape = shape;
  node.payload = constants_.size();
  node.integral = std::all_of(c.values.begin(), c.values.end(), is_integer_value);
  constants_.push_back(std::move(c));
  return push(node);
}

NodeId Model::build(Op op, std::span<const NodeId> operands) {
  switch (op) {
    case Op::Neg:
    case Op::Abs:
    case Op::Sum:
      if (operands.size() != 1) {
        throw DomainError(std::string(to_string(op)) + " takes one operand");
      }
      return unary(op, operands[0]);
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Le:
    case Op::Ge:
    case Op::Eq:
      if (operands.size() != 2) {
        throw DomainError(std::string(to_string(op)) + " takes two operands");
      }
      return binary(op, operands[0], operands[1]);
    case Op::Index:
      if (operands.empty()) throw DomainError("index needs a base operand");
      return index(operands[0], operands.subspan(1));
    default:
      throw DomainError("build() does not construct " +
                        std::string(to_string(op)) + " nodes");
  }
}

NodeId Model::unary(Op op, NodeId a) {
  check_mutable();
  check_node(a);
  ExprNode node;
  node.op = op;
  node.operands = {a};
  node.integral = nodes_[a].integral;
  node.shape = op == Op::Sum ? Shape::scalar() : nodes_[a].shape;
  return push(node);
}

NodeId Model::binary(Op op, NodeId a, NodeId b) {
  check_mutable();
  check_node(a);
  check_node(b);
  const Shape& sa = nodes_[a].shape;
  const Shape& sb = nodes_[b].shape;
  Shape out;
  if (sa.rank == 0) {
    out = sb;
  } else if (sb.rank == 0) {
    out = sa;
  } else if (sa.rank != sb.rank) {
    throw ShapeError("cannot combine shapes " + sa.str() + " and " + sb.str());
  } else if (sa.dynamic || sb.dynamic) {
    // Lengths are checked at evaluation time.
    out = Shape::vector(0, true);
  } else if (sa.dims != sb.dims) {
    throw ShapeError("cannot combine shapes " + sa.str() + " and " + sb.str());
  } else {
    out = sa;
  }
  ExprNode node;
  node.op = op;
  node.operands = {a, b};
  node.shape = out;
  node.integral = is_comparison(op) || (nodes_[a].integral && nodes_[b].integral);
  return push(node);
}

NodeId Model::index(NodeId base, std::span<const NodeId> indexers) {
  check_mutable();
  check_node(base);
  const Shape& bs = nodes_[base].shape;
  if (bs.rank == 0) throw ShapeError("cannot index a scalar");
  if (indexers.size() != static_cast<std::size_t>(bs.rank)) {
    throw ShapeError("array of shape " + bs.str() + " needs " +
                     std::to_string(bs.rank) + " indexers, got " +
                     std::to_string(indexers.size()));
  }
  bool any_vector = false;
  bool dynamic = false;
  std::optional<std::size_t> length;
  for (NodeId ix : indexers) {
    check_node(ix);
    const ExprNode& n = nodes_[ix];
    if (!n.integral) {
      throw TypeErrorDomain("indexer node " + std::to_string(ix) +
                            " is not integer valued");
    }
    if (n.shape.rank > 1) throw ShapeError("indexers must be scalars or vectors");
    if (n.shape.rank == 1) {
      any_vector = true;
      if (n.shape.dynamic) {
        dynamic = true;
      } else if (length && *length != n.shape.dims[0]) {
        throw ShapeError("indexer lengths differ: " + std::to_string(*length) +
                         " vs " + std::to_string(n.shape.dims[0]));
      } else {
        length = n.shape.dims[0];
      }
    }
  }
  ExprNode node;
  node.op = Op::Index;
  node.operands.push_back(base);
  node.operands.insert(node.operands.end(), indexers.begin(), indexers.end());
  node.integral = nodes_[base].integral;
  if (!any_vector) {
    node.shape = Shape::scalar();
  } else if (dynamic) {
    node.shape = Shape::vector(0, true);
  } else {
    node.shape = Shape::vector(*length);
  }
  return push(node);
}

NodeId Model::slice(NodeId base, std::optional<std::int64_t> start,
                    std::optional<std::int64_t> stop) {
  check_mutable();
  check_node(base);
  const Shape& bs = nodes_[base].shape;
  if (bs.rank != 1) throw ShapeError("only vectors can be sliced, got " + bs.str());
  ExprNode node;
  node.op = Op::Slice;
  node.operands = {base};
  node.start = start;
  node.stop = stop;
  node.integral = nodes_[base].integral;
  if (bs.dynamic) {
    node.shape = Shape::vector(0, true);
  } else {
    auto [b, e] = resolve_slice(start, stop, bs.dims[0]);
    node.shape = Shape::vector(e - b);
  }
  return push(node);
}

ConstraintId Model::add_constraint(NodeId id) {
  check_mutable();
  check_node(id);
  if (!is_comparison(nodes_[id].op)) {
    throw TypeErrorDomain("constraint root must be a comparison, got " +
                          std::string(to_string(nodes_[id].op)));
  }
  constraints_.push_back(id);
  return constraints_.size() - 1;
}

void Model::minimize(NodeId id) {
  check_mutable();
  check_node(id);
  if (objective_) throw StateError("model already has an objective");
  if (nodes_[id].shape.rank != 0) {
    throw ShapeError("objective must be a scalar, got shape " +
                     nodes_[id].shape.str());
  }
  objective_ = id;
}

// --- Validation -------------------------------------------------------------

std::vector<std::string> Model::validate_state(const State& state) const {
  std::vector<std::string> out;
  if (state.decisions.size() != decisions_.size()) {
    out.push_back("expected " + std::to_string(decisions_.size()) +
                  " decision values, got " +
                  std::to_string(state.decisions.size()));
    return out;
  }
  for (std::size_t d = 0; d < decisions_.size(); ++d) {
    const DecisionSpec& spec = decisions_[d];
    const DecisionValue& value = state.decisions[d];
    const std::string tag = "decision " + std::to_string(d) + " (" +
                            std::string(to_string(spec.kind)) + "): ";
    if (value.parts.size() != spec.part_count()) {
      out.push_back(tag + "expected " + std::to_string(spec.part_count()) +
                    " parts, got " + std::to_string(value.parts.size()));
      continue;
    }
    const auto n = static_cast<std::int64_t>(spec.size);
    switch (spec.kind) {
      case DecisionKind::Binary:
      case DecisionKind::Integer: {
        const auto& v = value.parts[0];
        if (v.size() != spec.size) {
          out.push_back(tag + "expected " + std::to_string(spec.size) +
                        " values, got " + std::to_string(v.size()));
          break;
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (v[i] < spec.lower || v[i] > spec.upper) {
            out.push_back(tag + "value " + std::to_string(v[i]) +
                          " at position " + std::to_string(i) +
                          " outside [" + std::to_string(spec.lower) + ", " +
                          std::to_string(spec.upper) + "]");
          }
        }
        break;
      }
      case DecisionKind::Set: {
        const auto& v = value.parts[0];
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (v[i] < 0 || v[i] >= n) {
            out.push_back(tag + "index " + std::to_string(v[i]) +
                          " out of range [0, " + std::to_string(n) + ")");
          } else if (i > 0 && v[i] == v[i - 1]) {
            out.push_back(tag + "duplicate index " + std::to_string(v[i]));
          } else if (i > 0 && v[i] < v[i - 1]) {
            out.push_back(tag + "elements not strictly increasing");
          }
        }
        break;
      }
      case DecisionKind::List:
      case DecisionKind::DisjointLists:
      case DecisionKind::DisjointBitSets: {
        std::vector<int> seen(spec.size, 0);
        for (const auto& part : value.parts) {
          for (std::size_t i = 0; i < part.size(); ++i) {
            auto e = part[i];
            if (e < 0 || e >= n) {
              out.push_back(tag + "index " + std::to_string(e) +
                            " out of range [0, " + std::to_string(n) + ")");
              continue;
            }
            if (spec.kind == DecisionKind::DisjointBitSets && i > 0 &&
                e < part[i - 1]) {
              out.push_back(tag + "set elements not strictly increasing");
            }
            if (seen[static_cast<std::size_t>(e)]++ == 1) {
              out.push_back(tag + "duplicate index " + std::to_string(e));
            }
          }
        }
        for (std::size_t e = 0; e < spec.size; ++e) {
          if (seen[e] == 0) {
            out.push_back(tag + "not exhaustive: missing element " +
                          std::to_string(e));
          }
        }
        break;
      }
    }
  }
  return out;
}

Evaluation Model::evaluate(const State& state) const {
  auto problems = validate_state(state);
  if (!problems.empty()) {
    std::string msg = "invalid state: " + problems.front();
    if (problems.size() > 1) {
      msg += " (+" + std::to_string(problems.size() - 1) + " more)";
    }
    throw StateError(msg);
  }
  Evaluator evaluator(*this);
  return evaluator(state);
}

// --- Evaluator ---------------------------------------------------------------

Evaluator::Evaluator(const Model& model) : model_(&model) {
  const auto& nodes = model.nodes();
  buffers_.resize(nodes.size());
  for (NodeId id = 0; id < nodes.size(); ++id) {
    if (nodes[id].op == Op::Constant) {
      const auto& c = model.constant(nodes[id].payload);
      Buffer& b = buffers_[id];
      b.rank = c.shape.rank;
      b.rows = c.shape.dims[0];
      b.cols = c.shape.dims[1];
      b.data = c.values;
    }
  }
}

const Evaluation& Evaluator::operator()(const State& state) {
  const auto& nodes = model_->nodes();
  for (NodeId id = 0; id < nodes.size(); ++id) {
    if (nodes[id].op != Op::Constant) eval_node(id, state);
  }
  const auto& constraints = model_->constraints();
  result_.constraint_results.assign(constraints.size(), true);
  result_.violations.assign(constraints.size(), 0.0);
  result_.feasible = true;
  for (std::size_t c = 0; c < constraints.size(); ++c) {
    const ExprNode& node = nodes[constraints[c]];
    const Buffer& a = buffers_[node.operands[0]];
    const Buffer& b = buffers_[node.operands[1]];
    const std::size_t len = std::max(a.data.size(), b.data.size());
    double violation = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      double x = a.data.size() == 1 ? a.data[0] : a.data[i];
      double y = b.data.size() == 1 ? b.data[0] : b.data[i];
      switch (node.op) {
        case Op::Le:
          violation += std::max(0.0, x - y);
          break;
        case Op::Ge:
          violation += std::max(0.0, y - x);
          break;
        default:
          violation += std::abs(x - y);
          break;
      }
    }
    result_.violations[c] = violation;
    result_.constraint_results[c] = violation == 0.0;
    result_.feasible = result_.feasible && violation == 0.0;
  }
  if (auto obj = model_->objective()) {
    result_.objective = buffers_[*obj].data[0];
  } else {
    result_.objective = 0.0;
  }
  return result_;
}

void Evaluator::eval_node(NodeId id, const State& state) {
  const ExprNode& node = model_->nodes()[id];
  Buffer& out = buffers_[id];
  auto set_vector = [&out](std::size_t n) {
    out.rank = 1;
    out.rows = n;
    out.cols = 0;
    out.data.resize(n);
  };

  switch (node.op) {
    case Op::Constant:
      return;

    case Op::Decision: {
      const DecisionSpec& spec = model_->decisions()[node.payload];
      const DecisionValue& value = state.decisions[node.payload];
      if (spec.kind == DecisionKind::DisjointLists ||
          spec.kind == DecisionKind::DisjointBitSets) {
        // Per-element label: index of the list/set holding the element.
        set_vector(spec.size);
        for (std::size_t g = 0; g < value.parts.size(); ++g) {
          for (auto e : value.parts[g]) {
            out.data[static_cast<std::size_t>(e)] = static_cast<double>(g);
          }
        }
      } else {
        const auto& v = value.parts[0];
        set_vector(v.size());
        std::transform(v.begin(), v.end(), out.data.begin(),
                       [](std::int64_t x) { return static_cast<double>(x); });
      }
      return;
    }

    case Op::Group: {
      const ExprNode& dnode = model_->nodes()[node.operands[0]];
      const DecisionSpec& spec = model_->decisions()[dnode.payload];
      const auto& part = state.decisions[dnode.payload].parts[node.payload];
      if (spec.kind == DecisionKind::DisjointLists) {
        set_vector(part.size());
        std::transform(part.begin(), part.end(), out.data.begin(),
                       [](std::int64_t x) { return static_cast<double>(x); });
      } else {
        set_vector(spec.size);
        std::fill(out.data.begin(), out.data.end(), 0.0);
        for (auto e : part) out.data[static_cast<std::size_t>(e)] = 1.0;
      }
      return;
    }

    case Op::Index: {
      const Buffer& base = buffers_[node.operands[0]];
      const std::size_t n_ix = node.operands.size() - 1;
      std::size_t length = 0;
      bool vector_out = false;
      for (std::size_t k = 0; k < n_ix; ++k) {
        const Buffer& ix = buffers_[node.operands[k + 1]];
        if (ix.rank == 1) {
          if (vector_out && ix.data.size() != length) {
            throw ShapeError("indexer lengths differ at evaluation: " +
                             std::to_string(length) + " vs " +
                             std::to_string(ix.data.size()));
          }
          vector_out = true;
          length = ix.data.size();
        }
      }
      if (!vector_out) length = 1;
      const std::array<std::size_t, 2> dims{base.rows, base.cols};
      auto fetch = [&](std::size_t k, std::size_t t) {
        const Buffer& ix = buffers_[node.operands[k + 1]];
        double raw = ix.rank == 1 ? ix.data[t] : ix.data[0];
        auto dim = static_cast<std::int64_t>(dims[k]);
        auto v = static_cast<std::int64_t>(raw);
        if (v < 0) v += dim;
        if (v < 0 || v >= dim) {
          throw ShapeError("index " + std::to_string(static_cast<std::int64_t>(raw)) +
                           " out of range for dimension of size " +
                           std::to_string(dim));
        }
        return static_cast<std::size_t>(v);
      };
      // Operands precede the node, so out never aliases base or indexers.
      out.data.resize(length);
      for (std::size_t t = 0; t < length; ++t) {
        if (base.rank == 1) {
          out.data[t] = base.data[fetch(0, t)];
        } else {
          out.data[t] = base.data[fetch(0, t) * base.cols + fetch(1, t)];
        }
      }
      out.rank = vector_out ? 1 : 0;
      out.rows = vector_out ? length : 0;
      out.cols = 0;
      return;
    }

    case Op::Slice: {
      const Buffer& base = buffers_[node.operands[0]];
      auto [b, e] = resolve_slice(node.start, node.stop, base.data.size());
      set_vector(e - b);
      std::copy(base.data.begin() + static_cast<std::ptrdiff_t>(b),
                base.data.begin() + static_cast<std::ptrdiff_t>(e),
                out.data.begin());
      return;
    }

    case Op::Neg:
    case Op::Abs: {
      const Buffer& a = buffers_[node.operands[0]];
      out.rank = a.rank;
      out.rows = a.rows;
      out.cols = a.cols;
      out.data.resize(a.data.size());
      for (std::size_t i = 0; i < a.data.size(); ++i) {
        out.data[i] = node.op == Op::Neg ? -a.data[i] : std::abs(a.data[i]);
      }
      return;
    }

    case Op::Sum: {
      const Buffer& a = buffers_[node.operands[0]];
      double total = std::accumulate(a.data.begin(), a.data.end(), 0.0);
      out.rank = 0;
      out.rows = out.cols = 0;
      out.data.assign(1, total);
      return;
    }

    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Le:
    case Op::Ge:
    case Op::Eq: {
      const Buffer& a = buffers_[node.operands[0]];
      const Buffer& b = buffers_[node.operands[1]];
      const Buffer& shape_src = a.rank == 0 ? b : a;
      if (a.rank != 0 && b.rank != 0 && a.data.size() != b.data.size()) {
        throw ShapeError("operand lengths differ at evaluation: " +
                         std::to_string(a.data.size()) + " vs " +
                         std::to_string(b.data.size()));
      }
      const std::size_t len = shape_src.data.size();
      std::vector<double>& result = out.data;
      result.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        double x = a.rank == 0 ? a.data[0] : a.data[i];
        double y = b.rank == 0 ? b.data[0] : b.data[i];
        switch (node.op) {
          case Op::Add:
            result[i] = x + y;
            break;
          case Op::Sub:
            result[i] = x - y;
            break;
          case Op::Mul:
            result[i] = x * y;
            break;
          case Op::Le:
            result[i] = x <= y ? 1.0 : 0.0;
            break;
          case Op::Ge:
            result[i] = x >= y ? 1.0 : 0.0;
            break;
          default:
            result[i] = x == y ? 1.0 : 0.0;
            break;
        }
      }
      out.rank = shape_src.rank;
      out.rows = shape_src.rows;
      out.cols = shape_src.cols;
      return;
    }
  }
}

// --- Expr ------------------------------------------------------------------

Expr Expr::at(std::initializer_list<Expr> indexers) const {
  std::vector<NodeId> ids;
  for (const auto& e : indexers) ids.push_back(e.id());
  return {*model_, model_->index(id_, ids)};
}

Expr Expr::at(std::int64_t i) const {
  NodeId c = model_->add_constant(static_cast<double>(i));
  std::array<NodeId, 1> ids{c};
  return {*model_, model_->index(id_, ids)};
}

Expr Expr::slice(std::optional<std::int64_t> start,
                 std::optional<std::int64_t> stop) const {
  return {*model_, model_->slice(id_, start, stop)};
}

Expr operator+(const Expr& a, const Expr& b) { return {a.model(), a.model().add(a.id(), b.id())}; }
Expr operator-(const Expr& a, const Expr& b) { return {a.model(), a.model().sub(a.id(), b.id())}; }
Expr operator*(const Expr& a, const Expr& b) { return {a.model(), a.model().mul(a.id(), b.id())}; }
Expr operator-(const Expr& a) { return {a.model(), a.model().neg(a.id())}; }
Expr operator<=(const Expr& a, const Expr& b) { return {a.model(), a.model().le(a.id(), b.id())}; }
Expr operator>=(const Expr& a, const Expr& b) { return {a.model(), a.model().ge(a.id(), b.id())}; }
Expr operator==(const Expr& a, const Expr& b) { return {a.model(), a.model().eq(a.id(), b.id())}; }

}  // namespace combopt
