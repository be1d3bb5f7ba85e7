#include "combopt/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

namespace combopt {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double sa_energy(const Evaluation& e, double penalty) {
  return e.objective + penalty * e.total_violation();
}

std::uint64_t attribute_key(DecisionId d, std::uint64_t tag, std::int64_t x,
                            std::int64_t y) {
  std::uint64_t h = Rng::derive(d, tag);
  h = Rng::derive(h, static_cast<std::uint64_t>(x));
  return Rng::derive(h, static_cast<std::uint64_t>(y));
}

void insert_sorted(std::vector<std::int64_t>& v, std::int64_t e) {
  v.insert(std::lower_bound(v.begin(), v.end(), e), e);
}

void erase_value(std::vector<std::int64_t>& v, std::int64_t e) {
  v.erase(std::find(v.begin(), v.end(), e));
}

}  // namespace

std::string_view to_string(CmKind kind) {
  return kind == CmKind::SimulatedAnnealing ? "sa" : "tabu";
}

CmKind parse_cm_kind(std::string_view text) {
  if (text == "sa" || text == "simulated_annealing") return CmKind::SimulatedAnnealing;
  if (text == "tabu" || text == "tabu_search") return CmKind::TabuSearch;
  throw DomainError("unknown CM kind '" + std::string(text) + "'");
}

void SolverConfig::validate() const {
  if (time_limit && !(*time_limit > 0.0 && std::isfinite(*time_limit))) {
    throw DomainError("time_limit must be positive");
  }
  if (n_branches && *n_branches < 1) throw DomainError("n_branches must be >= 1");
  if (qm_period < 1) throw DomainError("qm_period must be >= 1");
  if (qm_window < 1) throw DomainError("qm_window must be >= 1");
  if (tabu_candidates < 1) throw DomainError("tabu_candidates must be >= 1");
  if (stagnation_limit < 1) throw DomainError("stagnation_limit must be >= 1");
}

SolverConfig resolve_config(const SolverConfig& config, const Model& model) {
  config.validate();
  SolverConfig out = config;
  if (!out.time_limit) {
    std::size_t total = 0;
    for (const auto& d : model.decisions()) total += d.size;
    out.time_limit = std::max(5.0, static_cast<double>(total) / 20.0);
  }
  if (!out.n_branches) {
    std::size_t hw = std::max(1U, std::thread::hardware_concurrency());
    out.n_branches = std::min<std::size_t>(hw, 8);
  }
  return out;
}

std::partial_ordering compare(const Evaluation& a, const Evaluation& b) {
  if (a.feasible != b.feasible) {
    return a.feasible ? std::partial_ordering::less : std::partial_ordering::greater;
  }
  if (!a.feasible) {
    double va = a.total_violation();
    double vb = b.total_violation();
    if (va < vb) return std::partial_ordering::less;
    if (va > vb) return std::partial_ordering::greater;
  }
  return a.objective <=> b.objective;
}

std::strong_ordering compare(const Evaluation& a, std::uint64_t hash_a,
                             const Evaluation& b, std::uint64_t hash_b) {
  auto po = compare(a, b);
  if (po == std::partial_ordering::less) return std::strong_ordering::less;
  if (po == std::partial_ordering::greater) return std::strong_ordering::greater;
  return hash_a <=> hash_b;
}

// --- Neighborhood ------------------------------------------------------------------

State initial_state(const Model& model, Rng& rng) {
  State state;
  for (const auto& spec : model.decisions()) {
    DecisionValue value;
    const std::size_t n = spec.size;
    switch (spec.kind) {
      case DecisionKind::List: {
        std::vector<std::int64_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        value.parts = {std::move(perm)};
        break;
      }
      case DecisionKind::Set: {
        std::vector<std::int64_t> items;
        for (std::size_t i = 0; i < n; ++i) {
          if (rng.bernoulli(0.5)) items.push_back(static_cast<std::int64_t>(i));
        }
        value.parts = {std::move(items)};
        break;
      }
      case DecisionKind::DisjointLists:
      case DecisionKind::DisjointBitSets: {
        std::vector<std::int64_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        value.parts.assign(spec.groups, {});
        for (std::size_t i = 0; i < n; ++i) {
          value.parts[i % spec.groups].push_back(order[i]);
        }
        if (spec.kind == DecisionKind::DisjointBitSets) {
          for (auto& p : value.parts) std::sort(p.begin(), p.end());
        }
        break;
      }
      case DecisionKind::Binary: {
        std::vector<std::int64_t> bits(n);
        for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
        value.parts = {std::move(bits)};
        break;
      }
      case DecisionKind::Integer: {
        std::vector<std::int64_t> v(n);
        for (auto& x : v) x = rng.between(spec.lower, spec.upper);
        value.parts = {std::move(v)};
        break;
      }
    }
    state.decisions.push_back(std::move(value));
  }
  return state;
}

namespace {

std::pair<std::int64_t, std::int64_t> distinct_pair(std::size_t n, Rng& rng) {
  auto i = static_cast<std::int64_t>(rng.below(n));
  auto j = static_cast<std::int64_t>(rng.below(n - 1));
  if (j >= i) ++j;
  return {i, j};
}

std::optional<Move> list_move(DecisionId d, std::size_t n, Rng& rng) {
  if (n < 2) return std::nullopt;
  Move m{d, MoveKind::Swap, 0, 0, 0, 0};
  const double r = rng.uniform();
  if (r < 0.1) {
    m.a = static_cast<std::int64_t>(rng.below(n - 1));
    m.b = m.a + 1;
  } else if (r < 0.3) {
    std::tie(m.a, m.b) = distinct_pair(n, rng);
  } else if (r < 0.7) {
    m.kind = MoveKind::Reverse;
    std::tie(m.a, m.b) = distinct_pair(n, rng);
    if (m.a > m.b) std::swap(m.a, m.b);
  } else {
    m.kind = MoveKind::Insert;
    std::tie(m.a, m.b) = distinct_pair(n, rng);
  }
  return m;
}

std::optional<Move> set_move(DecisionId d, std::size_t n,
                             const std::vector<std::int64_t>& items, Rng& rng) {
  const std::size_t m = items.size();
  enum { Add, Drop, SwapIO } pick = static_cast<decltype(Add)>(rng.below(3));
  if (m == 0) pick = Add;
  if (m == n) pick = Drop;
  Move mv{d, MoveKind::Add, 0, 0, 0, 0};
  auto random_outside = [&]() {
    std::vector<char> in(n, 0);
    for (auto e : items) in[static_cast<std::size_t>(e)] = 1;
    std::size_t k = rng.below(n - m);
    for (std::size_t e = 0; e < n; ++e) {
      if (!in[e] && k-- == 0) return static_cast<std::int64_t>(e);
    }
    return std::int64_t{-1};
  };
  switch (pick) {
    case Add:
      mv.kind = MoveKind::Add;
      mv.a = random_outside();
      break;
    case Drop:
      mv.kind = MoveKind::Drop;
      mv.a = items[rng.below(m)];
      break;
    case SwapIO:
      mv.kind = MoveKind::SwapInOut;
      mv.a = items[rng.below(m)];
      mv.b = random_outside();
      break;
  }
  return mv;
}

std::optional<Move> disjoint_move(DecisionId d, const DecisionSpec& spec,
                                  const DecisionValue& value, Rng& rng) {
  const std::size_t k = value.parts.size();
  std::vector<std::size_t> nonempty;
  std::vector<std::size_t> long_parts;
  for (std::size_t p = 0; p < k; ++p) {
    if (!value.parts[p].empty()) nonempty.push_back(p);
    if (value.parts[p].size() >= 2) long_parts.push_back(p);
  }
  std::vector<MoveKind> kinds;
  if (k >= 2 && !nonempty.empty()) kinds.push_back(MoveKind::Transfer);
  if (nonempty.size() >= 2) kinds.push_back(MoveKind::Exchange);
  if (spec.kind == DecisionKind::DisjointLists && !long_parts.empty()) {
    kinds.push_back(MoveKind::ReverseInPart);
  }
  if (kinds.empty()) return std::nullopt;
  Move m{d, kinds[rng.below(kinds.size())], 0, 0, 0, 0};
  switch (m.kind) {
    case MoveKind::Transfer: {
      m.part_a = nonempty[rng.below(nonempty.size())];
      m.part_b = rng.below(k - 1);
      if (m.part_b >= m.part_a) ++m.part_b;
      m.a = static_cast<std::int64_t>(rng.below(value.parts[m.part_a].size()));
      m.b = static_cast<std::int64_t>(rng.below(value.parts[m.part_b].size() + 1));
      break;
    }
    case MoveKind::Exchange: {
      auto [i, j] = distinct_pair(nonempty.size(), rng);
      m.part_a = nonempty[static_cast<std::size_t>(i)];
      m.part_b = nonempty[static_cast<std::size_t>(j)];
      m.a = static_cast<std::int64_t>(rng.below(value.parts[m.part_a].size()));
      m.b = static_cast<std::int64_t>(rng.below(value.parts[m.part_b].size()));
      break;
    }
    default: {
      m.part_a = long_parts[rng.below(long_parts.size())];
      std::tie(m.a, m.b) = distinct_pair(value.parts[m.part_a].size(), rng);
      if (m.a > m.b) std::swap(m.a, m.b);
      break;
    }
  }
  return m;
}

}  // namespace

std::optional<Move> random_move(const Model& model, const State& state,
                                DecisionId decision, Rng& rng) {
  const DecisionSpec& spec = model.decisions().at(decision);
  const DecisionValue& value = state.decisions.at(decision);
  switch (spec.kind) {
    case DecisionKind::List:
      return list_move(decision, spec.size, rng);
    case DecisionKind::Set:
      return set_move(decision, spec.size, value.parts[0], rng);
    case DecisionKind::Binary:
      return Move{decision, MoveKind::Flip, 0, 0,
                  static_cast<std::int64_t>(rng.below(spec.size)), 0};
    case DecisionKind::Integer: {
      if (spec.lower == spec.upper) return std::nullopt;
      auto i = rng.below(spec.size);
      auto v = rng.between(spec.lower, spec.upper - 1);
      if (v >= value.parts[0][i]) ++v;
      return Move{decision, MoveKind::SetValue, 0, 0, static_cast<std::int64_t>(i), v};
    }
    case DecisionKind::DisjointLists:
    case DecisionKind::DisjointBitSets:
      return disjoint_move(decision, spec, value, rng);
  }
  return std::nullopt;
}

std::optional<Move> random_move(const Model& model, const State& state, Rng& rng) {
  const auto& decisions = model.decisions();
  if (decisions.empty()) return std::nullopt;
  std::size_t total = 0;
  for (const auto& d : decisions) total += d.size;
  std::size_t pick = rng.below(total);
  std::size_t first = 0;
  for (; first < decisions.size(); ++first) {
    if (pick < decisions[first].size) break;
    pick -= decisions[first].size;
  }
  for (std::size_t k = 0; k < decisions.size(); ++k) {
    DecisionId d = (first + k) % decisions.size();
    if (auto m = random_move(model, state, d, rng)) return m;
  }
  return std::nullopt;
}

void apply_move(const Model& model, State& state, const Move& m) {
  const DecisionSpec& spec = model.decisions().at(m.decision);
  auto& parts = state.decisions.at(m.decision).parts;
  auto& v = parts[0];
  const auto a = static_cast<std::size_t>(m.a);
  const auto b = static_cast<std::size_t>(m.b);
  switch (m.kind) {
    case MoveKind::Swap:
      std::swap(v[a], v[b]);
      break;
    case MoveKind::Reverse:
      std::reverse(v.begin() + m.a, v.begin() + m.b + 1);
      break;
    case MoveKind::Insert: {
      auto e = v[a];
      v.erase(v.begin() + m.a);
      v.insert(v.begin() + m.b, e);
      break;
    }
    case MoveKind::Add:
      insert_sorted(v, m.a);
      break;
    case MoveKind::Drop:
      erase_value(v, m.a);
      break;
    case MoveKind::SwapInOut:
      erase_value(v, m.a);
      insert_sorted(v, m.b);
      break;
    case MoveKind::Flip:
      v[a] ^= 1;
      break;
    case MoveKind::SetValue:
      v[a] = m.b;
      break;
    case MoveKind::Transfer: {
      auto& src = parts[m.part_a];
      auto& dst = parts[m.part_b];
      auto e = src[a];
      src.erase(src.begin() + m.a);
      if (spec.kind == DecisionKind::DisjointBitSets) {
        insert_sorted(dst, e);
      } else {
        dst.insert(dst.begin() + std::min<std::int64_t>(m.b, static_cast<std::int64_t>(dst.size())), e);
      }
      break;
    }
    case MoveKind::Exchange: {
      auto& pa = parts[m.part_a];
      auto& pb = parts[m.part_b];
      std::swap(pa[a], pb[b]);
      if (spec.kind == DecisionKind::DisjointBitSets) {
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
      }
      break;
    }
    case MoveKind::ReverseInPart: {
      auto& p = parts[m.part_a];
      std::reverse(p.begin() + m.a, p.begin() + m.b + 1);
      break;
    }
  }
}

std::vector<std::uint64_t> move_attributes(const State& state, const Move& m) {
  constexpr std::uint64_t kElem = 1;
  constexpr std::uint64_t kPair = 2;
  const auto& parts = state.decisions.at(m.decision).parts;
  const auto& v = parts[0];
  auto pair = [&](std::int64_t x, std::int64_t y) {
    return attribute_key(m.decision, kPair, std::min(x, y), std::max(x, y));
  };
  auto elem = [&](std::int64_t x) { return attribute_key(m.decision, kElem, x, 0); };
  const auto a = static_cast<std::size_t>(m.a);
  const auto b = static_cast<std::size_t>(m.b);
  switch (m.kind) {
    case MoveKind::Swap:
    case MoveKind::Reverse:
      return {pair(v[a], v[b])};
    case MoveKind::Insert:
      return {elem(v[a])};
    case MoveKind::Add:
    case MoveKind::Drop:
      return {elem(m.a)};
    case MoveKind::SwapInOut:
      return {elem(m.a), elem(m.b)};
    case MoveKind::Flip:
    case MoveKind::SetValue:
      return {elem(m.a)};
    case MoveKind::Transfer:
      return {elem(parts[m.part_a][a])};
    case MoveKind::Exchange:
      return {pair(parts[m.part_a][a], parts[m.part_b][b])};
    case MoveKind::ReverseInPart:
      return {pair(parts[m.part_a][a], parts[m.part_a][b])};
  }
  return {};
}


// --- Branch machinery -------------------------------------------------------------

namespace {

void update_best(BranchState& br) {
  if (compare(br.current_eval, br.best_eval) == std::partial_ordering::less) {
    br.best = br.current;
    br.best_eval = br.current_eval;
    br.best_hash = br.current_hash;
    br.improved = true;
    br.last_improvement = br.iteration;
  }
}

}  // namespace

BranchState make_branch(const Model& model, Evaluator& evaluator,
                        std::size_t index, std::uint64_t seed) {
  BranchState br;
  br.index = index;
  br.rng = Rng(Rng::derive(seed, index));
  br.current = initial_state(model, br.rng);
  br.current_eval = evaluator(br.current);
  br.current_hash = state_hash(br.current);
  br.scratch = br.current;
  br.best = br.current;
  br.best_eval = br.current_eval;
  br.best_hash = br.current_hash;
  return br;
}

Schedule make_schedule(const Model& model, Evaluator& evaluator,
                       BranchState& br, std::uint64_t budget) {
  constexpr int kProbes = 100;
  std::vector<double> d_obj;
  std::vector<double> d_viol;
  State& probe = br.scratch;
  for (int k = 0; k < kProbes; ++k) {
    auto m = random_move(model, probe, br.rng);
    if (!m) break;
    apply_move(model, probe, *m);
    const Evaluation& e = evaluator(probe);
    d_obj.push_back(std::abs(e.objective - br.current_eval.objective));
    d_viol.push_back(std::abs(e.total_violation() - br.current_eval.total_violation()));
    probe.decisions[m->decision] = br.current.decisions[m->decision];
  }
  Schedule s;
  s.budget = std::max<std::uint64_t>(budget, 1);
  if (!d_obj.empty()) {
    const double mean_obj =
        std::accumulate(d_obj.begin(), d_obj.end(), 0.0) / static_cast<double>(d_obj.size());
    double viol_sum = 0.0;
    std::size_t viol_count = 0;
    for (double v : d_viol) {
      if (v > 0) {
        viol_sum += v;
        ++viol_count;
      }
    }
    // One unit of violation outweighs twice the typical objective swing.
    if (viol_count > 0) {
      s.penalty = std::max(1.0, 2.0 * mean_obj / (viol_sum / static_cast<double>(viol_count)));
    }
    double t0 = 0.0;
    for (std::size_t k = 0; k < d_obj.size(); ++k) t0 += d_obj[k] + s.penalty * d_viol[k];
    t0 /= static_cast<double>(d_obj.size());
    if (t0 > 0.0) s.t0 = t0;
  }
  s.alpha = std::pow(s.t_floor_ratio, 1.0 / static_cast<double>(s.budget));
  br.temperature = s.t0;
  return s;
}

void cm_step(BranchState& br, Evaluator& evaluator, const Schedule& schedule,
             CmKind kind, std::size_t tabu_candidates) {
  const Model& model = evaluator.model();
  ++br.iteration;
  br.improved = false;
  State& cand = br.scratch;

  if (kind == CmKind::SimulatedAnnealing) {
    if (auto m = random_move(model, br.current, br.rng)) {
      apply_move(model, cand, *m);
      Evaluation e = evaluator(cand);
      bool accept = true;
      if (compare(e, br.current_eval) == std::partial_ordering::greater) {
        const double cur = sa_energy(br.current_eval, schedule.penalty);
        // Worse under compare() always costs something, whatever the
        // penalized energy says.
        const double delta = std::max(sa_energy(e, schedule.penalty) - cur,
                                      1e-12 * (1.0 + std::abs(cur)));
        accept = br.temperature > 0.0 &&
                 br.rng.uniform() < std::exp(-delta / br.temperature);
      }
      if (accept) {
        std::swap(br.current, cand);
        br.current_eval = std::move(e);
        br.current_hash = state_hash(br.current);
      }
      cand.decisions[m->decision] = br.current.decisions[m->decision];
    }
    br.temperature *= schedule.alpha;
  } else {
    std::optional<Move> chosen;
    Evaluation chosen_eval;
    for (std::size_t c = 0; c < tabu_candidates; ++c) {
      auto m = random_move(model, br.current, br.rng);
      if (!m) break;
      apply_move(model, cand, *m);
      Evaluation e = evaluator(cand);
      cand.decisions[m->decision] = br.current.decisions[m->decision];
      bool tabu = false;
      for (auto key : move_attributes(br.current, *m)) {
        auto it = br.tabu.find(key);
        if (it != br.tabu.end() && it->second > br.iteration) tabu = true;
      }
      const bool aspiration = compare(e, br.best_eval) == std::partial_ordering::less;
      if (tabu && !aspiration) continue;
      if (!chosen || compare(e, chosen_eval) == std::partial_ordering::less) {
        chosen = m;
        chosen_eval = std::move(e);
      }
    }
    if (chosen) {
      const std::size_t n = model.decisions()[chosen->decision].size;
      const std::uint64_t tenure = 5 + br.rng.below(std::max<std::size_t>(1, n / 4) + 1);
      for (auto key : move_attributes(br.current, *chosen)) {
        br.tabu[key] = br.iteration + tenure;
      }
      apply_move(model, br.current, *chosen);
      cand.decisions[chosen->decision] = br.current.decisions[chosen->decision];
      br.current_eval = std::move(chosen_eval);
      br.current_hash = state_hash(br.current);
    }
    if (br.iteration % 1024 == 0) {
      std::erase_if(br.tabu, [&](const auto& kv) { return kv.second <= br.iteration; });
    }
  }
  update_best(br);
}

// --- QM ------------------------------------------------------------------------------

std::optional<NodeId> find_tour_matrix(const Model& model, DecisionId decision) {
  const auto& spec = model.decisions().at(decision);
  if (spec.kind != DecisionKind::List) return std::nullopt;
  const NodeId dn = model.decision_nodes()[decision];
  const auto& nodes = model.nodes();
  for (const ExprNode& n : nodes) {
    if (n.op != Op::Index || n.operands.size() != 3) continue;
    const ExprNode& base = nodes[n.operands[0]];
    if (base.op != Op::Constant || base.shape.rank != 2 ||
        base.shape.dims[0] != spec.size || base.shape.dims[1] != spec.size) {
      continue;
    }
    const ExprNode& i = nodes[n.operands[1]];
    const ExprNode& j = nodes[n.operands[2]];
    if (i.op == Op::Slice && j.op == Op::Slice && i.operands[0] == dn &&
        j.operands[0] == dn) {
      return n.operands[0];
    }
  }
  return std::nullopt;
}

namespace {

std::optional<QmQuery> value_query(const Model& model, Evaluator& evaluator,
                                   const State& incumbent, DecisionId decision,
                                   std::size_t w, double penalty, Rng& rng) {
  const DecisionSpec& spec = model.decisions()[decision];
  const std::size_t n = spec.size;
  QmQuery q;
  q.decision = decision;
  q.kind = spec.kind;
  q.encoding = QmQuery::Encoding::Value;
  std::vector<std::int64_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t k = 0; k < w; ++k) std::swap(all[k], all[k + rng.below(n - k)]);
  q.elements.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(w));
  std::sort(q.elements.begin(), q.elements.end());

  q.base = incumbent;
  auto& part = q.base.decisions[decision].parts[0];
  if (spec.kind == DecisionKind::Binary) {
    for (auto e : q.elements) part[static_cast<std::size_t>(e)] = 0;
  } else {
    std::erase_if(part, [&](std::int64_t e) {
      return std::binary_search(q.elements.begin(), q.elements.end(), e);
    });
  }

  // Energies at the base, single and pair activations determine every
  // coefficient of a quadratic energy.
  State probe = q.base;
  auto& probe_part = probe.decisions[decision].parts[0];
  const auto& base_part = q.base.decisions[decision].parts[0];
  auto activate = [&](std::int64_t e) {
    if (spec.kind == DecisionKind::Binary) {
      probe_part[static_cast<std::size_t>(e)] = 1;
    } else {
      insert_sorted(probe_part, e);
    }
  };
  auto energy = [&]() { return sa_energy(evaluator(probe), penalty); };
  const double e0 = energy();
  std::vector<double> single(w);
  for (std::size_t k = 0; k < w; ++k) {
    activate(q.elements[k]);
    single[k] = energy();
    probe_part = base_part;
  }
  q.qubo = Qubo(w);
  q.qubo.add_offset(e0);
  for (std::size_t k = 0; k < w; ++k) {
    q.qubo.add(k, k, single[k] - e0);
    for (std::size_t l = k + 1; l < w; ++l) {
      activate(q.elements[k]);
      activate(q.elements[l]);
      const double pair = energy();
      probe_part = base_part;
      q.qubo.add(k, l, pair - single[k] - single[l] + e0);
    }
  }
  return q;
}

std::optional<QmQuery> placement_query(const Model& model, const State& incumbent,
                                       DecisionId decision, std::size_t w, Rng& rng) {
  auto matrix_node = find_tour_matrix(model, decision);
  if (!matrix_node) return std::nullopt;
  const std::size_t n = model.decisions()[decision].size;
  const auto& cm = model.constant(model.node(*matrix_node).payload).values;
  auto cost = [&](std::int64_t u, std::int64_t v) {
    return cm[static_cast<std::size_t>(u) * n + static_cast<std::size_t>(v)];
  };

  QmQuery q;
  q.decision = decision;
  q.kind = DecisionKind::List;
  q.encoding = QmQuery::Encoding::Placement;
  q.base = incumbent;
  const auto& perm = incumbent.decisions[decision].parts[0];
  const std::size_t start = rng.below(n);
  for (std::size_t k = 0; k < w; ++k) {
    q.positions.push_back((start + k) % n);
    q.elements.push_back(perm[q.positions.back()]);
  }
  auto var = [w](std::size_t k, std::size_t p) { return k * w + p; };

  Qubo objective(w * w);
  const std::size_t inner_edges = w == n ? w : w - 1;  // whole tour: cyclic
  for (std::size_t p = 0; p < inner_edges; ++p) {
    const std::size_t next = (p + 1) % w;
    for (std::size_t k = 0; k < w; ++k) {
      for (std::size_t l = 0; l < w; ++l) {
        if (k != l) objective.add(var(k, p), var(l, next), cost(q.elements[k], q.elements[l]));
      }
    }
  }
  if (w < n) {
    const auto prev = perm[(start + n - 1) % n];
    const auto after = perm[(start + w) % n];
    for (std::size_t k = 0; k < w; ++k) {
      objective.add(var(k, 0), var(k, 0), cost(prev, q.elements[k]));
      objective.add(var(k, w - 1), var(k, w - 1), cost(q.elements[k], after));
    }
    // Edges with both ends outside the window.
    for (std::size_t t = 0; t + 1 < n - w; ++t) {
      const std::size_t p = (start + w + t) % n;
      objective.add_offset(cost(perm[p], perm[(p + 1) % n]));
    }
  }

  const double a = auto_penalty(objective);
  q.qubo = objective;
  std::vector<std::size_t> vars(w);
  auto one_hot = [&]() {
    q.qubo.add_offset(a);
    for (std::size_t k = 0; k < w; ++k) {
      q.qubo.add(vars[k], vars[k], -a);
      for (std::size_t l = k + 1; l < w; ++l) q.qubo.add(vars[k], vars[l], 2.0 * a);
    }
  };
  for (std::size_t p = 0; p < w; ++p) {
    for (std::size_t k = 0; k < w; ++k) vars[k] = var(k, p);
    one_hot();
  }
  for (std::size_t k = 0; k < w; ++k) {
    for (std::size_t p = 0; p < w; ++p) vars[p] = var(k, p);
    one_hot();
  }
  return q;
}

}  // namespace

std::optional<QmQuery> qm_query(const Model& model, Evaluator& evaluator,
                                const State& incumbent, DecisionId decision,
                                std::size_t window, double penalty, Rng& rng) {
  const DecisionSpec& spec = model.decisions().at(decision);
  const std::size_t w = std::min(window, spec.size);
  if (w == 0) return std::nullopt;
  std::optional<QmQuery> q;
  switch (spec.kind) {
    case DecisionKind::Binary:
    case DecisionKind::Set:
      q = value_query(model, evaluator, incumbent, decision, w, penalty, rng);
      break;
    case DecisionKind::List:
      q = placement_query(model, incumbent, decision, w, rng);
      break;
    default:
      break;
  }
  if (q) q->clamped = window > spec.size;
  return q;
}

std::optional<State> decode_qm(const QmQuery& q, std::span<const std::uint8_t> bits) {
  State s = q.base;
  auto& part = s.decisions.at(q.decision).parts[0];
  const std::size_t w = q.elements.size();
  if (q.encoding == QmQuery::Encoding::Value) {
    if (bits.size() != w) return std::nullopt;
    for (std::size_t k = 0; k < w; ++k) {
      if (!bits[k]) continue;
      if (q.kind == DecisionKind::Binary) {
        part[static_cast<std::size_t>(q.elements[k])] = 1;
      } else {
        part.push_back(q.elements[k]);
      }
    }
    if (q.kind == DecisionKind::Set) std::sort(part.begin(), part.end());
    return s;
  }
  if (bits.size() != w * w) return std::nullopt;
  std::vector<int> used(w, 0);
  for (std::size_t p = 0; p < w; ++p) {
    int count = 0;
    for (std::size_t k = 0; k < w; ++k) {
      if (bits[k * w + p]) {
        ++count;
        ++used[k];
        part[q.positions[p]] = q.elements[k];
      }
    }
    if (count != 1) return std::nullopt;
  }
  if (std::any_of(used.begin(), used.end(), [](int u) { return u != 1; })) return std::nullopt;
  return s;
}

bool merge_qm_result(BranchState& br, Evaluator& evaluator,
                     const std::vector<State>& decoded) {
  ++br.qm_merges;
  br.improved = false;
  bool changed = false;
  for (const State& s : decoded) {
    Evaluation e = evaluator(s);
    if (!e.feasible) continue;
    if (compare(e, br.current_eval) == std::partial_ordering::less) {
      br.current = s;
      br.scratch = s;
      br.current_eval = e;
      br.current_hash = state_hash(s);
      changed = true;
    }
    if (compare(e, br.best_eval) == std::partial_ordering::less) {
      br.best = s;
      br.best_eval = std::move(e);
      br.best_hash = state_hash(s);
      br.improved = true;
      br.last_improvement = br.iteration;
      changed = true;
    }
  }
  if (br.improved) ++br.qm_improvements;
  return changed;
}

// --- Solve ------------------------------------------------------------------------

const Sample& SampleSet::best() const {
  if (samples.empty()) throw StateError("empty sample set");
  return samples.front();
}

namespace {

struct QmJob {
  QmQuery query;
  SaParams params;
};

std::vector<State> run_qm_job(const QmJob& job) {
  std::vector<State> out;
  for (const auto& s : sa_sample(job.query.qubo, job.params)) {
    if (auto st = decode_qm(job.query, s.bits)) out.push_back(std::move(*st));
  }
  return out;
}

// Runs QM jobs for one branch. Results wait in a mailbox until the branch
// collects them at an iteration boundary. Without a thread the job runs
// during submit().
class QmWorker {
 public:
  explicit QmWorker(bool threaded) {
    if (threaded) thread_ = std::thread([this] { loop(); });
  }
  ~QmWorker() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }
  QmWorker(const QmWorker&) = delete;
  QmWorker& operator=(const QmWorker&) = delete;

  bool busy() {
    std::lock_guard lock(mu_);
    return job_.has_value() || result_.has_value();
  }

  void submit(QmJob job) {
    if (!thread_.joinable()) {
      result_ = run_qm_job(job);
      return;
    }
    {
      std::lock_guard lock(mu_);
      job_ = std::move(job);
    }
    cv_.notify_all();
  }

  std::optional<std::vector<State>> take() {
    std::lock_guard lock(mu_);
    auto r = std::move(result_);
    result_.reset();
    return r;
  }

 private:
  void loop() {
    std::unique_lock lock(mu_);
    while (true) {
      cv_.wait(lock, [this] { return stop_ || job_.has_value(); });
      if (stop_) return;
      QmJob job = std::move(*job_);
      lock.unlock();
      auto result = run_qm_job(job);
      lock.lock();
      result_ = std::move(result);
      job_.reset();
    }
  }

  std::thread thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<QmJob> job_;
  std::optional<std::vector<State>> result_;
  bool stop_ = false;
};

class Recorder {
 public:
  Recorder(Clock::time_point start, std::optional<double> target)
      : start_(start), target_(target) {}

  void record(const BranchState& br, const State& s, const Evaluation& e,
              const char* origin) {
    std::lock_guard lock(mu_);
    const double t = seconds_since(start_);
    samples_.push_back({s, e.objective, e.feasible, e.total_violation(), br.index,
                        br.iteration, t, origin});
    if (!best_ || compare(e, *best_) == std::partial_ordering::less) {
      best_ = e;
      trace_.push_back({t, br.iteration, br.index, e.objective, e.feasible,
                        e.total_violation()});
    }
    if (target_ && e.feasible && e.objective <= *target_ + 1e-9) stop_ = true;
  }

  bool stopped() const { return stop_.load(std::memory_order_relaxed); }
  std::vector<Sample> take_samples() { return std::move(samples_); }
  std::vector<Checkpoint> take_trace() { return std::move(trace_); }

 private:
  std::mutex mu_;
  Clock::time_point start_;
  std::optional<double> target_;
  std::optional<Evaluation> best_;
  std::vector<Sample> samples_;
  std::vector<Checkpoint> trace_;
  std::atomic<bool> stop_{false};
};

struct BranchContext {
  const Model& model;
  const SolverConfig& config;
  const std::vector<DecisionId>& qm_decisions;
  Recorder& recorder;
};

BranchReport run_branch(const BranchContext& ctx, std::size_t index,
                        Clock::time_point deadline) {
  const Model& model = ctx.model;
  const SolverConfig& cfg = ctx.config;
  Evaluator evaluator(model);
  BranchState br = make_branch(model, evaluator, index, cfg.seed);
  ctx.recorder.record(br, br.best, br.best_eval, "cm");

  Rng probe_rng(0);
  const bool movable = random_move(model, br.current, probe_rng).has_value();
  const bool use_qm = cfg.qm_enabled && !ctx.qm_decisions.empty();
  if (cfg.qm_enabled && ctx.qm_decisions.empty()) {
    br.warnings.emplace_back("no decision admits a QM window; QM disabled");
  }
  const std::uint64_t qm_seed = Rng::derive(Rng::derive(cfg.seed, index), 0x514d);

  const auto started = Clock::now();
  const bool timed = cfg.max_iterations == 0;
  Schedule sched = make_schedule(model, evaluator, br, timed ? 100'000 : cfg.max_iterations);
  const double t_end = sched.t0 * sched.t_floor_ratio;
  auto retune = [&](double remaining) {
    if (remaining >= 1.0 && br.temperature > t_end) {
      sched.alpha = std::pow(t_end / br.temperature, 1.0 / remaining);
    }
  };
  auto remaining_iterations = [&]() -> double {
    if (!timed) return static_cast<double>(cfg.max_iterations - br.iteration);
    const double elapsed = seconds_since(started);
    const double left = std::chrono::duration<double>(deadline - Clock::now()).count();
    if (elapsed <= 0.0 || left <= 0.0) return 0.0;
    return static_cast<double>(br.iteration + 1) / elapsed * left;
  };

  QmWorker worker(use_qm && !cfg.deterministic);
  bool clamp_warned = false;
  std::uint64_t last_restart = 0;

  while (movable) {
    if (!timed && br.iteration >= cfg.max_iterations) break;
    if ((br.iteration & 63) == 0) {
      if (ctx.recorder.stopped() || Clock::now() >= deadline) break;
    }
    if (use_qm) {
      if (auto decoded = worker.take()) {
        merge_qm_result(br, evaluator, *decoded);
        if (br.improved) ctx.recorder.record(br, br.best, br.best_eval, "qm");
      }
      if (br.iteration > 0 && br.iteration % cfg.qm_period == 0 && !worker.busy()) {
        const DecisionId d = ctx.qm_decisions[br.rng.below(ctx.qm_decisions.size())];
        auto q = qm_query(model, evaluator, br.best, d, cfg.qm_window, sched.penalty, br.rng);
        if (q) {
          if (q->clamped && !clamp_warned) {
            br.warnings.push_back("qm window " + std::to_string(cfg.qm_window) +
                                  " clamped to decision size " +
                                  std::to_string(model.decisions()[d].size));
            clamp_warned = true;
          }
          SaParams params;
          params.reads = cfg.qm_reads;
          params.sweeps = cfg.qm_sweeps;
          params.seed = Rng::derive(qm_seed, br.qm_queries);
          ++br.qm_queries;
          worker.submit({std::move(*q), params});
        }
      }
    }

    cm_step(br, evaluator, sched, cfg.cm_kind, cfg.tabu_candidates);
    if (br.improved) ctx.recorder.record(br, br.best, br.best_eval, "cm");

    const std::uint64_t quiet_since = std::max(br.last_improvement, last_restart);
    if (br.iteration - quiet_since >= cfg.stagnation_limit) {
      br.current = br.best;
      br.scratch = br.best;
      br.current_eval = br.best_eval;
      br.current_hash = br.best_hash;
      br.tabu.clear();
      br.temperature = std::max(br.temperature, 0.1 * sched.t0);
      ++br.restarts;
      last_restart = br.iteration;
      retune(remaining_iterations());
    } else if ((timed && (br.iteration == 1024 || br.iteration % 4096 == 0))) {
      retune(remaining_iterations());
    }
  }
  ctx.recorder.record(br, br.current, br.current_eval, "final");

  BranchReport report;
  report.index = index;
  report.iterations = br.iteration;
  report.restarts = br.restarts;
  report.qm_queries = br.qm_queries;
  report.qm_merges = br.qm_merges;
  report.qm_improvements = br.qm_improvements;
  report.warnings = std::move(br.warnings);
  return report;
}

bool sample_less(const Sample& a, const Sample& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible && a.violation != b.violation) return a.violation < b.violation;
  if (a.objective != b.objective) return a.objective < b.objective;
  return state_hash(a.state) < state_hash(b.state);
}

}  // namespace

SampleSet solve(const Model& model, const SolverConfig& config) {
  if (!model.frozen()) throw StateError("model must be frozen before solving");
  if (!model.objective()) throw StateError("model has no objective");
  SampleSet out;
  out.config = resolve_config(config, model);
  const SolverConfig& cfg = out.config;
  const std::size_t nb = *cfg.n_branches;
  const std::size_t concurrency =
      cfg.deterministic ? 1 : (cfg.threads ? std::min(cfg.threads, nb) : nb);
  const std::size_t waves = (nb + concurrency - 1) / concurrency;

  std::vector<DecisionId> qm_decisions;
  for (DecisionId d = 0; d < model.decisions().size(); ++d) {
    const auto kind = model.decisions()[d].kind;
    if (kind == DecisionKind::Binary || kind == DecisionKind::Set ||
        (kind == DecisionKind::List && find_tour_matrix(model, d))) {
      qm_decisions.push_back(d);
    }
  }

  const auto start = Clock::now();
  Recorder recorder(start, cfg.target_objective);
  BranchContext ctx{model, cfg, qm_decisions, recorder};
  const auto limit = std::chrono::duration<double>(*cfg.time_limit);
  auto deadline_of = [&](std::size_t b) {
    const double share = static_cast<double>(b / concurrency + 1) / static_cast<double>(waves);
    return start + std::chrono::duration_cast<Clock::duration>(limit * share);
  };

  out.branches.resize(nb);
  if (concurrency == 1) {
    for (std::size_t b = 0; b < nb; ++b) out.branches[b] = run_branch(ctx, b, deadline_of(b));
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mu;
    std::exception_ptr error;
    auto worker = [&]() {
      for (std::size_t b = next++; b < nb; b = next++) {
        try {
          out.branches[b] = run_branch(ctx, b, deadline_of(b));
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < concurrency; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  out.samples = recorder.take_samples();
  std::stable_sort(out.samples.begin(), out.samples.end(), sample_less);
  out.trace = recorder.take_trace();
  out.wall_time = seconds_since(start);
  return out;
}

// --- JSON --------------------------------------------------------------------------

namespace {

using nlohmann::json;

json config_json(const SolverConfig& c) {
  json j;
  j["time_limit"] = c.time_limit ? json(*c.time_limit) : json(nullptr);
  j["n_branches"] = c.n_branches ? json(*c.n_branches) : json(nullptr);
  j["seed"] = c.seed;
  j["cm_kind"] = std::string(to_string(c.cm_kind));
  j["qm_enabled"] = c.qm_enabled;
  j["qm_period"] = c.qm_period;
  j["qm_window"] = c.qm_window;
  j["qm_reads"] = c.qm_reads;
  j["qm_sweeps"] = c.qm_sweeps;
  j["tabu_candidates"] = c.tabu_candidates;
  j["stagnation_limit"] = c.stagnation_limit;
  j["max_iterations"] = c.max_iterations;
  j["target_objective"] = c.target_objective ? json(*c.target_objective) : json(nullptr);
  j["deterministic"] = c.deterministic;
  j["threads"] = c.threads;
  return j;
}

SolverConfig config_from_json(const json& j) {
  SolverConfig c;
  if (!j.at("time_limit").is_null()) c.time_limit = j.at("time_limit").get<double>();
  if (!j.at("n_branches").is_null()) c.n_branches = j.at("n_branches").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.cm_kind = parse_cm_kind(j.at("cm_kind").get<std::string>());
  c.qm_enabled = j.at("qm_enabled").get<bool>();
  c.qm_period = j.at("qm_period").get<std::size_t>();
  c.qm_window = j.at("qm_window").get<std::size_t>();
  c.qm_reads = j.at("qm_reads").get<std::size_t>();
  c.qm_sweeps = j.at("qm_sweeps").get<std::size_t>();
  c.tabu_candidates = j.at("tabu_candidates").get<std::size_t>();
  c.stagnation_limit = j.at("stagnation_limit").get<std::size_t>();
  c.max_iterations = j.at("max_iterations").get<std::uint64_t>();
  if (!j.at("target_objective").is_null()) {
    c.target_objective = j.at("target_objective").get<double>();
  }
  c.deterministic = j.at("deterministic").get<bool>();
  c.threads = j.at("threads").get<std::size_t>();
  return c;
}

json state_json(const State& s) {
  json arr = json::array();
  for (const auto& d : s.decisions) arr.push_back(d.parts);
  return arr;
}

State state_from_json(const json& j) {
  State s;
  for (const auto& d : j) s.decisions.push_back({d.get<std::vector<std::vector<std::int64_t>>>()});
  return s;
}

}  // namespace

std::string to_json(const SampleSet& set, bool include_timing) {
  json doc;
  doc["config"] = config_json(set.config);
  json samples = json::array();
  for (const auto& s : set.samples) {
    json j;
    j["state"] = state_json(s.state);
    j["objective"] = s.objective;
    j["feasible"] = s.feasible;
    j["violation"] = s.violation;
    j["branch"] = s.branch;
    j["iteration"] = s.iteration;
    j["origin"] = s.origin;
    if (include_timing) j["time"] = s.time;
    samples.push_back(std::move(j));
  }
  doc["samples"] = std::move(samples);
  json branches = json::array();
  for (const auto& b : set.branches) {
    branches.push_back({{"index", b.index},
                        {"iterations", b.iterations},
                        {"restarts", b.restarts},
                        {"qm_queries", b.qm_queries},
                        {"qm_merges", b.qm_merges},
                        {"qm_improvements", b.qm_improvements},
                        {"warnings", b.warnings}});
  }
  doc["branches"] = std::move(branches);
  json trace = json::array();
  for (const auto& c : set.trace) {
    json j{{"iteration", c.iteration},
           {"branch", c.branch},
           {"objective", c.objective},
           {"feasible", c.feasible},
           {"violation", c.violation}};
    if (include_timing) j["time"] = c.time;
    trace.push_back(std::move(j));
  }
  doc["trace"] = std::move(trace);
  if (include_timing) doc["wall_time"] = set.wall_time;
  return doc.dump(2);
}

SampleSet sampleset_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("sample set: ") + e.what());
  }
  try {
    SampleSet set;
    set.config = config_from_json(doc.at("config"));
    for (const auto& j : doc.at("samples")) {
      Sample s;
      s.state = state_from_json(j.at("state"));
      s.objective = j.at("objective").get<double>();
      s.feasible = j.at("feasible").get<bool>();
      s.violation = j.at("violation").get<double>();
      s.branch = j.at("branch").get<std::size_t>();
      s.iteration = j.at("iteration").get<std::uint64_t>();
      s.origin = j.at("origin").get<std::string>();
      s.time = j.value("time", 0.0);
      set.samples.push_back(std::move(s));
    }
    for (const auto& j : doc.at("branches")) {
      BranchReport b;
      b.index = j.at("index").get<std::size_t>();
      b.iterations = j.at("iterations").get<std::uint64_t>();
      b.restarts = j.at("restarts").get<std::size_t>();
      b.qm_queries = j.at("qm_queries").get<std::size_t>();
      b.qm_merges = j.at("qm_merges").get<std::size_t>();
      b.qm_improvements = j.at("qm_improvements").get<std::size_t>();
      b.warnings = j.at("warnings").get<std::vector<std::string>>();
      set.branches.push_back(std::move(b));
    }
    for (const auto& j : doc.at("trace")) {
      Checkpoint c;
      c.iteration = j.at("iteration").get<std::uint64_t>();
      c.branch = j.at("branch").get<std::size_t>();
      c.objective = j.at("objective").get<double>();
      c.feasible = j.at("feasible").get<bool>();
      c.violation = j.at("violation").get<double>();
      c.time = j.value("time", 0.0);
      set.trace.push_back(c);
    }
    set.wall_time = doc.value("wall_time", 0.0);
    return set;
  } catch (const json::exception& e) {
    throw ParseError(std::string("sample set: ") + e.what());
  }
}

}  // namespace combopt
