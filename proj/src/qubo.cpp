#include "combopt/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "combopt/rng.hpp"

namespace combopt {

void Qubo::add(std::size_t i, std::size_t j, double coeff) {
  if (i >= n_ || j >= n_) throw DomainError("QUBO index out of range");
  if (!std::isfinite(coeff)) throw DomainError("QUBO coefficient must be finite");
  if (coeff == 0.0) return;
  Key key = i <= j ? Key{i, j} : Key{j, i};
  auto [it, inserted] = terms_.try_emplace(key, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Qubo::coefficient(std::size_t i, std::size_t j) const {
  auto it = terms_.find(i <= j ? Key{i, j} : Key{j, i});
  return it == terms_.end() ? 0.0 : it->second;
}

double Qubo::energy(std::span<const std::uint8_t> bits) const {
  if (bits.size() != n_) throw DomainError("bitstring length differs from QUBO size");
  double e = offset_;
  for (const auto& [key, q] : terms_) {
    if (bits[key.first] && bits[key.second]) e += q;
  }
  return e;
}

PenaltyConfig PenaltyConfig::fixed(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError("fixed penalty must be positive");
  }
  return {Mode::Fixed, value};
}

double auto_penalty(const Qubo& objective_terms) {
  double total = 0.0;
  for (const auto& [key, q] : objective_terms.terms()) total += std::abs(q);
  return 1.0 + total;
}

namespace {

double resolve_penalty(const PenaltyConfig& cfg, const Qubo& objective) {
  return cfg.mode == PenaltyConfig::Mode::Auto ? auto_penalty(objective)
                                               : cfg.value;
}

// Adds A * (target - sum_k coeff_k x_k)^2 over distinct variables.
void add_squared_penalty(Qubo& q, double a, std::span<const std::size_t> vars,
                         std::span<const double> coeffs, double target) {
  q.add_offset(a * target * target);
  for (std::size_t k = 0; k < vars.size(); ++k) {
    q.add(vars[k], vars[k], a * (coeffs[k] * coeffs[k] - 2.0 * target * coeffs[k]));
    for (std::size_t l = k + 1; l < vars.size(); ++l) {
      q.add(vars[k], vars[l], 2.0 * a * coeffs[k] * coeffs[l]);
    }
  }
}

Qubo merged(const Qubo& objective, const Qubo& penalty) {
  Qubo out = objective;
  for (const auto& [key, c] : penalty.terms()) out.add(key.first, key.second, c);
  out.add_offset(penalty.offset());
  return out;
}

}  // namespace

QuboEncoding tsp_to_qubo(const TspInstance& inst, PenaltyConfig penalty) {
  inst.validate();
  const std::size_t n = inst.n;
  auto var = [n](std::size_t v, std::size_t p) { return v * n + p; };
  Qubo objective(n * n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t next = (p + 1) % n;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        if (u != v) objective.add(var(u, p), var(v, next), inst.at(u, v));
      }
    }
  }
  const double a = resolve_penalty(penalty, objective);
  Qubo constraints(n * n);
  std::vector<std::size_t> vars(n);
  std::vector<double> ones(n, 1.0);
  for (std::size_t p = 0; p < n; ++p) {  // each position holds one node
    for (std::size_t v = 0; v < n; ++v) vars[v] = var(v, p);
    add_squared_penalty(constraints, a, vars, ones, 1.0);
  }
  for (std::size_t v = 0; v < n; ++v) {  // each node sits at one position
    for (std::size_t p = 0; p < n; ++p) vars[p] = var(v, p);
    add_squared_penalty(constraints, a, vars, ones, 1.0);
  }

  QuboEncoding enc{merged(objective, constraints), a, {}};
  enc.decode = [inst, n](std::span<const std::uint8_t> bits) {
    DecodedSample out;
    std::vector<std::int64_t> tour(n, -1);
    std::vector<int> used(n, 0);
    bool ok = bits.size() == n * n;
    for (std::size_t p = 0; ok && p < n; ++p) {
      int count = 0;
      for (std::size_t v = 0; v < n; ++v) {
        if (bits[v * n + p]) {
          ++count;
          tour[p] = static_cast<std::int64_t>(v);
          ++used[v];
        }
      }
      ok = count == 1;
    }
    ok = ok && std::all_of(used.begin(), used.end(), [](int c) { return c == 1; });
    out.feasible = ok;
    if (ok) {
      out.state.decisions = {DecisionValue{{tour}}};
      out.objective = tsp_tour_cost(inst, tour);
    }
    return out;
  };
  return enc;
}

std::vector<std::int64_t> slack_coefficients(std::int64_t capacity) {
  std::vector<std::int64_t> coeffs;
  std::int64_t covered = 0;
  std::int64_t next = 1;
  while (covered < capacity) {
    std::int64_t c = std::min(next, capacity - covered);
    coeffs.push_back(c);
    covered += c;
    next *= 2;
  }
  return coeffs;
}

QuboEncoding kp_to_qubo(const KpInstance& inst, PenaltyConfig penalty) {
  inst.validate();
  const std::size_t n = inst.size();
  const auto slack = slack_coefficients(inst.capacity);
  const std::size_t total = n + slack.size();
  Qubo objective(total);
  for (std::size_t i = 0; i < n; ++i) {
    objective.add(i, i, -static_cast<double>(inst.profits[i]));
  }
  const double a = resolve_penalty(penalty, objective);
  std::vector<std::size_t> vars(total);
  std::vector<double> coeffs(total);
  for (std::size_t i = 0; i < n; ++i) {
    vars[i] = i;
    coeffs[i] = static_cast<double>(inst.weights[i]);
  }
  for (std::size_t k = 0; k < slack.size(); ++k) {
    vars[n + k] = n + k;
    coeffs[n + k] = static_cast<double>(slack[k]);
  }
  Qubo constraint(total);
  add_squared_penalty(constraint, a, vars, coeffs,
                      static_cast<double>(inst.capacity));

  QuboEncoding enc{merged(objective, constraint), a, {}};
  enc.decode = [inst, n](std::span<const std::uint8_t> bits) {
    DecodedSample out;
    std::vector<std::int64_t> items;
    std::int64_t weight = 0;
    std::int64_t profit = 0;
    for (std::size_t i = 0; i < n && i < bits.size(); ++i) {
      if (bits[i]) {
        items.push_back(static_cast<std::int64_t>(i));
        weight += inst.weights[i];
        profit += inst.profits[i];
      }
    }
    out.state.decisions = {DecisionValue{{items}}};
    out.objective = -static_cast<double>(profit);
    out.feasible = weight <= inst.capacity;
    return out;
  };
  return enc;
}

QuboEncoding mcp_to_qubo(const McInstance& inst) {
  inst.validate();
  const std::size_t n = inst.n;
  Qubo q(n);
  // -sum_{i != j} W_ij (x_i + x_j - 2 x_i x_j)
  for (const auto& e : inst.edges) {
    q.add(e.u, e.u, -e.w);
    q.add(e.v, e.v, -e.w);
    q.add(e.u, e.v, 2.0 * e.w);
  }
  QuboEncoding enc{std::move(q), 0.0, {}};
  enc.decode = [inst](std::span<const std::uint8_t> bits) {
    DecodedSample out;
    std::vector<std::int64_t> sides(bits.begin(), bits.end());
    out.objective = -maxcut_value(inst, sides);
    out.state.decisions = {DecisionValue{{std::move(sides)}}};
    out.feasible = true;
    return out;
  };
  return enc;
}

// --- Sampler ------------------------------------------------------------------

std::pair<double, double> default_beta_range(const Qubo& qubo) {
  const std::size_t n = qubo.size();
  std::vector<double> reach(n, 0.0);
  double min_abs = std::numeric_limits<double>::infinity();
  for (const auto& [key, q] : qubo.terms()) {
    double a = std::abs(q);
    reach[key.first] += a;
    if (key.second != key.first) reach[key.second] += a;
    min_abs = std::min(min_abs, a);
  }
  double max_delta = n ? *std::max_element(reach.begin(), reach.end()) : 0.0;
  if (max_delta <= 0.0) return {1.0, 1.0};
  return {std::log(2.0) / max_delta, std::log(100.0) / min_abs};
}

std::vector<QuboSample> sa_sample(const Qubo& qubo, const SaParams& params) {
  const std::size_t n = qubo.size();
  std::vector<double> linear(n, 0.0);
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& [key, q] : qubo.terms()) {
    if (key.first == key.second) {
      linear[key.first] += q;
    } else {
      adj[key.first].push_back({key.second, q});
      adj[key.second].push_back({key.first, q});
    }
  }
  auto [b0, b1] = default_beta_range(qubo);
  const double beta_start = params.beta_start.value_or(b0);
  const double beta_end = params.beta_end.value_or(b1);
  const std::size_t sweeps = std::max<std::size_t>(params.sweeps, 1);

  std::vector<QuboSample> out;
  out.reserve(params.reads);
  std::vector<double> field(n);
  for (std::size_t r = 0; r < params.reads; ++r) {
    Rng rng(Rng::derive(params.seed, r));
    std::vector<std::uint8_t> x(n);
    for (auto& b : x) b = static_cast<std::uint8_t>(rng() & 1U);
    // field[i] = energy change of raising x_i from 0 to 1
    for (std::size_t i = 0; i < n; ++i) {
      double f = linear[i];
      for (auto [j, q] : adj[i]) f += q * x[j];
      field[i] = f;
    }
    for (std::size_t s = 0; s < sweeps; ++s) {
      const double t = sweeps > 1 ? static_cast<double>(s) / static_cast<double>(sweeps - 1) : 1.0;
      const double beta = beta_start * std::pow(beta_end / beta_start, t);
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = x[i] ? -field[i] : field[i];
        if (delta > 0.0 && rng.uniform() >= std::exp(-beta * delta)) continue;
        const double step = x[i] ? -1.0 : 1.0;
        x[i] ^= 1U;
        for (auto [j, q] : adj[i]) field[j] += q * step;
      }
    }
    double e = qubo.energy(x);
    out.push_back({std::move(x), e});
  }
  return out;
}

// --- Text format ----------------------------------------------------------------

std::string write_qubo(const Qubo& qubo) {
  std::ostringstream os;
  os.precision(17);
  os << "p qubo " << qubo.size() << ' ' << qubo.terms().size() << '\n';
  if (qubo.offset() != 0.0) os << "c offset " << qubo.offset() << '\n';
  for (const auto& [key, q] : qubo.terms()) {
    os << key.first << ' ' << key.second << ' ' << q << '\n';
  }
  return os.str();
}

Qubo read_qubo(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<Qubo> q;
  std::size_t expected = 0;
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "c") {
      std::string key;
      double v = 0.0;
      if (ls >> key && key == "offset" && ls >> v) {
        if (!q) throw ParseError("QUBO offset before header");
        q->add_offset(v);
      }
      continue;
    }
    if (tag == "p") {
      std::string kind;
      std::size_t n = 0;
      if (!(ls >> kind >> n >> expected) || kind != "qubo") {
        throw ParseError("QUBO header must be 'p qubo n m'");
      }
      q.emplace(n);
      continue;
    }
    if (!q) throw ParseError("QUBO entry before header");
    std::istringstream es(line);
    long long i = 0;
    long long j = 0;
    double c = 0.0;
    std::string extra;
    if (!(es >> i >> j >> c) || (es >> extra)) {
      throw ParseError("QUBO entry must be 'i j coeff': '" + line + "'");
    }
    if (i < 0 || j < 0 || static_cast<std::size_t>(std::max(i, j)) >= q->size()) {
      throw ParseError("QUBO entry index out of range: '" + line + "'");
    }
    q->add(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c);
    ++seen;
  }
  if (!q) throw ParseError("QUBO text has no header");
  if (seen != expected) {
    throw ParseError("QUBO header declares " + std::to_string(expected) +
                     " entries, found " + std::to_string(seen));
  }
  return *q;
}

}  // namespace combopt
