#include "combopt/problems.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "combopt/rng.hpp"

namespace combopt {

namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::int64_t to_int(std::string_view tok, std::string_view what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    throw ParseError("expected integer for " + std::string(what) + ", got '" +
                     std::string(tok) + "'");
  }
  return v;
}

double to_double(std::string_view tok, std::string_view what) {
  std::string s(tok);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError("expected number for " + std::string(what) + ", got '" +
                     s + "'");
  }
  return v;
}

std::string format_number(double v) {
  if (std::floor(v) == v && std::abs(v) < 9.0e15) {
    return std::to_string(static_cast<std::int64_t>(v));
  }
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

bool is_data_line(std::string_view line) {
  auto t = trim(line);
  return !t.empty() && t.front() != '#';
}

}  // namespace

// --- Validation -------------------------------------------------------------

void TspInstance::validate() const {
  if (n == 0) throw DomainError("TSP instance needs at least one node");
  if (cost.size() != n * n) throw DomainError("TSP cost matrix is not n x n");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double c = at(i, j);
      if (!std::isfinite(c) || c < 0) {
        throw DomainError("TSP cost entries must be finite and >= 0");
      }
      if (i == j && c != 0.0) throw DomainError("TSP cost diagonal must be 0");
    }
  }
}

void KpInstance::validate() const {
  if (profits.empty()) throw DomainError("KP instance needs at least one item");
  if (profits.size() != weights.size()) {
    throw DomainError("KP profits and weights differ in length");
  }
  if (capacity < 0) throw DomainError("KP capacity must be >= 0");
  for (std::size_t i = 0; i < profits.size(); ++i) {
    if (profits[i] < 0) throw DomainError("KP profits must be >= 0");
    if (weights[i] < 1) throw DomainError("KP weights must be >= 1");
  }
}

void McInstance::validate() const {
  if (n == 0) throw DomainError("MaxCut instance needs at least one node");
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) throw DomainError("MaxCut edge endpoint out of range");
    if (e.u == e.v) throw DomainError("MaxCut self-loops are not allowed");
    if (!std::isfinite(e.w)) throw DomainError("MaxCut weights must be finite");
  }
}

std::vector<double> McInstance::weight_matrix() const {
  std::vector<double> w(n * n, 0.0);
  for (const auto& e : edges) w[e.u * n + e.v] += e.w;
  return w;
}

// --- Parsers ------------------------------------------------------------------

namespace {

// TSPLib distance functions (nint rounds half away from zero).
double tsplib_distance(const std::string& type, std::pair<double, double> a,
                       std::pair<double, double> b) {
  const double dx = a.first - b.first;
  const double dy = a.second - b.second;
  if (type == "EUC_2D") return std::round(std::sqrt(dx * dx + dy * dy));
  if (type == "CEIL_2D") return std::ceil(std::sqrt(dx * dx + dy * dy));
  if (type == "ATT") {
    const double r = std::sqrt((dx * dx + dy * dy) / 10.0);
    const double t = std::round(r);
    return t < r ? t + 1.0 : t;
  }
  // GEO: coordinates are DDD.MM degrees and minutes.
  constexpr double kPi = 3.141592;
  constexpr double kRadius = 6378.388;
  auto radians = [](double x) {
    const double deg = std::trunc(x);
    return kPi * (deg + 5.0 * (x - deg) / 3.0) / 180.0;
  };
  const double lat_a = radians(a.first);
  const double lon_a = radians(a.second);
  const double lat_b = radians(b.first);
  const double lon_b = radians(b.second);
  const double q1 = std::cos(lon_a - lon_b);
  const double q2 = std::cos(lat_a - lat_b);
  const double q3 = std::cos(lat_a + lat_b);
  return std::trunc(kRadius * std::acos(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)) + 1.0);
}

void fill_explicit(std::vector<double>& cost, std::size_t n, const std::string& format,
                   const std::vector<double>& w) {
  std::size_t expected = 0;
  if (format == "FULL_MATRIX") {
    expected = n * n;
  } else if (format == "UPPER_ROW" || format == "LOWER_ROW") {
    expected = n * (n - 1) / 2;
  } else if (format == "UPPER_DIAG_ROW" || format == "LOWER_DIAG_ROW") {
    expected = n * (n + 1) / 2;
  } else {
    throw ParseError("unsupported EDGE_WEIGHT_FORMAT '" + format + "'");
  }
  if (w.size() != expected) {
    throw ParseError("DIMENSION is " + std::to_string(n) + " but " + std::to_string(w.size()) +
                     " matrix entries given (expected " + std::to_string(expected) + ")");
  }
  if (format == "FULL_MATRIX") {
    cost = w;
    return;
  }
  std::size_t k = 0;
  auto set = [&](std::size_t i, std::size_t j) {
    cost[i * n + j] = w[k];
    cost[j * n + i] = w[k];
    ++k;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (format == "UPPER_ROW") {
      for (std::size_t j = i + 1; j < n; ++j) set(i, j);
    } else if (format == "LOWER_ROW") {
      for (std::size_t j = 0; j < i; ++j) set(i, j);
    } else if (format == "UPPER_DIAG_ROW") {
      for (std::size_t j = i; j < n; ++j) set(i, j);
    } else {
      for (std::size_t j = 0; j <= i; ++j) set(i, j);
    }
  }
}

}  // namespace

TspInstance parse_tsplib(std::string_view text, std::string default_name) {
  TspInstance inst;
  inst.name = std::move(default_name);
  std::optional<std::size_t> dimension;
  std::string weight_type;
  std::string weight_format;
  auto lines = split_lines(text);

  enum class Section { Header, Coords, Weights, Other };
  Section section = Section::Header;
  std::vector<std::pair<std::int64_t, std::pair<double, double>>> coords;
  std::vector<double> weights;

  for (auto raw : lines) {
    auto line = trim(raw);
    if (line.empty()) continue;
    auto key_end = line.find(':');
    std::string key = upper(trim(line.substr(0, key_end)));
    if (key == "EOF") break;
    if (key == "NODE_COORD_SECTION") {
      section = Section::Coords;
      continue;
    }
    if (key == "EDGE_WEIGHT_SECTION") {
      section = Section::Weights;
      continue;
    }
    if (key.ends_with("_SECTION")) {
      section = Section::Other;
      continue;
    }
    if (key_end != std::string_view::npos) {
      section = Section::Header;
      auto value = std::string(trim(line.substr(key_end + 1)));
      if (key == "NAME") {
        inst.name = value;
      } else if (key == "DIMENSION") {
        auto d = to_int(value, "DIMENSION");
        if (d < 1) throw ParseError("DIMENSION must be positive");
        dimension = static_cast<std::size_t>(d);
      } else if (key == "EDGE_WEIGHT_TYPE") {
        weight_type = upper(value);
      } else if (key == "EDGE_WEIGHT_FORMAT") {
        weight_format = upper(value);
      } else if (key == "TYPE") {
        auto t = upper(value);
        if (t != "TSP" && t != "ATSP") {
          throw ParseError("unsupported TSPLib TYPE '" + value + "'");
        }
      }
      continue;
    }
    auto toks = split_ws(line);
    switch (section) {
      case Section::Coords:
        if (toks.size() != 3) {
          throw ParseError("coordinate line needs 'id x y': '" +
                           std::string(line) + "'");
        }
        coords.push_back({to_int(toks[0], "node id"),
                          {to_double(toks[1], "x"), to_double(toks[2], "y")}});
        break;
      case Section::Weights:
        for (auto t : toks) weights.push_back(to_double(t, "edge weight"));
        break;
      case Section::Other:
        break;
      case Section::Header:
        throw ParseError("unexpected line in TSPLib header: '" +
                         std::string(line) + "'");
    }
  }

  if (!dimension) throw ParseError("TSPLib file has no DIMENSION");
  const std::size_t n = *dimension;
  inst.n = n;
  inst.cost.assign(n * n, 0.0);

  const bool coordinate_based = weight_type == "EUC_2D" || weight_type == "CEIL_2D" ||
                                weight_type == "ATT" || weight_type == "GEO";
  if (coordinate_based) {
    if (coords.size() != n) {
      throw ParseError("DIMENSION is " + std::to_string(n) + " but " +
                       std::to_string(coords.size()) + " coordinates given");
    }
    std::vector<std::pair<double, double>> pts(n);
    std::vector<bool> seen(n, false);
    for (const auto& [id, xy] : coords) {
      if (id < 1 || static_cast<std::size_t>(id) > n || seen[id - 1]) {
        throw ParseError("bad or repeated node id " + std::to_string(id));
      }
      seen[id - 1] = true;
      pts[id - 1] = xy;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) inst.cost[i * n + j] = tsplib_distance(weight_type, pts[i], pts[j]);
      }
    }
  } else if (weight_type == "EXPLICIT") {
    fill_explicit(inst.cost, n, weight_format.empty() ? "FULL_MATRIX" : weight_format, weights);
  } else {
    throw ParseError("unsupported EDGE_WEIGHT_TYPE '" + weight_type + "'");
  }
  try {
    inst.validate();
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
  return inst;
}

KpInstance parse_kplib(std::string_view text, std::string default_name) {
  KpInstance inst;
  inst.name = std::move(default_name);
  std::vector<std::string_view> data;
  for (auto line : split_lines(text)) {
    if (is_data_line(line)) data.push_back(trim(line));
  }
  if (data.size() < 2) throw ParseError("KP file needs item count and capacity");
  auto n = to_int(data[0], "item count");
  if (n < 1) throw ParseError("KP item count must be positive");
  inst.capacity = to_int(data[1], "capacity");
  if (inst.capacity < 0) throw ParseError("KP capacity must be >= 0");
  if (data.size() != static_cast<std::size_t>(n) + 2) {
    throw ParseError("KP file declares " + std::to_string(n) + " items but has " +
                     std::to_string(data.size() - 2) + " item lines");
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    auto toks = split_ws(data[i + 2]);
    if (toks.size() != 2) {
      throw ParseError("KP item line needs 'profit weight': '" +
                       std::string(data[i + 2]) + "'");
    }
    auto v = to_int(toks[0], "profit");
    auto w = to_int(toks[1], "weight");
    if (v < 0) throw ParseError("negative profit on item " + std::to_string(i));
    if (w < 1) throw ParseError("weight must be >= 1 on item " + std::to_string(i));
    inst.profits.push_back(v);
    inst.weights.push_back(w);
  }
  return inst;
}

McInstance parse_maxcut(std::string_view text, std::string default_name) {
  McInstance inst;
  inst.name = std::move(default_name);
  std::vector<std::string_view> data;
  for (auto line : split_lines(text)) {
    if (is_data_line(line)) data.push_back(trim(line));
  }
  if (data.empty()) throw ParseError("MaxCut file is empty");
  auto head = split_ws(data[0]);
  if (head.size() != 2) throw ParseError("MaxCut header must be 'n m'");
  auto n = to_int(head[0], "node count");
  auto m = to_int(head[1], "edge count");
  if (n < 1 || m < 0) throw ParseError("MaxCut header has invalid counts");
  if (data.size() != static_cast<std::size_t>(m) + 1) {
    throw ParseError("MaxCut header declares " + std::to_string(m) +
                     " edges but file has " + std::to_string(data.size() - 1));
  }
  inst.n = static_cast<std::size_t>(n);
  for (std::size_t k = 1; k < data.size(); ++k) {
    auto toks = split_ws(data[k]);
    if (toks.size() != 3) {
      throw ParseError("MaxCut edge line needs 'u v w': '" +
                       std::string(data[k]) + "'");
    }
    auto u = to_int(toks[0], "edge endpoint");
    auto v = to_int(toks[1], "edge endpoint");
    if (u < 1 || u > n || v < 1 || v > n) {
      throw ParseError("edge endpoint out of range 1.." + std::to_string(n) +
                       ": '" + std::string(data[k]) + "'");
    }
    if (u == v) throw ParseError("self-loop on node " + std::to_string(u));
    inst.edges.push_back({static_cast<std::size_t>(u - 1),
                          static_cast<std::size_t>(v - 1),
                          to_double(toks[2], "edge weight")});
  }
  return inst;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read file '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TspInstance load_tsplib(const std::filesystem::path& path) {
  return parse_tsplib(read_text_file(path), path.stem().string());
}
KpInstance load_kplib(const std::filesystem::path& path) {
  return parse_kplib(read_text_file(path), path.stem().string());
}
McInstance load_maxcut(const std::filesystem::path& path) {
  return parse_maxcut(read_text_file(path), path.stem().string());
}

// --- Emitters ---------------------------------------------------------------

std::string emit_tsplib(const TspInstance& inst) {
  std::ostringstream os;
  os << "NAME : " << inst.name << "\nTYPE : TSP\nDIMENSION : " << inst.n
     << "\nEDGE_WEIGHT_TYPE : EXPLICIT\nEDGE_WEIGHT_FORMAT : FULL_MATRIX\n"
     << "EDGE_WEIGHT_SECTION\n";
  for (std::size_t i = 0; i < inst.n; ++i) {
    for (std::size_t j = 0; j < inst.n; ++j) {
      os << (j ? " " : "") << format_number(inst.at(i, j));
    }
    os << '\n';
  }
  os << "EOF\n";
  return os.str();
}

std::string emit_kplib(const KpInstance& inst) {
  std::ostringstream os;
  os << inst.size() << '\n' << inst.capacity << "\n\n";
  for (std::size_t i = 0; i < inst.size(); ++i) {
    os << inst.profits[i] << ' ' << inst.weights[i] << '\n';
  }
  return os.str();
}

std::string emit_maxcut(const McInstance& inst) {
  std::ostringstream os;
  os << inst.n << ' ' << inst.edges.size() << '\n';
  for (const auto& e : inst.edges) {
    os << e.u + 1 << ' ' << e.v + 1 << ' ' << format_number(e.w) << '\n';
  }
  return os.str();
}

// --- Generator ---------------------------------------------------------------

McInstance generate_random_maxcut(std::size_t n, double density,
                                  std::int64_t min_weight,
                                  std::int64_t max_weight, std::uint64_t seed) {
  if (n < 2) throw DomainError("random MaxCut graph needs n >= 2");
  if (!(density > 0.0 && density <= 1.0)) {
    throw DomainError("density must lie in (0, 1]");
  }
  if (min_weight > max_weight) throw DomainError("min weight exceeds max weight");
  Rng rng(seed);
  McInstance inst;
  inst.name = "mc_" + std::to_string(n) + "_" + std::to_string(seed);
  inst.n = n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (density >= 1.0 || rng.uniform() < density) {
        inst.edges.push_back(
            {i, j, static_cast<double>(rng.between(min_weight, max_weight))});
      }
    }
  }
  return inst;
}

// --- Builders -----------------------------------------------------------------

Model build_tsp_model(const TspInstance& inst) {
  inst.validate();
  Model model;
  auto route_ref = model.add_decision(DecisionSpec::list(inst.n));
  Expr route(model, route_ref.node);
  Expr cost_matrix(model, model.add_constant(inst.cost, inst.n, inst.n));

  Expr route_cost = cost_matrix.at({route.slice({}, -1), route.slice(1, {})});
  Expr return_cost = cost_matrix.at({route.at(-1), route.at(0)});
  Expr complete_cost = route_cost.sum() + return_cost.sum();
  model.minimize(complete_cost.id());
  model.freeze();
  return model;
}

Model build_kp_model(const KpInstance& inst) {
  inst.validate();
  Model model;
  auto items_ref = model.add_decision(DecisionSpec::set(inst.size()));
  Expr items(model, items_ref.node);
  std::vector<double> w(inst.weights.begin(), inst.weights.end());
  std::vector<double> v(inst.profits.begin(), inst.profits.end());
  Expr capacity(model, model.add_constant(static_cast<double>(inst.capacity)));
  Expr weights(model, model.add_constant(w));
  Expr profits(model, model.add_constant(v));

  Expr capacity_check = weights.at({items}).sum() <= capacity;
  model.add_constraint(capacity_check.id());
  Expr sum_values = profits.at({items}).sum();
  model.minimize((-sum_values).id());
  model.freeze();
  return model;
}

Model build_mcp_model(const McInstance& inst) {
  inst.validate();
  Model model;
  auto nodes_ref = model.add_decision(DecisionSpec::binary(inst.n));
  Expr nodes(model, nodes_ref.node);

  // sum_{i != j} |x_i - x_j| * W_ij over the stored directed matrix;
  // zero entries contribute nothing and are skipped.
  auto w = inst.weight_matrix();
  std::vector<double> rows, cols, vals;
  for (std::size_t i = 0; i < inst.n; ++i) {
    for (std::size_t j = 0; j < inst.n; ++j) {
      if (i != j && w[i * inst.n + j] != 0.0) {
        rows.push_back(static_cast<double>(i));
        cols.push_back(static_cast<double>(j));
        vals.push_back(w[i * inst.n + j]);
      }
    }
  }
  Expr from(model, model.add_constant(rows));
  Expr to(model, model.add_constant(cols));
  Expr weights(model, model.add_constant(vals));
  Expr obj = ((nodes.at({from}) - nodes.at({to})).abs() * weights).sum();
  model.minimize((-obj).id());
  model.freeze();
  return model;
}

double tsp_tour_cost(const TspInstance& inst, std::span<const std::int64_t> tour) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < tour.size(); ++i) {
    total += inst.at(static_cast<std::size_t>(tour[i]),
                     static_cast<std::size_t>(tour[i + 1]));
  }
  if (!tour.empty()) {
    total += inst.at(static_cast<std::size_t>(tour.back()),
                     static_cast<std::size_t>(tour.front()));
  }
  return total;
}

double maxcut_value(const McInstance& inst, std::span<const std::int64_t> sides) {
  double total = 0.0;
  for (const auto& e : inst.edges) {
    if (sides[e.u] != sides[e.v]) total += e.w;
  }
  return total;
}

// --- Exact oracles --------------------------------------------------------------

TspSolution exact_tsp_enumerate(const TspInstance& inst) {
  if (inst.n > kTspEnumerationCap) {
    throw SizeError("TSP enumeration is capped at " +
                    std::to_string(kTspEnumerationCap) + " nodes, got " +
                    std::to_string(inst.n));
  }
  std::vector<std::int64_t> perm(inst.n);
  std::iota(perm.begin(), perm.end(), 0);
  TspSolution best{std::numeric_limits<double>::infinity(), perm};
  // Node 0 stays first; rotations of a tour have equal cost.
  do {
    double c = tsp_tour_cost(inst, perm);
    if (c < best.value) best = {c, perm};
  } while (std::next_permutation(perm.begin() + (inst.n > 0 ? 1 : 0), perm.end()));
  return best;
}

TspSolution exact_tsp_held_karp(const TspInstance& inst) {
  const std::size_t n = inst.n;
  if (n > kTspHeldKarpCap) {
    throw SizeError("Held-Karp is capped at " + std::to_string(kTspHeldKarpCap) +
                    " nodes, got " + std::to_string(n));
  }
  if (n <= 2) return exact_tsp_enumerate(inst);
  // dp[mask][j]: cheapest path from node 0 through `mask` (nodes 1..n-1,
  // bit j-1) ending at j.
  const std::size_t m = n - 1;
  const std::size_t full = std::size_t{1} << m;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(full * m, inf);
  std::vector<std::uint8_t> parent(full * m, 0);
  for (std::size_t j = 0; j < m; ++j) dp[(std::size_t{1} << j) * m + j] = inst.at(0, j + 1);
  for (std::size_t mask = 1; mask < full; ++mask) {
    for (std::size_t j = 0; j < m; ++j) {
      double cur = dp[mask * m + j];
      if (!(mask & (std::size_t{1} << j)) || cur == inf) continue;
      for (std::size_t k = 0; k < m; ++k) {
        if (mask & (std::size_t{1} << k)) continue;
        std::size_t next = mask | (std::size_t{1} << k);
        double cand = cur + inst.at(j + 1, k + 1);
        if (cand < dp[next * m + k]) {
          dp[next * m + k] = cand;
          parent[next * m + k] = static_cast<std::uint8_t>(j);
        }
      }
    }
  }
  double best = inf;
  std::size_t last = 0;
  for (std::size_t j = 0; j < m; ++j) {
    double c = dp[(full - 1) * m + j] + inst.at(j + 1, 0);
    if (c < best) {
      best = c;
      last = j;
    }
  }
  std::vector<std::int64_t> tour;
  std::size_t mask = full - 1;
  std::size_t j = last;
  while (mask) {
    tour.push_back(static_cast<std::int64_t>(j + 1));
    std::size_t prev = parent[mask * m + j];
    mask &= ~(std::size_t{1} << j);
    j = prev;
  }
  tour.push_back(0);
  std::reverse(tour.begin(), tour.end());
  return {best, tour};
}

TspSolution exact_tsp(const TspInstance& inst) {
  inst.validate();
  if (inst.n <= kTspEnumerationCap) return exact_tsp_enumerate(inst);
  return exact_tsp_held_karp(inst);
}

KpSolution exact_kp(const KpInstance& inst) {
  inst.validate();
  const std::size_t n = inst.size();
  const auto cap = static_cast<std::size_t>(inst.capacity);
  if (static_cast<double>(n + 1) * static_cast<double>(cap + 1) >
      static_cast<double>(kKpTableCap)) {
    throw SizeError("KP dynamic program table exceeds " +
                    std::to_string(kKpTableCap) + " cells");
  }
  std::vector<std::int64_t> best(cap + 1, 0);
  std::vector<bool> take(n * (cap + 1), false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = static_cast<std::size_t>(inst.weights[i]);
    // w >= 1, so c never wraps below zero.
    for (std::size_t c = cap; c >= w; --c) {
      std::int64_t cand = best[c - w] + inst.profits[i];
      if (cand > best[c]) {
        best[c] = cand;
        take[i * (cap + 1) + c] = true;
      }
    }
  }
  KpSolution sol{best[cap], {}};
  std::size_t c = cap;
  for (std::size_t i = n; i-- > 0;) {
    if (take[i * (cap + 1) + c]) {
      sol.items.push_back(static_cast<std::int64_t>(i));
      c -= static_cast<std::size_t>(inst.weights[i]);
    }
  }
  std::reverse(sol.items.begin(), sol.items.end());
  return sol;
}

McSolution exact_maxcut(const McInstance& inst) {
  inst.validate();
  const std::size_t n = inst.n;
  if (n > kMaxCutEnumerationCap) {
    throw SizeError("MaxCut enumeration is capped at " +
                    std::to_string(kMaxCutEnumerationCap) + " nodes, got " +
                    std::to_string(n));
  }
  // Gray-code walk over assignments with node 0 fixed on side 0.
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& e : inst.edges) {
    adj[e.u].push_back({e.v, e.w});
    adj[e.v].push_back({e.u, e.w});
  }
  std::vector<std::int64_t> sides(n, 0);
  double value = 0.0;
  McSolution best{0.0, sides};
  const std::uint64_t steps = n > 1 ? (std::uint64_t{1} << (n - 1)) : 1;
  for (std::uint64_t g = 1; g < steps; ++g) {
    std::size_t bit = static_cast<std::size_t>(std::countr_zero(g)) + 1;
    for (auto [k, w] : adj[bit]) value += sides[k] == sides[bit] ? w : -w;
    sides[bit] ^= 1;
    if (value > best.value) best = {value, sides};
  }
  return best;
}

}  // namespace combopt
