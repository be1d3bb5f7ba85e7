#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "combopt/model.hpp"

namespace combopt {

struct TspInstance {
  std::string name;
  std::size_t n = 0;
  std::vector<double> cost;  // n x n, row-major

  double at(std::size_t i, std::size_t j) const { return cost[i * n + j]; }
  /// Throws DomainError unless the diagonal is 0 and entries are finite, >= 0.
  void validate() const;
};

struct KpInstance {
  std::string name;
  std::vector<std::int64_t> profits;
  std::vector<std::int64_t> weights;
  std::int64_t capacity = 0;

  std::size_t size() const { return profits.size(); }
  void validate() const;
};

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double w = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Weighted graph; each stored edge (u, v, w) is the directed matrix entry
/// W[u][v] += w. Files list every undirected edge once.
struct McInstance {
  std::string name;
  std::size_t n = 0;
  std::vector<Edge> edges;

  std::vector<double> weight_matrix() const;
  void validate() const;
};

// Parsers. Text may use LF or CRLF line endings. default_name is used when
// the file carries no NAME field (TSPLib) or no name at all (KP, MaxCut).
TspInstance parse_tsplib(std::string_view text, std::string default_name = {});
KpInstance parse_kplib(std::string_view text, std::string default_name = {});
McInstance parse_maxcut(std::string_view text, std::string default_name = {});

// File loaders: ParseError when unreadable, name defaults to the file stem.
TspInstance load_tsplib(const std::filesystem::path& path);
KpInstance load_kplib(const std::filesystem::path& path);
McInstance load_maxcut(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// TSPLib EXPLICIT / FULL_MATRIX rendering.
std::string emit_tsplib(const TspInstance& instance);
std::string emit_kplib(const KpInstance& instance);
std::string emit_maxcut(const McInstance& instance);

/// Each unordered pair joins independently with probability `density`;
/// weights are uniform integers in [min_weight, max_weight].
McInstance generate_random_maxcut(std::size_t n, double density,
                                  std::int64_t min_weight,
                                  std::int64_t max_weight, std::uint64_t seed);

// Model builders. Returned models are frozen.
Model build_tsp_model(const TspInstance& instance);
Model build_kp_model(const KpInstance& instance);
Model build_mcp_model(const McInstance& instance);

/// Direct objective formulas, independent of the expression DAG.
double tsp_tour_cost(const TspInstance& instance,
                     std::span<const std::int64_t> tour);
double maxcut_value(const McInstance& instance,
                    std::span<const std::int64_t> sides);

// Exact oracles.
struct TspSolution {
  double value = 0.0;
  std::vector<std::int64_t> tour;
};
struct KpSolution {
  std::int64_t value = 0;
  std::vector<std::int64_t> items;  // increasing
};
struct McSolution {
  double value = 0.0;
  std::vector<std::int64_t> sides;  // 0/1 per node
};

inline constexpr std::size_t kTspEnumerationCap = 10;
inline constexpr std::size_t kTspHeldKarpCap = 18;
inline constexpr std::size_t kMaxCutEnumerationCap = 20;
inline constexpr std::uint64_t kKpTableCap = 400'000'000;  // (n+1)(C+1) cells

/// Enumeration up to 10 nodes, Held-Karp up to 18; SizeError beyond.
TspSolution exact_tsp(const TspInstance& instance);
TspSolution exact_tsp_enumerate(const TspInstance& instance);
TspSolution exact_tsp_held_karp(const TspInstance& instance);
KpSolution exact_kp(const KpInstance& instance);
McSolution exact_maxcut(const McInstance& instance);

}  // namespace combopt
