#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "combopt/model.hpp"
#include "combopt/problems.hpp"

namespace combopt {

/// Quadratic unconstrained binary model: offset + sum_{i<=j} q_ij x_i x_j.
/// Diagonal entries are the linear terms.
class Qubo {
 public:
  using Key = std::pair<std::size_t, std::size_t>;

  Qubo() = default;
  explicit Qubo(std::size_t n) : n_(n) {}

  std::size_t size() const { return n_; }
  const std::map<Key, double>& terms() const { return terms_; }
  double offset() const { return offset_; }

  /// Accumulates into q_{min(i,j), max(i,j)}; entries that cancel to zero
  /// are erased.
  void add(std::size_t i, std::size_t j, double coeff);
  void add_offset(double v) { offset_ += v; }
  double coefficient(std::size_t i, std::size_t j) const;

  double energy(std::span<const std::uint8_t> bits) const;

  friend bool operator==(const Qubo&, const Qubo&) = default;

 private:
  std::size_t n_ = 0;
  std::map<Key, double> terms_;
  double offset_ = 0.0;
};

struct PenaltyConfig {
  enum class Mode { Auto, Fixed };
  Mode mode = Mode::Auto;
  double value = 0.0;

  static PenaltyConfig automatic() { return {}; }
  static PenaltyConfig fixed(double value);
};

/// A = 1 + sum |coefficients| of the objective-only QUBO.
double auto_penalty(const Qubo& objective_terms);

struct DecodedSample {
  bool feasible = false;
  State state;             // state for the matching build_*_model
  double objective = 0.0;  // model objective (minimization convention)
};

struct QuboEncoding {
  Qubo qubo;
  double penalty = 0.0;  // 0 when the encoding needs none
  std::function<DecodedSample(std::span<const std::uint8_t>)> decode;
};

/// One-hot position encoding, variable x_{v,p} at index v*N + p.
QuboEncoding tsp_to_qubo(const TspInstance& instance,
                         PenaltyConfig penalty = {});
/// Item bits followed by binary slack bits spanning exactly 0..C.
QuboEncoding kp_to_qubo(const KpInstance& instance, PenaltyConfig penalty = {});
QuboEncoding mcp_to_qubo(const McInstance& instance);

/// Slack coefficients 1, 2, 4, ..., with the last capped so they sum to C.
std::vector<std::int64_t> slack_coefficients(std::int64_t capacity);

struct SaParams {
  std::size_t reads = 100;
  std::size_t sweeps = 1000;
  std::uint64_t seed = 0;
  std::optional<double> beta_start;  // default ln(2) / max delta
  std::optional<double> beta_end;    // default ln(100) / min delta
};

struct QuboSample {
  std::vector<std::uint8_t> bits;
  double energy = 0.0;
};

/// Independent single-flip Metropolis reads with a geometric beta schedule.
/// Returned energies are recomputed exactly from the bitstrings.
std::vector<QuboSample> sa_sample(const Qubo& qubo, const SaParams& params);

/// Default beta range derived from coefficient magnitudes.
std::pair<double, double> default_beta_range(const Qubo& qubo);

/// Line format: "p qubo n m", optional "c offset v", then m "i j coeff"
/// lines with 0-based i <= j.
std::string write_qubo(const Qubo& qubo);
Qubo read_qubo(std::string_view text);

}  // namespace combopt
