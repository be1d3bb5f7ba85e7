#include "combopt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "combopt/errors.hpp"

namespace combopt {

namespace fs = std::filesystem;

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Tsp:
      return "tsp";
    case ProblemKind::Kp:
      return "kp";
    case ProblemKind::MaxCut:
      return "maxcut";
  }
  return "?";
}

ProblemKind parse_problem_kind(std::string_view text) {
  if (text == "tsp") return ProblemKind::Tsp;
  if (text == "kp") return ProblemKind::Kp;
  if (text == "maxcut" || text == "mcp") return ProblemKind::MaxCut;
  throw ParseError("unknown problem '" + std::string(text) + "'");
}

Sense sense_of(ProblemKind kind) {
  return kind == ProblemKind::Tsp ? Sense::Minimize : Sense::Maximize;
}

Model LoadedInstance::build_model() const {
  return std::visit(
      [](const auto& inst) -> Model {
        using T = std::decay_t<decltype(inst)>;
        if constexpr (std::is_same_v<T, TspInstance>) {
          return build_tsp_model(inst);
        } else if constexpr (std::is_same_v<T, KpInstance>) {
          return build_kp_model(inst);
        } else {
          return build_mcp_model(inst);
        }
      },
      data);
}

double LoadedInstance::native_value(double objective) const {
  return sense_of(kind) == Sense::Minimize ? objective : -objective;
}

LoadedInstance load_instance(ProblemKind kind, const fs::path& path, std::string id) {
  LoadedInstance out;
  out.kind = kind;
  switch (kind) {
    case ProblemKind::Tsp:
      out.data = load_tsplib(path);
      break;
    case ProblemKind::Kp:
      out.data = load_kplib(path);
      break;
    case ProblemKind::MaxCut:
      out.data = load_maxcut(path);
      break;
  }
  out.id = id.empty() ? path.stem().string() : std::move(id);
  return out;
}

std::optional<double> exact_optimum(const LoadedInstance& instance) {
  try {
    return std::visit(
        [](const auto& inst) -> double {
          using T = std::decay_t<decltype(inst)>;
          if constexpr (std::is_same_v<T, TspInstance>) {
            return exact_tsp(inst).value;
          } else if constexpr (std::is_same_v<T, KpInstance>) {
            return static_cast<double>(exact_kp(inst).value);
          } else {
            return exact_maxcut(inst).value;
          }
        },
        instance.data);
  } catch (const SizeError&) {
    return std::nullopt;
  }
}

std::map<std::string, double> parse_optima(std::string_view text) {
  std::map<std::string, double> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string id;
    if (!(fields >> id)) continue;
    double value = 0.0;
    std::string extra;
    if (!(fields >> value) || (fields >> extra)) {
      throw ParseError("optima line " + std::to_string(lineno) +
                       ": expected 'instance_id optimum'");
    }
    out[id] = value;
  }
  return out;
}

std::map<std::string, double> read_optima(const fs::path& path) {
  return parse_optima(read_text_file(path));
}

// --- Plan --------------------------------------------------------------------------

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!j.is_object()) throw ParseError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

AlgorithmSpec algorithm_from_json(const json& j) {
  check_keys(j,
             {"id", "solver", "cm", "branches", "qm", "qm_period", "qm_window",
              "qm_reads", "qm_sweeps", "tabu_candidates", "time_limit", "reads",
              "sweeps", "penalty"},
             "algorithm");
  AlgorithmSpec a;
  a.id = j.at("id").get<std::string>();
  const auto solver = j.at("solver").get<std::string>();
  if (solver == "nl") {
    a.solver = AlgorithmSpec::Solver::Nl;
  } else if (solver == "qubo-sa") {
    a.solver = AlgorithmSpec::Solver::QuboSa;
  } else {
    throw ParseError("algorithm '" + a.id + "': unknown solver '" + solver + "'");
  }
  if (j.contains("cm")) a.nl.cm_kind = parse_cm_kind(j["cm"].get<std::string>());
  if (j.contains("branches")) a.nl.n_branches = j["branches"].get<std::size_t>();
  if (j.contains("qm")) a.nl.qm_enabled = j["qm"].get<bool>();
  if (j.contains("qm_period")) a.nl.qm_period = j["qm_period"].get<std::size_t>();
  if (j.contains("qm_window")) a.nl.qm_window = j["qm_window"].get<std::size_t>();
  if (j.contains("qm_reads")) a.nl.qm_reads = j["qm_reads"].get<std::size_t>();
  if (j.contains("qm_sweeps")) a.nl.qm_sweeps = j["qm_sweeps"].get<std::size_t>();
  if (j.contains("tabu_candidates")) {
    a.nl.tabu_candidates = j["tabu_candidates"].get<std::size_t>();
  }
  if (j.contains("time_limit")) a.time_limit = j["time_limit"].get<double>();
  if (j.contains("reads")) a.sa.reads = j["reads"].get<std::size_t>();
  if (j.contains("sweeps")) a.sa.sweeps = j["sweeps"].get<std::size_t>();
  if (j.contains("penalty")) a.penalty = PenaltyConfig::fixed(j["penalty"].get<double>());
  return a;
}

}  // namespace

ExperimentPlan ExperimentPlan::from_json(std::string_view text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("plan: ") + e.what());
  }
  try {
    check_keys(doc, {"instances", "algorithms", "runs", "time_limit", "master_seed",
                     "optima", "ratios"},
               "plan");
    ExperimentPlan plan;
    auto resolve = [&](const std::string& p) {
      fs::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    for (const auto& ji : doc.at("instances")) {
      check_keys(ji, {"id", "problem", "path"}, "instance");
      InstanceSpec s;
      s.path = resolve(ji.at("path").get<std::string>());
      s.kind = parse_problem_kind(ji.at("problem").get<std::string>());
      s.id = ji.contains("id") ? ji["id"].get<std::string>() : s.path.stem().string();
      plan.instances.push_back(std::move(s));
    }
    for (const auto& ja : doc.at("algorithms")) plan.algorithms.push_back(algorithm_from_json(ja));
    if (doc.contains("runs")) plan.runs = doc["runs"].get<std::size_t>();
    if (doc.contains("time_limit")) plan.time_limit = doc["time_limit"].get<double>();
    if (doc.contains("master_seed")) plan.master_seed = doc["master_seed"].get<std::uint64_t>();
    if (doc.contains("optima")) plan.optima_path = resolve(doc["optima"].get<std::string>());
    if (doc.contains("ratios")) plan.ratios = doc["ratios"].get<bool>();

    std::set<std::string> seen;
    for (const auto& i : plan.instances) {
      if (!seen.insert(i.id).second) throw ParseError("plan: duplicate instance id " + i.id);
    }
    seen.clear();
    for (const auto& a : plan.algorithms) {
      if (!seen.insert(a.id).second) throw ParseError("plan: duplicate algorithm id " + a.id);
    }
    if (plan.runs == 0) throw ParseError("plan: runs must be positive");
    if (!(plan.time_limit > 0.0)) throw ParseError("plan: time_limit must be positive");
    return plan;
  } catch (const json::exception& e) {
    throw ParseError(std::string("plan: ") + e.what());
  }
}

ExperimentPlan ExperimentPlan::load(const fs::path& path) {
  return from_json(read_text_file(path), path.parent_path());
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::string_view instance,
                        std::string_view algorithm, std::size_t run) {
  auto fnv = [](std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  };
  std::uint64_t h = Rng::derive(master_seed, fnv(instance));
  h = Rng::derive(h, fnv(algorithm));
  return Rng::derive(h, run);
}

// --- Cells ---------------------------------------------------------------------------

namespace {

QuboEncoding encode(const LoadedInstance& instance, PenaltyConfig penalty) {
  return std::visit(
      [&](const auto& inst) -> QuboEncoding {
        using T = std::decay_t<decltype(inst)>;
        if constexpr (std::is_same_v<T, TspInstance>) {
          return tsp_to_qubo(inst, penalty);
        } else if constexpr (std::is_same_v<T, KpInstance>) {
          return kp_to_qubo(inst, penalty);
        } else {
          return mcp_to_qubo(inst);
        }
      },
      instance.data);
}

}  // namespace

std::vector<Sample> solve_qubo_path(const LoadedInstance& instance, PenaltyConfig penalty,
                                    const SaParams& params) {
  const QuboEncoding enc = encode(instance, penalty);
  std::vector<Sample> samples;
  for (const auto& s : sa_sample(enc.qubo, params)) {
    DecodedSample d = enc.decode(s.bits);
    Sample smp;
    smp.objective = d.objective;
    smp.feasible = d.feasible;
    smp.violation = d.feasible ? 0.0 : 1.0;
    smp.state = std::move(d.state);
    smp.origin = "qubo";
    samples.push_back(std::move(smp));
  }
  std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    if (a.feasible != b.feasible) return a.feasible;
    return a.feasible && a.objective < b.objective;
  });
  return samples;
}

RunRecord run_cell(const LoadedInstance& instance, const AlgorithmSpec& algorithm,
                   std::size_t run, std::uint64_t seed, double time_limit,
                   std::optional<double> optimum, std::size_t threads) {
  RunRecord rec;
  rec.instance = instance.id;
  rec.problem = instance.kind;
  rec.algorithm = algorithm.id;
  rec.run = run;
  rec.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  std::vector<Sample> samples;
  if (algorithm.solver == AlgorithmSpec::Solver::Nl) {
    const Model model = instance.build_model();
    SolverConfig cfg = algorithm.nl;
    cfg.seed = seed;
    cfg.time_limit = algorithm.time_limit.value_or(time_limit);
    if (threads) cfg.threads = threads;
    samples = solve(model, cfg).samples;
  } else {
    SaParams params = algorithm.sa;
    params.seed = seed;
    samples = solve_qubo_path(instance, algorithm.penalty, params);
  }
  rec.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  rec.samples = samples.size();
  if (!samples.empty()) {
    rec.best_value = instance.native_value(samples.front().objective);
    rec.best_feasible = samples.front().feasible;
  }
  double feasible_total = 0.0;
  std::size_t feasible_count = 0;
  for (const auto& s : samples) {
    if (!s.feasible) continue;
    feasible_total += instance.native_value(s.objective);
    ++feasible_count;
  }
  if (feasible_count > 0) rec.mean_value = feasible_total / static_cast<double>(feasible_count);
  rec.feasible_fraction =
      samples.empty() ? 0.0 : static_cast<double>(feasible_count) / static_cast<double>(samples.size());
  if (optimum) {
    auto m = sampleset_metrics(samples, optimum, sense_of(instance.kind));
    rec.best_ratio = m.best_ratio;
    rec.mean_ratio = m.mean_ratio;
    rec.clamps = m.clamps;
  }
  return rec;
}

// --- CSV ----------------------------------------------------------------------------

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out += f;
      continue;
    }
    out += '"';
    for (char c : f) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
  }
  out += "\r\n";
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ParseError("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

namespace {

std::string opt_fixed(const std::optional<double>& v) {
  return v ? format_fixed(*v) : std::string();
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

const std::vector<std::string>& ResultsTable::columns() {
  static const std::vector<std::string> cols = {
      "instance",   "problem",    "algorithm",  "run",     "seed",
      "best_value", "best_feasible", "mean_value", "feasible_fraction", "wall_time",
      "best_ratio", "mean_ratio", "samples",    "clamps"};
  return cols;
}

std::string ResultsTable::record_row(const RunRecord& r) {
  return csv_row({r.instance, std::string(to_string(r.problem)), r.algorithm,
                  std::to_string(r.run), std::to_string(r.seed), format_fixed(r.best_value),
                  r.best_feasible ? "1" : "0", opt_fixed(r.mean_value),
                  format_fixed(r.feasible_fraction), format_fixed(r.wall_time, 3),
                  opt_fixed(r.best_ratio), opt_fixed(r.mean_ratio),
                  std::to_string(r.samples), std::to_string(r.clamps)});
}

std::string ResultsTable::to_csv() const {
  std::string out = csv_row(columns());
  for (const auto& r : records) out += record_row(r);
  return out;
}

ResultsTable ResultsTable::from_csv(std::string_view text) {
  auto rows = parse_csv(text);
  ResultsTable t;
  if (rows.empty()) return t;
  if (rows.front() != columns()) throw ParseError("results: unexpected header");
  try {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& f = rows[i];
      if (f.size() != columns().size()) {
        throw ParseError("results row " + std::to_string(i) + ": wrong field count");
      }
      RunRecord r;
      r.instance = f[0];
      r.problem = parse_problem_kind(f[1]);
      r.algorithm = f[2];
      r.run = std::stoull(f[3]);
      r.seed = std::stoull(f[4]);
      r.best_value = std::stod(f[5]);
      r.best_feasible = f[6] == "1";
      r.mean_value = parse_opt(f[7]);
      r.feasible_fraction = std::stod(f[8]);
      r.wall_time = std::stod(f[9]);
      r.best_ratio = parse_opt(f[10]);
      r.mean_ratio = parse_opt(f[11]);
      r.samples = std::stoull(f[12]);
      r.clamps = std::stoull(f[13]);
      t.records.push_back(std::move(r));
    }
  } catch (const std::logic_error& e) {
    throw ParseError(std::string("results: bad number: ") + e.what());
  }
  return t;
}

ResultsTable ResultsTable::load(const fs::path& path) { return from_csv(read_text_file(path)); }

bool ResultsTable::contains(std::string_view instance, std::string_view algorithm,
                            std::size_t run) const {
  return std::any_of(records.begin(), records.end(), [&](const RunRecord& r) {
    return r.instance == instance && r.algorithm == algorithm && r.run == run;
  });
}

std::size_t ResultsTable::count(std::string_view instance, std::string_view algorithm) const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const RunRecord& r) {
    return r.instance == instance && r.algorithm == algorithm;
  }));
}

// --- Experiment ---------------------------------------------------------------------

ResultsTable run_experiment(const ExperimentPlan& plan, const ExperimentOptions& options) {
  std::vector<LoadedInstance> instances;
  for (const auto& spec : plan.instances) {
    instances.push_back(load_instance(spec.kind, spec.path, spec.id));
  }

  std::map<std::string, double> optima;
  if (plan.optima_path) optima = read_optima(*plan.optima_path);
  std::vector<std::optional<double>> optimum(instances.size());
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (auto it = optima.find(instances[i].id); it != optima.end()) {
      optimum[i] = it->second;
    } else if (plan.ratios) {
      optimum[i] = exact_optimum(instances[i]);
      if (!optimum[i]) missing.push_back(instances[i].id);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw MetricError("no reference optimum for: " + list);
  }

  ResultsTable table;
  if (options.resume && !options.log_path.empty() && fs::exists(options.log_path)) {
    table = ResultsTable::load(options.log_path);
  }
  std::ofstream log;
  if (!options.log_path.empty()) {
    if (options.log_path.has_parent_path()) fs::create_directories(options.log_path.parent_path());
    const bool append = options.resume && fs::exists(options.log_path) &&
                        fs::file_size(options.log_path) > 0;
    log.open(options.log_path, append ? std::ios::app | std::ios::binary
                                      : std::ios::trunc | std::ios::binary);
    if (!log) throw ParseError("cannot write " + options.log_path.string());
    if (!append) log << csv_row(ResultsTable::columns()) << std::flush;
  }

  struct Cell {
    std::size_t instance;
    std::size_t algorithm;
    std::size_t run;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t a = 0; a < plan.algorithms.size(); ++a) {
      for (std::size_t r = 0; r < plan.runs; ++r) {
        if (!table.contains(instances[i].id, plan.algorithms[a].id, r)) cells.push_back({i, a, r});
      }
    }
  }

  std::mutex mu;
  auto execute = [&](const Cell& c) {
    const auto& inst = instances[c.instance];
    const auto& alg = plan.algorithms[c.algorithm];
    const std::size_t solver_threads = options.threads > 1 ? 1 : 0;
    RunRecord rec = run_cell(inst, alg, c.run, cell_seed(plan.master_seed, inst.id, alg.id, c.run),
                             plan.time_limit, optimum[c.instance], solver_threads);
    std::lock_guard lock(mu);
    if (log.is_open()) log << ResultsTable::record_row(rec) << std::flush;
    if (options.on_record) options.on_record(rec);
    table.records.push_back(std::move(rec));
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, cells.size()));
  if (workers <= 1) {
    for (const auto& c : cells) execute(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < cells.size(); k = next++) {
          try {
            execute(cells[k]);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  // Canonical order: plan order of instances, algorithms, runs.
  auto order_of = [&](const RunRecord& r) {
    std::size_t i = 0;
    while (i < instances.size() && instances[i].id != r.instance) ++i;
    std::size_t a = 0;
    while (a < plan.algorithms.size() && plan.algorithms[a].id != r.algorithm) ++a;
    return std::tuple(i, a, r.run);
  };
  std::stable_sort(table.records.begin(), table.records.end(),
                   [&](const RunRecord& x, const RunRecord& y) { return order_of(x) < order_of(y); });
  return table;
}

// --- Report ---------------------------------------------------------------------------

std::vector<Aggregate> aggregate(const ResultsTable& table) {
  std::vector<Aggregate> out;
  std::vector<std::size_t> ratio_count;
  std::vector<std::size_t> mean_ratio_count;
  for (const auto& r : table.records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) {
      return a.instance == r.instance && a.algorithm == r.algorithm;
    });
    if (it == out.end()) {
      Aggregate a;
      a.instance = r.instance;
      a.problem = r.problem;
      a.algorithm = r.algorithm;
      a.best_value_min = r.best_value;
      a.best_value_max = r.best_value;
      out.push_back(std::move(a));
      ratio_count.push_back(0);
      mean_ratio_count.push_back(0);
      it = out.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - out.begin());
    Aggregate& a = *it;
    ++a.runs;
    a.best_value_mean += r.best_value;
    a.best_value_min = std::min(a.best_value_min, r.best_value);
    a.best_value_max = std::max(a.best_value_max, r.best_value);
    a.feasible_fraction_mean += r.feasible_fraction;
    a.wall_time_mean += r.wall_time;
    if (r.best_ratio) {
      a.best_ratio_mean = a.best_ratio_mean.value_or(0.0) + *r.best_ratio;
      ++ratio_count[k];
    }
    if (r.mean_ratio) {
      a.mean_ratio_mean = a.mean_ratio_mean.value_or(0.0) + *r.mean_ratio;
      ++mean_ratio_count[k];
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    Aggregate& a = out[k];
    const double n = static_cast<double>(a.runs);
    a.best_value_mean /= n;
    a.feasible_fraction_mean /= n;
    a.wall_time_mean /= n;
    if (a.best_ratio_mean) *a.best_ratio_mean /= static_cast<double>(ratio_count[k]);
    if (a.mean_ratio_mean) *a.mean_ratio_mean /= static_cast<double>(mean_ratio_count[k]);
  }
  return out;
}

std::string aggregates_csv(const std::vector<Aggregate>& aggregates) {
  std::string out = csv_row({"instance", "problem", "algorithm", "runs", "best_value_mean",
                             "best_value_min", "best_value_max", "best_ratio_mean",
                             "mean_ratio_mean", "feasible_fraction_mean", "wall_time_mean"});
  for (const auto& a : aggregates) {
    out += csv_row({a.instance, std::string(to_string(a.problem)), a.algorithm,
                    std::to_string(a.runs), format_fixed(a.best_value_mean),
                    format_fixed(a.best_value_min), format_fixed(a.best_value_max),
                    opt_fixed(a.best_ratio_mean), opt_fixed(a.mean_ratio_mean),
                    format_fixed(a.feasible_fraction_mean), format_fixed(a.wall_time_mean, 3)});
  }
  return out;
}

namespace {

void write_file(const fs::path& path, const std::string& content,
                std::vector<fs::path>& written) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << content;
  written.push_back(path);
}

// Instances (rows) x algorithms (columns) of a per-aggregate metric; rows
// with a missing cell are dropped.
struct ScoreMatrix {
  std::vector<std::string> instances;
  std::vector<std::string> algorithms;
  std::vector<std::vector<double>> scores;
};

ScoreMatrix score_matrix(const std::vector<Aggregate>& aggs, ProblemKind problem,
                         std::optional<double> Aggregate::*metric) {
  ScoreMatrix m;
  for (const auto& a : aggs) {
    if (a.problem != problem) continue;
    if (std::find(m.algorithms.begin(), m.algorithms.end(), a.algorithm) == m.algorithms.end()) {
      m.algorithms.push_back(a.algorithm);
    }
    if (std::find(m.instances.begin(), m.instances.end(), a.instance) == m.instances.end()) {
      m.instances.push_back(a.instance);
    }
  }
  std::vector<std::string> kept;
  for (const auto& inst : m.instances) {
    std::vector<double> row;
    for (const auto& alg : m.algorithms) {
      auto it = std::find_if(aggs.begin(), aggs.end(), [&](const Aggregate& a) {
        return a.instance == inst && a.algorithm == alg;
      });
      if (it == aggs.end() || !((*it).*metric)) break;
      row.push_back(*((*it).*metric));
    }
    if (row.size() == m.algorithms.size()) {
      kept.push_back(inst);
      m.scores.push_back(std::move(row));
    }
  }
  m.instances = std::move(kept);
  return m;
}

}  // namespace

std::vector<fs::path> emit_report(const ResultsTable& table, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  write_file(out_dir / "raw.csv", table.to_csv(), written);
  const auto aggs = aggregate(table);
  write_file(out_dir / "aggregates.csv", aggregates_csv(aggs), written);

  std::vector<ProblemKind> problems;
  for (const auto& a : aggs) {
    if (std::find(problems.begin(), problems.end(), a.problem) == problems.end()) {
      problems.push_back(a.problem);
    }
  }

  std::string stats = csv_row({"problem", "metric", "row", "algorithm", "avg_rank",
                               "statistic", "critical", "p_unadjusted", "p_adjusted",
                               "significant"});
  std::string wilcoxon = csv_row({"problem", "instance", "control", "algorithm", "rank_sum",
                                  "z", "p", "symbol"});
  const std::pair<const char*, std::optional<double> Aggregate::*> metrics[] = {
      {"best_ratio", &Aggregate::best_ratio_mean},
      {"mean_ratio", &Aggregate::mean_ratio_mean}};

  for (ProblemKind problem : problems) {
    const std::string pname(to_string(problem));
    std::optional<std::string> control;
    for (const auto& [mname, member] : metrics) {
      const ScoreMatrix m = score_matrix(aggs, problem, member);
      if (m.instances.empty()) continue;

      std::string plot = csv_row([&] {
        std::vector<std::string> h{"instance"};
        h.insert(h.end(), m.algorithms.begin(), m.algorithms.end());
        return h;
      }());
      for (std::size_t i = 0; i < m.instances.size(); ++i) {
        std::vector<std::string> row{m.instances[i]};
        for (double v : m.scores[i]) row.push_back(format_fixed(v, 6));
        plot += csv_row(row);
      }
      write_file(out_dir / ("plot_" + pname + "_" + mname + ".csv"), plot, written);

      const RankSummary s = average_ranks(m.scores, ScoreDirection::HigherBetter, m.algorithms);
      const std::size_t best = static_cast<std::size_t>(
          std::min_element(s.avg_ranks.begin(), s.avg_ranks.end()) - s.avg_ranks.begin());
      if (!control) control = s.algorithms[best];
      for (std::size_t j = 0; j < s.k; ++j) {
        stats += csv_row({pname, mname, "rank", s.algorithms[j], format_sig(s.avg_ranks[j]),
                          "", "", "", "", ""});
      }
      if (s.k >= 2) {
        const FriedmanResult f = friedman_statistic(s);
        stats += csv_row({pname, mname, "friedman", "", "", format_sig(f.statistic),
                          format_sig(f.critical), "", "", f.significant ? "1" : "0"});
        for (const auto& h : holm_posthoc(s, s.algorithms[best])) {
          stats += csv_row({pname, mname, "holm", h.algorithm, format_sig(h.avg_rank),
                            format_sig(h.z), "", format_sig(h.p_unadjusted),
                            format_sig(h.p_adjusted), h.p_adjusted < 0.05 ? "1" : "0"});
        }
      }
    }

    // Per-instance rank-sum tests of every algorithm against the control
    // on per-run best values.
    std::vector<std::string> algorithms;
    std::vector<std::string> instances;
    for (const auto& r : table.records) {
      if (r.problem != problem) continue;
      if (std::find(algorithms.begin(), algorithms.end(), r.algorithm) == algorithms.end()) {
        algorithms.push_back(r.algorithm);
      }
      if (std::find(instances.begin(), instances.end(), r.instance) == instances.end()) {
        instances.push_back(r.instance);
      }
    }
    if (!control && !algorithms.empty()) control = algorithms.front();
    const ScoreDirection dir = sense_of(problem) == Sense::Minimize
                                   ? ScoreDirection::LowerBetter
                                   : ScoreDirection::HigherBetter;
    auto values = [&](const std::string& inst, const std::string& alg) {
      std::vector<double> v;
      for (const auto& r : table.records) {
        if (r.instance == inst && r.algorithm == alg) v.push_back(r.best_value);
      }
      return v;
    };
    for (const auto& inst : instances) {
      const auto base = values(inst, *control);
      if (base.empty()) continue;
      for (const auto& alg : algorithms) {
        if (alg == *control) continue;
        const auto other = values(inst, alg);
        if (other.empty()) continue;
        const WilcoxonResult w = wilcoxon_rank_sum(base, other, dir);
        wilcoxon += csv_row({pname, inst, *control, alg, format_sig(w.rank_sum),
                             format_sig(w.z), format_sig(w.p), w.symbol});
      }
    }
  }
  write_file(out_dir / "stats.csv", stats, written);
  write_file(out_dir / "wilcoxon.csv", wilcoxon, written);
  return written;
}

}  // namespace combopt
