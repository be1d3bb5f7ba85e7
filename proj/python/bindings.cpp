#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "combopt/errors.hpp"
#include "combopt/experiment.hpp"
#include "combopt/model.hpp"
#include "combopt/problems.hpp"
#include "combopt/qubo.hpp"
#include "combopt/solver.hpp"
#include "combopt/stats.hpp"

namespace py = pybind11;
using namespace combopt;

namespace {

// Python states are nested lists: decision -> part -> elements.
using PyState = std::vector<std::vector<std::vector<std::int64_t>>>;

State to_state(const PyState& s) {
  State out;
  for (const auto& parts : s) out.decisions.push_back(DecisionValue{parts});
  return out;
}

PyState from_state(const State& s) {
  PyState out;
  for (const auto& d : s.decisions) out.push_back(d.parts);
  return out;
}

py::dict evaluation_dict(const Evaluation& e) {
  py::dict d;
  d["objective"] = e.objective;
  d["feasible"] = e.feasible;
  d["constraints"] = std::vector<bool>(e.constraint_results.begin(), e.constraint_results.end());
  d["violations"] = e.violations;
  d["total_violation"] = e.total_violation();
  return d;
}

SolverConfig make_config(std::optional<double> time_limit, std::optional<std::size_t> branches,
                         std::uint64_t seed, const std::string& cm, bool qm,
                         std::uint64_t max_iterations, std::optional<double> target,
                         bool deterministic, std::size_t threads) {
  SolverConfig c;
  c.time_limit = time_limit;
  c.n_branches = branches;
  c.seed = seed;
  c.cm_kind = parse_cm_kind(cm);
  c.qm_enabled = qm;
  c.max_iterations = max_iterations;
  c.target_objective = target;
  c.deterministic = deterministic;
  c.threads = threads;
  c.validate();
  return c;
}

DecisionKind parse_kind(const std::string& k) {
  if (k == "list") return DecisionKind::List;
  if (k == "set") return DecisionKind::Set;
  if (k == "disjoint_lists") return DecisionKind::DisjointLists;
  if (k == "disjoint_bit_sets") return DecisionKind::DisjointBitSets;
  if (k == "binary") return DecisionKind::Binary;
  if (k == "integer") return DecisionKind::Integer;
  throw DomainError("unknown decision kind: " + k);
}

ScoreDirection direction(bool higher_better) {
  return higher_better ? ScoreDirection::HigherBetter : ScoreDirection::LowerBetter;
}

py::tuple encoding_tuple(QuboEncoding enc) {
  auto decode = [d = std::move(enc.decode)](const std::vector<std::uint8_t>& bits) {
    DecodedSample s = d(bits);
    py::dict r;
    r["feasible"] = s.feasible;
    r["state"] = from_state(s.state);
    r["objective"] = s.objective;
    return r;
  };
  return py::make_tuple(std::move(enc.qubo), enc.penalty, py::cpp_function(decode));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid combinatorial optimization core";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<TypeErrorDomain>(m, "TypeErrorDomain", error.ptr());
  py::register_exception<StateError>(m, "StateError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<SizeError>(m, "SizeError", error.ptr());
  py::register_exception<MetricError>(m, "MetricError", error.ptr());

  // Expression model. Nodes are plain integer ids.
  py::class_<Model>(m, "Model")
      .def(py::init<>())
      .def(
          "add_decision",
          [](Model& self, const std::string& kind, std::size_t size, std::size_t groups,
             std::int64_t lower, std::int64_t upper) {
            DecisionSpec s{parse_kind(kind), size, groups, lower, upper};
            if (s.kind == DecisionKind::Binary) s.upper = 1;
            return self.add_decision(s).node;
          },
          py::arg("kind"), py::arg("size"), py::arg("groups") = 1, py::arg("lower") = 0,
          py::arg("upper") = 1)
      .def("constant", py::overload_cast<double>(&Model::add_constant))
      .def("vector", [](Model& self, const std::vector<double>& v) { return self.add_constant(v); })
      .def("matrix",
           [](Model& self, const std::vector<std::vector<double>>& rows) {
             std::vector<double> flat;
             const std::size_t cols = rows.empty() ? 0 : rows.front().size();
             for (const auto& r : rows) {
               if (r.size() != cols) throw ShapeError("ragged matrix");
               flat.insert(flat.end(), r.begin(), r.end());
             }
             return self.add_constant(flat, rows.size(), cols);
           })
      .def("add", &Model::add)
      .def("sub", &Model::sub)
      .def("mul", &Model::mul)
      .def("neg", &Model::neg)
      .def("abs", &Model::abs)
      .def("sum", &Model::sum)
      .def("le", &Model::le)
      .def("ge", &Model::ge)
      .def("eq", &Model::eq)
      .def("index", [](Model& self, NodeId base,
                       const std::vector<NodeId>& idx) { return self.index(base, idx); })
      .def("slice", &Model::slice, py::arg("base"), py::arg("start") = py::none(),
           py::arg("stop") = py::none())
      .def("add_constraint", &Model::add_constraint)
      .def("minimize", &Model::minimize)
      .def("freeze", &Model::freeze)
      .def_property_readonly("node_count", [](const Model& self) { return self.nodes().size(); })
      .def_property_readonly("constraint_count",
                             [](const Model& self) { return self.constraints().size(); })
      .def("validate_state",
           [](const Model& self, const PyState& s) { return self.validate_state(to_state(s)); })
      .def("evaluate", [](const Model& self, const PyState& s) {
        return evaluation_dict(self.evaluate(to_state(s)));
      });

  // Problem instances.
  py::class_<TspInstance>(m, "TspInstance")
      .def(py::init<>())
      .def_readwrite("name", &TspInstance::name)
      .def_readwrite("n", &TspInstance::n)
      .def_readwrite("cost", &TspInstance::cost)
      .def("at", &TspInstance::at)
      .def("validate", &TspInstance::validate);
  py::class_<KpInstance>(m, "KpInstance")
      .def(py::init<>())
      .def_readwrite("name", &KpInstance::name)
      .def_readwrite("profits", &KpInstance::profits)
      .def_readwrite("weights", &KpInstance::weights)
      .def_readwrite("capacity", &KpInstance::capacity)
      .def("__len__", &KpInstance::size)
      .def("validate", &KpInstance::validate);
  py::class_<McInstance>(m, "McInstance")
      .def(py::init<>())
      .def_readwrite("name", &McInstance::name)
      .def_readwrite("n", &McInstance::n)
      .def_property(
          "edges",
          [](const McInstance& self) {
            std::vector<std::tuple<std::size_t, std::size_t, double>> out;
            for (const auto& e : self.edges) out.emplace_back(e.u, e.v, e.w);
            return out;
          },
          [](McInstance& self, const std::vector<std::tuple<std::size_t, std::size_t, double>>& es) {
            self.edges.clear();
            for (const auto& [u, v, w] : es) self.edges.push_back({u, v, w});
          })
      .def("validate", &McInstance::validate);

  m.def("parse_tsplib", &parse_tsplib, py::arg("text"), py::arg("name") = "");
  m.def("parse_kplib", &parse_kplib, py::arg("text"), py::arg("name") = "");
  m.def("parse_maxcut", &parse_maxcut, py::arg("text"), py::arg("name") = "");
  m.def("load_tsplib", &load_tsplib);
  m.def("load_kplib", &load_kplib);
  m.def("load_maxcut", &load_maxcut);
  m.def("emit_tsplib", &emit_tsplib);
  m.def("emit_kplib", &emit_kplib);
  m.def("emit_maxcut", &emit_maxcut);
  m.def("generate_random_maxcut", &generate_random_maxcut, py::arg("n"), py::arg("density"),
        py::arg("min_w"), py::arg("max_w"), py::arg("seed"));
  m.def("build_tsp_model", &build_tsp_model);
  m.def("build_kp_model", &build_kp_model);
  m.def("build_mcp_model", &build_mcp_model);
  m.def("tsp_tour_cost", [](const TspInstance& i, const std::vector<std::int64_t>& t) {
    return tsp_tour_cost(i, t);
  });
  m.def("maxcut_value", [](const McInstance& i, const std::vector<std::int64_t>& s) {
    return maxcut_value(i, s);
  });
  m.def("exact_tsp", [](const TspInstance& i) {
    auto s = exact_tsp(i);
    return py::make_tuple(s.value, s.tour);
  });
  m.def("exact_kp", [](const KpInstance& i) {
    auto s = exact_kp(i);
    return py::make_tuple(s.value, s.items);
  });
  m.def("exact_maxcut", [](const McInstance& i) {
    auto s = exact_maxcut(i);
    return py::make_tuple(s.value, s.sides);
  });

  // Hybrid solver.
  py::class_<Sample>(m, "Sample")
      .def_property_readonly("state", [](const Sample& s) { return from_state(s.state); })
      .def_readonly("objective", &Sample::objective)
      .def_readonly("feasible", &Sample::feasible)
      .def_readonly("violation", &Sample::violation)
      .def_readonly("branch", &Sample::branch)
      .def_readonly("iteration", &Sample::iteration)
      .def_readonly("time", &Sample::time)
      .def_readonly("origin", &Sample::origin);
  py::class_<SampleSet>(m, "SampleSet")
      .def_readonly("samples", &SampleSet::samples)
      .def_readonly("wall_time", &SampleSet::wall_time)
      .def_property_readonly("best", &SampleSet::best, py::return_value_policy::reference_internal)
      .def_property_readonly("trace",
                             [](const SampleSet& s) {
                               std::vector<std::tuple<double, double, bool>> out;
                               for (const auto& c : s.trace)
                                 out.emplace_back(c.time, c.objective, c.feasible);
                               return out;
                             })
      .def("__len__", [](const SampleSet& s) { return s.samples.size(); })
      .def("to_json", &to_json, py::arg("include_timing") = true);
  m.def("sampleset_from_json", &sampleset_from_json);

  m.def(
      "solve",
      [](const Model& model, std::optional<double> time_limit, std::optional<std::size_t> branches,
         std::uint64_t seed, const std::string& cm, bool qm, std::uint64_t max_iterations,
         std::optional<double> target, bool deterministic, std::size_t threads) {
        SolverConfig c = make_config(time_limit, branches, seed, cm, qm, max_iterations, target,
                                     deterministic, threads);
        py::gil_scoped_release release;
        return solve(model, c);
      },
      py::arg("model"), py::kw_only(), py::arg("time_limit") = py::none(),
      py::arg("branches") = py::none(), py::arg("seed") = 0, py::arg("cm") = "sa",
      py::arg("qm") = true, py::arg("max_iterations") = 0, py::arg("target") = py::none(),
      py::arg("deterministic") = false, py::arg("threads") = 0);

  // QUBO.
  py::class_<Qubo>(m, "Qubo")
      .def(py::init<std::size_t>())
      .def("__len__", &Qubo::size)
      .def("add", &Qubo::add)
      .def("add_offset", &Qubo::add_offset)
      .def("coefficient", &Qubo::coefficient)
      .def_property_readonly("offset", &Qubo::offset)
      .def_property_readonly("terms", &Qubo::terms)
      .def("energy", [](const Qubo& q, const std::vector<std::uint8_t>& x) { return q.energy(x); })
      .def("__eq__", [](const Qubo& a, const Qubo& b) { return a == b; });

  auto penalty_of = [](std::optional<double> p) {
    return p ? PenaltyConfig::fixed(*p) : PenaltyConfig::automatic();
  };
  m.def("tsp_to_qubo", [=](const TspInstance& i, std::optional<double> p) {
    return encoding_tuple(tsp_to_qubo(i, penalty_of(p)));
  }, py::arg("instance"), py::arg("penalty") = py::none());
  m.def("kp_to_qubo", [=](const KpInstance& i, std::optional<double> p) {
    return encoding_tuple(kp_to_qubo(i, penalty_of(p)));
  }, py::arg("instance"), py::arg("penalty") = py::none());
  m.def("mcp_to_qubo", [](const McInstance& i) { return encoding_tuple(mcp_to_qubo(i)); });
  m.def("slack_coefficients", &slack_coefficients);
  m.def("write_qubo", &write_qubo);
  m.def("read_qubo", &read_qubo);
  m.def(
      "sa_sample",
      [](const Qubo& q, std::size_t reads, std::size_t sweeps, std::uint64_t seed) {
        std::vector<std::tuple<std::vector<std::uint8_t>, double>> out;
        for (auto& s : sa_sample(q, SaParams{reads, sweeps, seed, std::nullopt, std::nullopt}))
          out.emplace_back(std::move(s.bits), s.energy);
        return out;
      },
      py::arg("qubo"), py::arg("reads") = 100, py::arg("sweeps") = 1000, py::arg("seed") = 0);

  // Statistics.
  m.def(
      "approximation_ratio",
      [](double value, double optimum, bool maximize, bool feasible) {
        return approximation_ratio(value, optimum, maximize ? Sense::Maximize : Sense::Minimize,
                                   feasible);
      },
      py::arg("value"), py::arg("optimum"), py::arg("maximize") = false,
      py::arg("feasible") = true);

  py::class_<RankSummary>(m, "RankSummary")
      .def_readonly("algorithms", &RankSummary::algorithms)
      .def_readonly("avg_ranks", &RankSummary::avg_ranks)
      .def_readonly("rows", &RankSummary::rows)
      .def_readonly("n", &RankSummary::n);
  m.def(
      "average_ranks",
      [](const std::vector<std::vector<double>>& scores, std::vector<std::string> algs,
         bool higher_better) { return average_ranks(scores, direction(higher_better), algs); },
      py::arg("scores"), py::arg("algorithms") = std::vector<std::string>{},
      py::arg("higher_better") = true);
  m.def("rank_summary", &rank_summary, py::arg("avg_ranks"), py::arg("n"),
        py::arg("algorithms") = std::vector<std::string>{});
  m.def(
      "friedman",
      [](const RankSummary& s, double confidence) {
        auto r = friedman_statistic(s, confidence);
        py::dict d;
        d["statistic"] = r.statistic;
        d["df"] = r.df;
        d["critical"] = r.critical;
        d["significant"] = r.significant;
        return d;
      },
      py::arg("summary"), py::arg("confidence") = 0.99);
  m.def("holm", [](const RankSummary& s, const std::string& control) {
    py::list out;
    for (const auto& e : holm_posthoc(s, control)) {
      py::dict d;
      d["algorithm"] = e.algorithm;
      d["avg_rank"] = e.avg_rank;
      d["z"] = e.z;
      d["p"] = e.p_unadjusted;
      d["p_adjusted"] = e.p_adjusted;
      out.append(d);
    }
    return out;
  });
  m.def(
      "wilcoxon",
      [](const std::vector<double>& a, const std::vector<double>& b, bool higher_better,
         double alpha) {
        auto r = wilcoxon_rank_sum(a, b, direction(higher_better), alpha);
        py::dict d;
        d["rank_sum"] = r.rank_sum;
        d["z"] = r.z;
        d["p"] = r.p;
        d["symbol"] = r.symbol;
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("higher_better") = true, py::arg("alpha") = 0.01);
}
