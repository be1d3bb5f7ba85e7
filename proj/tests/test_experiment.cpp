#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "combopt/experiment.hpp"

namespace combopt {
namespace {

namespace fs = std::filesystem;
const fs::path kData = COMBOPT_TEST_DATA;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("combopt_test_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string plan_json(std::size_t runs, const std::string& extra_alg = "") {
  return R"({
    "instances": [{"id": "mc10", "problem": "maxcut", "path": "maxcut/mc10.txt"}],
    "algorithms": [{"id": "NL", "solver": "nl", "branches": 1, "time_limit": 0.3})" +
         extra_alg + R"(],
    "runs": )" + std::to_string(runs) +
         R"(,
    "time_limit": 0.3,
    "master_seed": 7,
    "optima": "optima.txt"
  })";
}

TEST(Plan, ParsesAndResolvesPaths) {
  auto plan = ExperimentPlan::from_json(
      plan_json(2, R"(, {"id": "SA", "solver": "qubo-sa", "reads": 5, "sweeps": 50, "penalty": 3.5})"),
      kData);
  ASSERT_EQ(plan.instances.size(), 1u);
  EXPECT_EQ(plan.instances[0].kind, ProblemKind::MaxCut);
  EXPECT_EQ(plan.instances[0].path, kData / "maxcut/mc10.txt");
  ASSERT_EQ(plan.algorithms.size(), 2u);
  EXPECT_EQ(plan.algorithms[0].solver, AlgorithmSpec::Solver::Nl);
  EXPECT_EQ(*plan.algorithms[0].nl.n_branches, 1u);
  EXPECT_EQ(plan.algorithms[1].solver, AlgorithmSpec::Solver::QuboSa);
  EXPECT_EQ(plan.algorithms[1].sa.reads, 5u);
  EXPECT_EQ(plan.algorithms[1].penalty.mode, PenaltyConfig::Mode::Fixed);
  EXPECT_EQ(plan.runs, 2u);
  EXPECT_EQ(plan.master_seed, 7u);
  EXPECT_EQ(*plan.optima_path, kData / "optima.txt");
}

TEST(Plan, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ExperimentPlan::from_json(R"({"instances": [], "algorithms": [], "bogus": 1})"),
               ParseError);
  EXPECT_THROW(ExperimentPlan::from_json(
                   R"({"instances": [{"id": "x", "problem": "vrp", "path": "a"}], "algorithms": []})"),
               ParseError);
  EXPECT_THROW(ExperimentPlan::from_json("[1, 2"), ParseError);
}

TEST(Optima, ParseFile) {
  auto m = parse_optima("# comment\neil51 426\n\nberlin52 7542 # trailing\n");
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.at("eil51"), 426.0);
  EXPECT_THROW(parse_optima("eil51\n"), ParseError);
  EXPECT_EQ(read_optima(kData / "optima.txt").at("mc10"), 149.0);
}

TEST(CellSeed, StableAndDistinct) {
  EXPECT_EQ(cell_seed(1, "a", "b", 0), cell_seed(1, "a", "b", 0));
  EXPECT_NE(cell_seed(1, "a", "b", 0), cell_seed(1, "a", "b", 1));
  EXPECT_NE(cell_seed(1, "a", "b", 0), cell_seed(2, "a", "b", 0));
  EXPECT_NE(cell_seed(1, "ab", "c", 0), cell_seed(1, "a", "bc", 0));
}

TEST(Experiment, SingleCellCompletes) {
  auto plan = ExperimentPlan::from_json(plan_json(1), kData);
  ResultsTable t = run_experiment(plan, {});
  ASSERT_EQ(t.records.size(), 1u);
  const RunRecord& r = t.records[0];
  EXPECT_EQ(r.instance, "mc10");
  EXPECT_EQ(r.problem, ProblemKind::MaxCut);
  EXPECT_TRUE(r.best_feasible);
  EXPECT_GT(r.best_value, 0.0);
  ASSERT_TRUE(r.best_ratio);
  EXPECT_DOUBLE_EQ(*r.best_ratio, r.best_value / 149.0);
  EXPECT_EQ(r.seed, cell_seed(7, "mc10", "NL", 0));
}

TEST(Experiment, ResumeIsIdempotent) {
  TempDir dir;
  auto plan = ExperimentPlan::from_json(plan_json(3), kData);
  ExperimentOptions opt;
  opt.log_path = dir.path() / "results.csv";
  ResultsTable first = run_experiment(plan, opt);
  EXPECT_EQ(first.count("mc10", "NL"), 3u);
  const std::string before = read_text_file(opt.log_path);

  opt.resume = true;
  std::size_t executed = 0;
  opt.on_record = [&](const RunRecord&) { ++executed; };
  ResultsTable again = run_experiment(plan, opt);
  EXPECT_EQ(executed, 0u);
  EXPECT_EQ(again.records.size(), 3u);
  EXPECT_EQ(read_text_file(opt.log_path), before);

  // Extending the plan runs only the missing cells.
  auto bigger = ExperimentPlan::from_json(plan_json(5), kData);
  ResultsTable more = run_experiment(bigger, opt);
  EXPECT_EQ(executed, 2u);
  EXPECT_EQ(more.count("mc10", "NL"), 5u);
  EXPECT_EQ(ResultsTable::load(opt.log_path).records.size(), 5u);
}

TEST(Experiment, MissingOptimumIsMetricError) {
  TempDir dir;
  std::ofstream(dir.path() / "empty.txt") << "";
  auto plan = ExperimentPlan::from_json(R"({
    "instances": [{"id": "eil51", "problem": "tsp", "path": ")" +
                                            (kData / "tsp/eil51.tsp").string() + R"("}],
    "algorithms": [{"id": "NL", "solver": "nl"}],
    "runs": 1, "optima": "empty.txt"})",
                                        dir.path());
  try {
    run_experiment(plan, {});
    FAIL() << "expected MetricError";
  } catch (const MetricError& e) {
    EXPECT_NE(std::string(e.what()).find("eil51"), std::string::npos);
  }
}

TEST(Experiment, QuboBaselineCell) {
  LoadedInstance inst = load_instance(ProblemKind::Kp, kData / "kp" / "s50_syn.kp");
  EXPECT_EQ(inst.id, "s50_syn");
  AlgorithmSpec alg;
  alg.id = "SA";
  alg.solver = AlgorithmSpec::Solver::QuboSa;
  alg.sa.reads = 10;
  alg.sa.sweeps = 200;
  RunRecord r = run_cell(inst, alg, 0, 5, 1.0, 20930.0);
  EXPECT_EQ(r.samples, 10u);
  ASSERT_TRUE(r.best_ratio);
  EXPECT_LE(*r.best_ratio, 1.0);
  EXPECT_GE(r.feasible_fraction, 0.0);
  EXPECT_LE(r.feasible_fraction, 1.0);
}

RunRecord record(const std::string& inst, const std::string& alg, std::size_t run, double value,
                 double ratio) {
  RunRecord r;
  r.instance = inst;
  r.problem = ProblemKind::Tsp;
  r.algorithm = alg;
  r.run = run;
  r.seed = 1000 + run;
  r.best_value = value;
  r.best_feasible = true;
  r.mean_value = value * 1.1;
  r.feasible_fraction = 1.0;
  r.wall_time = 0.25;
  r.best_ratio = ratio;
  r.mean_ratio = ratio * 0.9;
  r.samples = 4;
  return r;
}

TEST(Results, CsvRoundTrip) {
  ResultsTable t;
  t.records.push_back(record("a,b \"q\"", "NL", 0, 426, 1.0));
  RunRecord sparse = record("x", "SA", 1, 500, 0.852);
  sparse.mean_value.reset();
  sparse.best_ratio.reset();
  sparse.mean_ratio.reset();
  sparse.best_feasible = false;
  t.records.push_back(sparse);
  ResultsTable back = ResultsTable::from_csv(t.to_csv());
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[0].instance, "a,b \"q\"");
  EXPECT_EQ(back.records[0].best_value, 426.0);
  EXPECT_EQ(back.records[0].seed, 1000u);
  EXPECT_FALSE(back.records[1].mean_value);
  EXPECT_FALSE(back.records[1].best_ratio);
  EXPECT_FALSE(back.records[1].best_feasible);
  EXPECT_EQ(back.to_csv(), t.to_csv());
  EXPECT_THROW(ResultsTable::from_csv("instance,problem\nx,tsp\n"), ParseError);
}

TEST(Report, EmptyTableWritesHeaders) {
  TempDir dir;
  auto files = emit_report(ResultsTable{}, dir.path());
  ASSERT_FALSE(files.empty());
  for (const char* name : {"raw.csv", "aggregates.csv", "stats.csv", "wilcoxon.csv"}) {
    const std::string text = read_text_file(dir.path() / name);
    auto rows = parse_csv(text);
    ASSERT_EQ(rows.size(), 1u) << name;
    EXPECT_GT(rows[0].size(), 1u);
  }
}

TEST(Report, IdenticalRunsAggregateToThemselves) {
  ResultsTable t;
  for (std::size_t r = 0; r < 10; ++r) t.records.push_back(record("eil51", "NL", r, 440, 426.0 / 440));
  auto agg = aggregate(t);
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_EQ(agg[0].runs, 10u);
  EXPECT_DOUBLE_EQ(agg[0].best_value_mean, 440.0);
  EXPECT_DOUBLE_EQ(agg[0].best_value_min, 440.0);
  EXPECT_DOUBLE_EQ(agg[0].best_value_max, 440.0);
  EXPECT_DOUBLE_EQ(*agg[0].best_ratio_mean, 426.0 / 440);
}

TEST(Report, ReparsedRawReproducesAggregates) {
  TempDir dir;
  ResultsTable t;
  const char* algs[] = {"NL", "CQM", "BQM"};
  for (int i = 0; i < 5; ++i) {
    for (int a = 0; a < 3; ++a) {
      for (std::size_t r = 0; r < 4; ++r) {
        const double v = 100 + 10 * a + static_cast<double>(r) + i;
        t.records.push_back(record("i" + std::to_string(i), algs[a], r, v, 100.0 / v));
      }
    }
  }
  emit_report(t, dir.path());
  // Raw values carry 9 decimals, so reparsed aggregates agree to that precision.
  ResultsTable raw = ResultsTable::load(dir.path() / "raw.csv");
  auto expect = parse_csv(read_text_file(dir.path() / "aggregates.csv"));
  auto got = parse_csv(aggregates_csv(aggregate(raw)));
  ASSERT_EQ(got.size(), expect.size());
  ASSERT_EQ(got.size(), 16u);
  EXPECT_EQ(got[0], expect[0]);
  for (std::size_t r = 1; r < got.size(); ++r) {
    ASSERT_EQ(got[r].size(), expect[r].size());
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(got[r][c], expect[r][c]);
    for (std::size_t c = 3; c < got[r].size(); ++c) {
      EXPECT_NEAR(std::stod(got[r][c]), std::stod(expect[r][c]), 2e-9) << r << "," << c;
    }
  }

  auto stats = parse_csv(read_text_file(dir.path() / "stats.csv"));
  bool friedman = false;
  for (const auto& row : stats) {
    if (row.size() > 2 && row[2] == "friedman") friedman = true;
  }
  EXPECT_TRUE(friedman);
  EXPECT_TRUE(fs::exists(dir.path() / "plot_tsp_best_ratio.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "plot_tsp_mean_ratio.csv"));
  auto wil = parse_csv(read_text_file(dir.path() / "wilcoxon.csv"));
  EXPECT_EQ(wil.size(), 1u + 5u * 2u);  // header + per instance, two non-control algorithms
}

TEST(Csv, QuotingAndLineEndings) {
  EXPECT_EQ(csv_row({"a", "b,c", "d\"e"}), "a,\"b,c\",\"d\"\"e\"\r\n");
  auto rows = parse_csv("x,\"y,z\"\r\n1,\"2\"\"3\"\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][1], "y,z");
  EXPECT_EQ(rows[1][1], "2\"3");
  EXPECT_EQ(format_fixed(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_fixed(2.0, 3), "2.000");
}

}  // namespace
}  // namespace combopt
