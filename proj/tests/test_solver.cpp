#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "combopt/problems.hpp"
#include "combopt/qubo.hpp"
#include "combopt/solver.hpp"
#include "support/oracles.hpp"

namespace combopt {
namespace {

const std::filesystem::path kData = COMBOPT_TEST_DATA;

Evaluation eval_of(bool feasible, double objective, double violation = 0.0) {
  Evaluation e;
  e.feasible = feasible;
  e.objective = objective;
  e.violations = {violation};
  e.constraint_results = {feasible};
  return e;
}

SolverConfig quick(std::uint64_t seed, std::uint64_t iterations) {
  SolverConfig c;
  c.seed = seed;
  c.n_branches = 1;
  c.deterministic = true;
  c.max_iterations = iterations;
  c.time_limit = 60.0;
  return c;
}

Model mixed_model() {
  Model m;
  m.add_decision(DecisionSpec::list(7));
  m.add_decision(DecisionSpec::set(6));
  m.add_decision(DecisionSpec::disjoint_lists(8, 3));
  m.add_decision(DecisionSpec::disjoint_bit_sets(7, 2));
  m.add_decision(DecisionSpec::binary(5));
  m.add_decision(DecisionSpec::integer(4, -2, 3));
  m.add_decision(DecisionSpec::list(1));
  m.freeze();
  return m;
}

TEST(Compare, FeasibilityFirst) {
  EXPECT_EQ(compare(eval_of(true, 10), eval_of(false, 1, 0.5)), std::partial_ordering::less);
  EXPECT_EQ(compare(eval_of(false, 9, 1.0), eval_of(false, 1, 2.0)), std::partial_ordering::less);
  EXPECT_EQ(compare(eval_of(true, 1), eval_of(true, 2)), std::partial_ordering::less);
  EXPECT_EQ(compare(eval_of(true, 1), eval_of(true, 1)), std::partial_ordering::equivalent);
  EXPECT_EQ(compare(eval_of(true, 1), 5, eval_of(true, 1), 7), std::strong_ordering::less);
  EXPECT_EQ(compare(eval_of(true, 1), 7, eval_of(true, 1), 5), std::strong_ordering::greater);
}

TEST(InitialState, TrivialKinds) {
  Model m;
  m.add_decision(DecisionSpec::list(1));
  m.add_decision(DecisionSpec::binary(1));
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    State s = initial_state(m, rng);
    EXPECT_EQ(s.decisions[0].parts[0], std::vector<std::int64_t>{0});
    const auto b = s.decisions[1].parts[0][0];
    EXPECT_TRUE(b == 0 || b == 1);
  }
}

TEST(InitialState, PermutationsAreUniform) {
  Model m;
  m.add_decision(DecisionSpec::list(4));
  Rng rng(2024);
  std::map<std::vector<std::int64_t>, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[initial_state(m, rng).decisions[0].parts[0]];
  ASSERT_EQ(counts.size(), 24u);
  const double expected = draws / 24.0;
  double chi2 = 0.0;
  for (const auto& [perm, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 49.73);  // chi-square 99.9% quantile, df 23
}

TEST(Moves, TwoOptReversal) {
  Model m;
  m.add_decision(DecisionSpec::list(4));
  State s{{DecisionValue{{{0, 1, 2, 3}}}}};
  apply_move(m, s, Move{0, MoveKind::Reverse, 0, 0, 1, 2});
  EXPECT_EQ(s.decisions[0].parts[0], (std::vector<std::int64_t>{0, 2, 1, 3}));
}

TEST(Moves, EmptySetForcesAddFullSetForcesDrop) {
  Model m;
  m.add_decision(DecisionSpec::set(3));
  Rng rng(5);
  State empty{{DecisionValue{{{}}}}};
  State full{{DecisionValue{{{0, 1, 2}}}}};
  for (int i = 0; i < 100; ++i) {
    auto a = random_move(m, empty, 0, rng);
    ASSERT_TRUE(a);
    EXPECT_EQ(a->kind, MoveKind::Add);
    auto d = random_move(m, full, 0, rng);
    ASSERT_TRUE(d);
    EXPECT_EQ(d->kind, MoveKind::Drop);
  }
}

TEST(Moves, DegenerateDecisionsHaveNoMove) {
  Model m;
  m.add_decision(DecisionSpec::list(1));
  m.add_decision(DecisionSpec::integer(2, 3, 3));
  Rng rng(1);
  State s = initial_state(m, rng);
  EXPECT_FALSE(random_move(m, s, 0, rng));
  EXPECT_FALSE(random_move(m, s, 1, rng));
  EXPECT_FALSE(random_move(m, s, rng));
}

TEST(Moves, MillionMovesStayValid) {
  Model m = mixed_model();
  Rng rng(77);
  State s = initial_state(m, rng);
  std::map<MoveKind, int> kinds;
  std::size_t failures = 0;
  for (int t = 0; t < 1000000; ++t) {
    auto mv = random_move(m, s, rng);
    ASSERT_TRUE(mv);
    ++kinds[mv->kind];
    apply_move(m, s, *mv);
    if (!m.validate_state(s).empty()) ++failures;
  }
  EXPECT_EQ(failures, 0u);
  EXPECT_EQ(kinds.size(), 11u);  // every move kind was exercised
}

TEST(CmStep, ZeroTemperatureNeverWorsens) {
  std::mt19937_64 gen(3);
  auto kp = oracle::random_kp(20, 300, gen);
  Model m = build_kp_model(kp);
  Evaluator ev(m);
  BranchState br = make_branch(m, ev, 0, 9);
  Schedule sch;
  sch.alpha = 1.0;
  br.temperature = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const Evaluation before = br.current_eval;
    cm_step(br, ev, sch, CmKind::SimulatedAnnealing, 16);
    ASSERT_NE(compare(br.current_eval, before), std::partial_ordering::greater);
    ASSERT_EQ(br.scratch, br.current);
  }
}

TEST(CmStep, HugeTemperatureAcceptsAlmostEverything) {
  std::mt19937_64 gen(4);
  auto t = oracle::random_tsp(12, gen);
  Model m = build_tsp_model(t);
  Evaluator ev(m);
  BranchState br = make_branch(m, ev, 0, 1);
  Schedule sch;
  sch.alpha = 1.0;
  br.temperature = 1e300;
  int changed = 0;
  const int steps = 10000;
  for (int i = 0; i < steps; ++i) {
    const State before = br.current;
    cm_step(br, ev, sch, CmKind::SimulatedAnnealing, 16);
    if (!(br.current == before)) ++changed;
  }
  EXPECT_GT(changed, steps * 95 / 100);
}

TEST(CmStep, BestTracksCurrentAndTabuRuns) {
  std::mt19937_64 gen(6);
  auto t = oracle::random_tsp(9, gen);
  Model m = build_tsp_model(t);
  Evaluator ev(m);
  for (auto kind : {CmKind::SimulatedAnnealing, CmKind::TabuSearch}) {
    BranchState br = make_branch(m, ev, 0, 3);
    Schedule sch = make_schedule(m, ev, br, 20000);
    EXPECT_GT(sch.t0, 0.0);
    EXPECT_LT(sch.alpha, 1.0);
    for (int i = 0; i < 20000; ++i) {
      cm_step(br, ev, sch, kind, 16);
      ASSERT_NE(compare(br.current_eval, br.best_eval), std::partial_ordering::less);
    }
    EXPECT_EQ(m.evaluate(br.best), br.best_eval);
    EXPECT_TRUE(m.validate_state(br.current).empty());
  }
}

TEST(QmQuery, WholeMaxcutWindowEqualsDirectEncoding) {
  McInstance mc = load_maxcut(kData / "maxcut" / "mc10.txt");
  Model m = build_mcp_model(mc);
  Evaluator ev(m);
  Rng rng(4);
  State incumbent = initial_state(m, rng);
  auto q = qm_query(m, ev, incumbent, 0, 10, 1.0, rng);
  ASSERT_TRUE(q);
  EXPECT_FALSE(q->clamped);
  EXPECT_EQ(q->qubo, mcp_to_qubo(mc).qubo);

  auto big = qm_query(m, ev, incumbent, 0, 50, 1.0, rng);
  ASSERT_TRUE(big);
  EXPECT_TRUE(big->clamped);
  EXPECT_EQ(big->qubo.size(), 10u);
}

TEST(QmQuery, SingleElementListWindow) {
  std::mt19937_64 gen(2);
  auto t = oracle::random_tsp(8, gen);
  Model m = build_tsp_model(t);
  EXPECT_TRUE(find_tour_matrix(m, 0).has_value());
  Evaluator ev(m);
  Rng rng(8);
  State incumbent = initial_state(m, rng);
  auto q = qm_query(m, ev, incumbent, 0, 1, 1.0, rng);
  ASSERT_TRUE(q);
  EXPECT_EQ(q->encoding, QmQuery::Encoding::Placement);
  EXPECT_EQ(q->qubo.size(), 1u);
  auto back = decode_qm(*q, std::vector<std::uint8_t>{1});
  ASSERT_TRUE(back);
  EXPECT_EQ(*back, incumbent);
  EXPECT_FALSE(decode_qm(*q, std::vector<std::uint8_t>{0}));
}

TEST(QmQuery, PlacementEnergyEqualsTourCost) {
  std::mt19937_64 gen(14);
  auto t = oracle::random_tsp(9, gen, false);
  Model m = build_tsp_model(t);
  Evaluator ev(m);
  Rng rng(3);
  // Small windows: every valid placement among all bitstrings.
  for (std::size_t w : {3u, 4u}) {
    State incumbent = initial_state(m, rng);
    auto q = qm_query(m, ev, incumbent, 0, w, 1.0, rng);
    ASSERT_TRUE(q);
    ASSERT_EQ(q->qubo.size(), w * w);
    std::size_t valid = 0;
    oracle::enumerate_qubo(q->qubo, [&](const std::vector<std::uint8_t>& x, double e) {
      if (auto s = decode_qm(*q, x)) {
        ASSERT_TRUE(m.validate_state(*s).empty());
        EXPECT_NEAR(e, m.evaluate(*s).objective, 1e-9);
        ++valid;
      }
    });
    EXPECT_EQ(valid, w == 3 ? 6u : 24u);
  }
  // Whole tour: random placements.
  State incumbent = initial_state(m, rng);
  auto q = qm_query(m, ev, incumbent, 0, 9, 1.0, rng);
  ASSERT_TRUE(q);
  ASSERT_EQ(q->qubo.size(), 81u);
  std::vector<std::size_t> slot(9);
  std::iota(slot.begin(), slot.end(), 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::shuffle(slot.begin(), slot.end(), gen);
    std::vector<std::uint8_t> x(81, 0);
    for (std::size_t k = 0; k < 9; ++k) x[k * 9 + slot[k]] = 1;
    auto s = decode_qm(*q, x);
    ASSERT_TRUE(s);
    EXPECT_NEAR(q->qubo.energy(x), m.evaluate(*s).objective, 1e-9);
  }
}

TEST(QmQuery, KnapsackWindowDecodesToSortedSets) {
  std::mt19937_64 gen(15);
  auto kp = oracle::random_kp(20, 200, gen);
  Model m = build_kp_model(kp);
  Evaluator ev(m);
  Rng rng(1);
  State incumbent = initial_state(m, rng);
  auto q = qm_query(m, ev, incumbent, 0, 8, 50.0, rng);
  ASSERT_TRUE(q);
  EXPECT_EQ(q->qubo.size(), 8u);
  std::mt19937_64 bits_gen(0);
  for (int i = 0; i < 100; ++i) {
    std::vector<std::uint8_t> bits(8);
    for (auto& b : bits) b = bits_gen() & 1;
    auto s = decode_qm(*q, bits);
    ASSERT_TRUE(s);
    EXPECT_TRUE(m.validate_state(*s).empty());
  }
}

TEST(MergeQm, KeepsTheBetterState) {
  KpInstance kp{"k", {5, 6, 7}, {4, 7, 2}, 10};
  Model m = build_kp_model(kp);
  Evaluator ev(m);
  BranchState br = make_branch(m, ev, 0, 1);
  State mid{{DecisionValue{{{0}}}}};
  br.current = mid;
  br.current_eval = ev(mid);
  br.current_hash = state_hash(mid);
  br.scratch = mid;
  br.best = mid;
  br.best_eval = br.current_eval;

  EXPECT_FALSE(merge_qm_result(br, ev, {mid}));
  EXPECT_EQ(br.current, mid);

  State infeasible{{DecisionValue{{{0, 1, 2}}}}};
  EXPECT_FALSE(merge_qm_result(br, ev, {infeasible}));
  EXPECT_EQ(br.current, mid);

  State better{{DecisionValue{{{0, 2}}}}};
  EXPECT_TRUE(merge_qm_result(br, ev, {infeasible, better}));
  EXPECT_EQ(br.current, better);
  EXPECT_EQ(br.best, better);
  EXPECT_EQ(br.scratch, better);
  EXPECT_DOUBLE_EQ(br.best_eval.objective, -12.0);
}

TEST(Solve, RejectsModelsWithoutObjective) {
  Model m;
  m.add_decision(DecisionSpec::binary(2));
  m.freeze();
  EXPECT_THROW(solve(m, quick(1, 10)), StateError);
  Model open;
  auto ref = open.add_decision(DecisionSpec::binary(2));
  open.minimize(Expr(open, ref.node).sum().id());
  EXPECT_THROW(solve(open, quick(1, 10)), StateError);  // not frozen
}

TEST(Solve, ConfigValidation) {
  SolverConfig c;
  c.time_limit = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c.time_limit = 1.0;
  c.n_branches = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c.n_branches = 1;
  c.qm_period = 0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(Solve, DefaultsScaleWithSize) {
  std::mt19937_64 gen(1);
  Model small = build_tsp_model(oracle::random_tsp(5, gen));
  SolverConfig r = resolve_config({}, small);
  EXPECT_EQ(*r.time_limit, 5.0);
  EXPECT_GE(*r.n_branches, 1u);
  EXPECT_LE(*r.n_branches, 8u);
  KpInstance big;
  big.profits.assign(400, 1);
  big.weights.assign(400, 1);
  EXPECT_EQ(*resolve_config({}, build_kp_model(big)).time_limit, 20.0);
}

TEST(Solve, UnitTriangle) {
  TspInstance t{"u", 3, {0, 1, 1, 1, 0, 1, 1, 1, 0}};
  SampleSet set = solve(build_tsp_model(t), quick(3, 200));
  ASSERT_FALSE(set.empty());
  EXPECT_EQ(set.best().objective, 3.0);
  EXPECT_TRUE(set.best().feasible);
}

TEST(Solve, ZeroCapacityKnapsack) {
  KpInstance kp{"z", {3, 4, 5}, {1, 2, 3}, 0};
  SampleSet set = solve(build_kp_model(kp), quick(2, 3000));
  EXPECT_TRUE(set.best().feasible);
  EXPECT_EQ(set.best().objective, 0.0);
  EXPECT_TRUE(set.best().state.decisions[0].parts[0].empty());
}

TEST(Solve, ByteIdenticalPerSeed) {
  std::mt19937_64 gen(8);
  Model m = build_tsp_model(oracle::random_tsp(14, gen));
  const std::string a = to_json(solve(m, quick(11, 4000)), false);
  const std::string b = to_json(solve(m, quick(11, 4000)), false);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, to_json(solve(m, quick(12, 4000)), false));
}

TEST(Solve, SamplesValidTraceMonotoneBestFirst) {
  std::mt19937_64 gen(9);
  auto kp = oracle::random_kp(30, 400, gen);
  Model m = build_kp_model(kp);
  SolverConfig c = quick(5, 5000);
  c.n_branches = 3;
  SampleSet set = solve(m, c);
  ASSERT_FALSE(set.empty());
  for (const auto& s : set.samples) {
    EXPECT_TRUE(m.validate_state(s.state).empty());
    Evaluation e = m.evaluate(s.state);
    EXPECT_EQ(e.objective, s.objective);
    EXPECT_EQ(e.feasible, s.feasible);
    EXPECT_NE(compare(e, m.evaluate(set.best().state)), std::partial_ordering::less);
  }
  for (std::size_t i = 1; i < set.trace.size(); ++i) {
    const auto& prev = set.trace[i - 1];
    const auto& cur = set.trace[i];
    EXPECT_GE(cur.time, prev.time);
    if (prev.feasible) {
      EXPECT_TRUE(cur.feasible);
      EXPECT_LE(cur.objective, prev.objective);
    }
  }
  EXPECT_EQ(set.branches.size(), 3u);
}

TEST(Solve, MoreBranchesNeverWorse) {
  std::mt19937_64 gen(10);
  Model m = build_tsp_model(oracle::random_tsp(15, gen));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SolverConfig one = quick(seed, 3000);
    SolverConfig four = one;
    four.n_branches = 4;
    EXPECT_LE(solve(m, four).best().objective, solve(m, one).best().objective);
  }
}

TEST(Solve, KnapsackReachesOptimum) {
  std::mt19937_64 gen(20);
  int hits = 0;
  for (int r = 0; r < 10; ++r) {
    auto kp = oracle::random_kp(20, 250, gen);
    const double opt = static_cast<double>(exact_kp(kp).value);
    SolverConfig c;
    c.seed = static_cast<std::uint64_t>(r);
    c.time_limit = 5.0;
    c.target_objective = -opt;
    if (solve(build_kp_model(kp), c).best().objective == -opt) ++hits;
  }
  EXPECT_GE(hits, 8);
}

TEST(Solve, RespectsTimeLimit) {
  Model m = build_tsp_model(load_tsplib(kData / "tsp" / "eil51.tsp"));
  SolverConfig c;
  c.time_limit = 1.0;
  c.seed = 1;
  SampleSet set = solve(m, c);
  EXPECT_LE(set.wall_time, 2.0);
  EXPECT_GT(set.wall_time, 0.5);
}

TEST(Solve, JsonRoundTrip) {
  std::mt19937_64 gen(11);
  Model m = build_mcp_model(oracle::random_maxcut(12, gen));
  SampleSet set = solve(m, quick(1, 2000));
  const std::string text = to_json(set);
  SampleSet back = sampleset_from_json(text);
  EXPECT_EQ(to_json(back), text);
  EXPECT_THROW(sampleset_from_json("{not json"), ParseError);
}

}  // namespace
}  // namespace combopt
