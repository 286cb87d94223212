#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "cabinet/simulator.hpp"
#include "cabinet/verifier.hpp"
#include "cabinet/weight_scheme.hpp"

using namespace cabinet;

namespace {

const std::vector<double> kWs1{1, 2, 3, 4, 5, 6, 7};
const std::vector<double> kWs2{1, 10, 100, 1000, 10000, 100000, 1000000};
const std::vector<double> kWs3{2, 3, 4, 6, 8, 10, 12};

TraceRecord rec(SimTime time, NodeId from, NodeId to, TraceKind kind, std::uint64_t term, std::uint64_t wclock,
                double weight, std::uint64_t index) {
  return {time, from, to, kind, term, wclock, weight, index};
}

}  // namespace

TEST(Exhaustive, ValidSchemeHoldsEverywhere) {
  const ExhaustiveReport r = exhaustive_scheme_check(kWs3, 22.5, 2);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.min_fatal_crashes, 3);
}

TEST(Exhaustive, LowThresholdAdmitsDisjointQuorums) {
  const ExhaustiveReport r = exhaustive_scheme_check(kWs1, 8.0, 2);
  EXPECT_FALSE(r.no_disjoint_quorums);
  EXPECT_TRUE(subset_exceeds(kWs1, r.disjoint_a, 8.0));
  EXPECT_TRUE(subset_exceeds(kWs1, r.disjoint_b, 8.0));
  // {n6, n7} = 13 and {n2, n3, n4} = 9 are disjoint and both exceed 8
  EXPECT_TRUE(subset_exceeds(kWs1, std::vector<int>{6, 7}, 8.0));
  EXPECT_TRUE(subset_exceeds(kWs1, std::vector<int>{2, 3, 4}, 8.0));
}

TEST(Exhaustive, DominantWeightLosesLivenessOnOneCrash) {
  const ExhaustiveReport r = exhaustive_scheme_check(kWs2, 555555.5, 2);
  EXPECT_FALSE(r.n_minus_t_quorums);
  EXPECT_FALSE(subset_exceeds(kWs2, std::vector<int>{1, 2, 3, 4, 5, 6}, 555555.5));
  EXPECT_EQ(r.min_fatal_crashes, 1);
}

TEST(Exhaustive, RejectsLargeClusters) {
  const std::vector<double> w(21, 1.0);
  try {
    exhaustive_scheme_check(w, 10.5, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::too_large);
  }
}

TEST(Exhaustive, AgreesWithValidateOnRandomSchemes) {
  std::mt19937_64 gen(20240607);
  int valid = 0;
  for (int c = 0; c < 1000; ++c) {
    const int n = std::uniform_int_distribution<int>(3, 12)(gen);
    const int t = std::uniform_int_distribution<int>(1, (n - 1) / 2)(gen);
    std::vector<double> w(n);
    const int span = std::uniform_int_distribution<int>(1, 4)(gen) == 1 ? 3 : 60;
    for (double& x : w) x = std::uniform_int_distribution<int>(1, span)(gen);
    double total = 0;
    for (double x : w) total += x;
    const bool by_rules = validate_scheme(w, total / 2, t).valid;
    const bool by_enum = exhaustive_scheme_check(w, total / 2, t).ok();
    EXPECT_EQ(by_rules, by_enum) << "case " << c;
    valid += by_rules;
  }
  EXPECT_GT(valid, 50);
  EXPECT_LT(valid, 950);
}

TEST(Exhaustive, GeneratedSchemesPass) {
  for (int n = 3; n <= 16; ++n)
    for (int t = 1; t <= (n - 1) / 2; ++t) {
      const WeightScheme s = generate_scheme(n, t);
      EXPECT_TRUE(exhaustive_scheme_check(s.weights, s.ct, t).ok()) << n << "," << t;
    }
}

TEST(CommitOracle, CabinetOfThreeSuffices) {
  const std::vector<FollowerTiming> f{
      {2, 10, 30}, {3, 8, 40}, {4, 6, 90}, {5, 4, 95}, {6, 3, 100}, {7, 2, 120}};
  EXPECT_EQ(commit_time_oracle(12, f, 22.5), 40);
}

TEST(CommitOracle, TooFewSurvivorsIsInfeasible) {
  const std::vector<FollowerTiming> f{{2, 10, std::nullopt}, {3, 8, std::nullopt}, {7, 2, 50}};
  try {
    commit_time_oracle(12, f, 22.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible);
  }
}

TEST(CommitOracle, UnitWeightsCommitAtTheMajorityOrderStatistic) {
  const std::vector<FollowerTiming> f{{2, 1, 70}, {3, 1, 20}, {4, 1, 50}, {5, 1, 10}};
  EXPECT_EQ(commit_time_oracle(1, f, 2.5), 20);  // second fastest of four
}

TEST(CommitOracle, TiesGoToTheLowerId) {
  const std::vector<FollowerTiming> f{{3, 1, 20}, {2, 5, 20}};
  EXPECT_EQ(commit_time_oracle(2, f, 3.5), 20);
}

TEST(Audit, CleanSimulationHasNoViolations) {
  Scenario sc;
  sc.config = ClusterConfig::make(7, 2, Algo::cabinet);
  sc.profile = HeterogeneityProfile::heterogeneous(7);
  sc.delays = delay_from_flag("d1:100");
  sc.crashes = crash_from_flag("strong:2@5");
  sc.config.election_timeout_min_ms = 400;
  sc.config.election_timeout_max_ms = 800;
  sc.batch_size = 100;
  sc.rounds = 20;
  const SimResult r = run(sc);
  EXPECT_TRUE(audit_trace(r.trace).empty()) << to_json(audit_trace(r.trace)).dump();

  std::stringstream io;
  write_jsonl(io, r.trace);
  const ExecutionTrace back = read_jsonl(io);
  EXPECT_EQ(back.records, r.trace.records);
  EXPECT_TRUE(audit_trace(back).empty());
}

TEST(Audit, TwoLeadersInOneTerm) {
  ExecutionTrace tr;
  tr.n = 3;
  tr.records = {rec(0, 1, 0, TraceKind::become_leader, 3, 0, 0, 0),
                rec(10, 2, 0, TraceKind::become_leader, 3, 0, 0, 0)};
  const auto v = audit_trace(tr);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "dual_leader");
}

TEST(Audit, DivergentCommitAndStaleLeader) {
  ExecutionTrace tr;
  tr.n = 3;
  tr.records = {rec(0, 1, 1, TraceKind::commit, 1, 1, 1, 1),
                rec(1, 2, 2, TraceKind::commit, 2, 1, 1, 1),
                rec(2, 3, 0, TraceKind::become_leader, 3, 0, 0, 0)};
  const auto v = audit_trace(tr);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].kind, "divergent_commit");
  EXPECT_EQ(v[1].kind, "stale_leader");
}

TEST(Audit, WclockRegressionAndBrokenAssignment) {
  ExecutionTrace tr;
  tr.n = 3;
  tr.t = 1;
  tr.schemes[1] = {4, 2, 1};
  tr.records = {rec(0, 1, 2, TraceKind::weight, 1, 5, 2, 0), rec(1, 1, 2, TraceKind::weight, 1, 4, 2, 0),
                rec(2, 1, 1, TraceKind::assign, 1, 6, 4, 0), rec(2, 1, 2, TraceKind::assign, 1, 6, 2, 1),
                rec(2, 1, 3, TraceKind::assign, 1, 6, 2, 2)};
  const auto v = audit_trace(tr);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].kind, "wclock_regression");
  EXPECT_EQ(v[1].kind, "weight_multiset");
}
