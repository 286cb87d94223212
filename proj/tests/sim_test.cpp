#include <algorithm>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "cabinet/simulator.hpp"
#include "cabinet/verifier.hpp"

using namespace cabinet;

namespace {

Scenario small_scenario(int n, int t, const std::string& delay, const std::string& crash, std::uint64_t seed) {
  Scenario sc;
  sc.config = ClusterConfig::make(n, t, Algo::cabinet);
  sc.profile = HeterogeneityProfile::heterogeneous(n);
  sc.delays = delay_from_flag(delay);
  sc.crashes = crash_from_flag(crash);
  const double floor_ms = std::max(150.0, 3.0 * sc.delays.max_one_way_ms());
  sc.config.election_timeout_min_ms = floor_ms;
  sc.config.election_timeout_max_ms = 2 * floor_ms;
  sc.batch_size = 200;
  sc.rounds = 30;
  sc.seed = seed;
  return sc;
}

std::string dump(const ExecutionTrace& tr) {
  std::ostringstream os;
  write_jsonl(os, tr);
  return os.str();
}

}  // namespace

TEST(Delay, UniformSamplesStayInBand) {
  const DelayModel m = delay_from_flag("d1:100");
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const SimTime d = sample_delay(m, 1 + i % 5, 5, i, 0, rng);
    EXPECT_GE(d, from_ms(80));
    EXPECT_LE(d, from_ms(120));
  }
}

TEST(Delay, NoneIsZero) {
  Rng rng(1);
  EXPECT_EQ(sample_delay(DelayModel{}, 1, 5, 0, 0, rng), 0);
}

TEST(Delay, BurstAlternatesSpikeAndQuiet) {
  const DelayModel m = delay_from_flag("d4");
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(sample_delay(m, 2, 5, from_ms(12000), 0, rng), 0);
    const SimTime d = sample_delay(m, 2, 5, from_ms(16000), 0, rng);
    EXPECT_GE(d, from_ms(800));
    EXPECT_LE(d, from_ms(1200));
  }
}

TEST(Delay, SkewDeclinesAcrossIds) {
  const DelayModel m = delay_from_flag("d2");
  EXPECT_DOUBLE_EQ(regime_for(m, 1, 10, 0, 0).mean_ms, 1000);
  EXPECT_DOUBLE_EQ(regime_for(m, 10, 10, 0, 0).mean_ms, 100);
  for (NodeId i = 2; i <= 10; ++i) EXPECT_LT(regime_for(m, i, 10, 0, 0).mean_ms, regime_for(m, i - 1, 10, 0, 0).mean_ms);
  DelayModel d3 = delay_from_flag("d3");
  EXPECT_DOUBLE_EQ(regime_for(d3, 1, 10, 0, 1).mean_ms, regime_for(m, 3, 10, 0, 0).mean_ms);
}

TEST(Delay, RejectsUnknownFlags) {
  EXPECT_THROW(delay_from_flag("d9"), Error);
  EXPECT_THROW(delay_from_flag("d1:abc"), Error);
}

TEST(Profile, ZoneCountsForEvaluatedScales) {
  const auto p = HeterogeneityProfile::heterogeneous(11);
  std::vector<std::size_t> sizes;
  for (const auto& z : p.zones) sizes.push_back(z.nodes.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2, 2}));
  EXPECT_EQ(p.zone_of(1).vcpus, 16);
  EXPECT_EQ(p.zone_of(11).vcpus, 1);
  EXPECT_EQ(HeterogeneityProfile::heterogeneous(50).zones.front().nodes.size(), 10u);
  EXPECT_NO_THROW(HeterogeneityProfile::homogeneous(7).validate(7));
}

TEST(Sim, SameSeedSameTrace) {
  const Scenario sc = small_scenario(7, 2, "d3", "random:2@10", 42);
  EXPECT_EQ(dump(run(sc).trace), dump(run(sc).trace));
  Scenario other = sc;
  other.seed = 43;
  EXPECT_NE(dump(run(sc).trace), dump(run(other).trace));
}

TEST(Sim, StrongKillsRemoveTheTopWeights) {
  const Scenario sc = small_scenario(7, 2, "d1:100", "strong:2@10", 5);
  const SimResult r = run(sc);
  EXPECT_EQ(r.trace.outcome, RunOutcome::completed);
  // assignment in force when round 10 finalized: the last assign group before the crashes
  const auto& recs = r.trace.records;
  const auto first_crash = std::find_if(recs.begin(), recs.end(), [](const TraceRecord& x) { return x.kind == TraceKind::crash; });
  ASSERT_NE(first_crash, recs.end());
  std::vector<NodeId> ranks(7);
  for (auto it = recs.begin(); it != first_crash; ++it)
    if (it->kind == TraceKind::assign) ranks[it->index] = it->to;
  std::set<NodeId> crashed;
  for (const auto& x : recs)
    if (x.kind == TraceKind::crash) crashed.insert(x.from);
  EXPECT_EQ(crashed, (std::set<NodeId>{ranks[0], ranks[1]}));
  EXPECT_TRUE(audit_trace(r.trace).empty());
}

TEST(Sim, ToleratesExactlyTCrashes) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SimResult r = run(small_scenario(7, 2, "d1:100", "strong:2@5", seed));
    EXPECT_EQ(r.trace.outcome, RunOutcome::completed) << seed;
  }
}

TEST(Sim, LosingTheTopTwoOfFiveStallsElections) {
  Scenario sc = small_scenario(5, 1, "none", "strong:2@5", 1);
  const SimResult r = run(sc);
  EXPECT_EQ(r.trace.outcome, RunOutcome::livelock_detected);
  EXPECT_EQ(static_cast<int>(r.samples.size()), 5);
}

TEST(Sim, DynamicDelaysRotateEveryTenRounds) {
  const SimResult r = run(small_scenario(5, 1, "d3", "none", 2));
  EXPECT_EQ(r.trace.of_kind(TraceKind::regime).size(), 3u);
}

TEST(Sim, SlowZonesLeaveTheCabinet) {
  Scenario sc = small_scenario(11, 3, "none", "none", 1);
  const SimResult r = run(sc);
  const auto& last = r.samples.back();
  for (NodeId id : last.cabinet) EXPECT_LE(id, 4) << "cabinet should sit in the 16-vCPU zone";
}

TEST(Sim, CommitTimeMatchesOrderStatistic) {
  Scenario sc = small_scenario(11, 3, "d1:100", "none", 8);
  sc.options.grace_factor = 1000;  // keep rounds open so every round trip is observed
  const SimResult r = run(sc);
  std::map<std::uint64_t, SimTime> start;
  std::map<std::uint64_t, double> lead_w;
  std::map<std::uint64_t, std::map<NodeId, std::pair<double, SimTime>>> rtts;
  std::map<std::uint64_t, SimTime> sent;
  for (const auto& x : r.trace.records) {
    if (x.kind == TraceKind::round_start) {
      start[x.wclock] = x.time;
      lead_w[x.wclock] = x.weight;
    } else if (x.kind == TraceKind::reply_recv) {
      rtts[x.wclock][x.from] = {x.weight, x.time - start[x.wclock]};
    }
  }
  int checked = 0;
  for (const auto& x : r.trace.records) {
    if (x.kind != TraceKind::round_commit) continue;
    std::vector<FollowerTiming> f;
    for (const auto& [id, wr] : rtts[x.wclock]) f.push_back({id, wr.first, wr.second});
    EXPECT_EQ(start[x.wclock] + commit_time_oracle(lead_w[x.wclock], f, sc.config.scheme.ct), x.time);
    ++checked;
  }
  EXPECT_EQ(checked, 30);
}
