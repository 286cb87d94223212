#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "cabinet/workload.hpp"

using namespace cabinet;

namespace {

std::map<OpKind, int> tally(const Batch& b) {
  std::map<OpKind, int> c;
  for (const auto& op : b.operations) ++c[op.kind];
  return c;
}

// |count - b p| within four binomial standard deviations
void expect_binomial(int count, std::size_t b, double p) {
  const double mean = static_cast<double>(b) * p;
  const double sd = std::sqrt(static_cast<double>(b) * p * (1 - p));
  EXPECT_LE(std::abs(count - mean), 4 * sd) << "count " << count << " vs mean " << mean;
}

}  // namespace

TEST(Workload, EvenMixConcentrates) {
  Rng rng(11);
  const Batch b = generate_batch(builtin_mix("A"), 10000, rng);
  ASSERT_EQ(b.size(), 10000u);
  const auto c = tally(b);
  expect_binomial(c.at(OpKind::read), 10000, 0.5);
  EXPECT_EQ(c.at(OpKind::read) + c.at(OpKind::update), 10000);
}

TEST(Workload, SingleReadBatch) {
  Rng rng(1);
  const Batch b = generate_batch(builtin_mix("C"), 1, rng);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b.operations[0].kind, OpKind::read);
}

TEST(Workload, TransactionMixMatchesRatios) {
  Rng rng(5);
  const OperationMix mix = builtin_mix("tpcc");
  const Batch b = generate_batch(mix, 2000, rng);
  const auto c = tally(b);
  for (const auto& [kind, p] : mix.ratios) expect_binomial(c.count(kind) ? c.at(kind) : 0, 2000, p);
}

TEST(Workload, SeededAndScanWeighted) {
  Rng a(3), b(3);
  const Batch x = generate_batch(builtin_mix("E"), 500, a, 7);
  const Batch y = generate_batch(builtin_mix("E"), 500, b, 7);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x.operations[i].kind, y.operations[i].kind);
    EXPECT_EQ(x.operations[i].key, y.operations[i].key);
  }
  const auto c = tally(x);
  EXPECT_DOUBLE_EQ(x.cost(), 4.0 * c.at(OpKind::scan) + c.at(OpKind::insert));
}

TEST(Workload, CustomMixFromJson) {
  const auto mix = mix_from_json(nlohmann::json::parse(R"({"name":"w","ratios":{"READ":0.25,"INSERT":0.75},"payload_bytes":64})"));
  EXPECT_EQ(mix.payload_bytes, 64u);
  Rng rng(2);
  const Batch b = generate_batch(mix, 4000, rng);
  expect_binomial(tally(b).at(OpKind::insert), 4000, 0.75);
  EXPECT_THROW(mix_from_json(nlohmann::json::parse(R"({"ratios":{"READ":0.5}})")), Error);
  EXPECT_THROW(mix_from_json(nlohmann::json::parse(R"({"ratios":{"READ":1.0},"payload_bytes":0})")), Error);
  EXPECT_THROW(builtin_mix("Z"), Error);
}
