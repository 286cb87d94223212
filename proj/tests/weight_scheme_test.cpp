#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "cabinet/weight_scheme.hpp"

using namespace cabinet;

namespace {

// Independent check: build r^(n-1), ..., 1 in long double and compare the
// top-t and top-(t+1) prefix sums against half the total.
bool geometric_satisfies(long double r, int n, int t) {
  std::vector<long double> w(n);
  for (int i = 0; i < n; ++i) w[i] = std::pow(r, static_cast<long double>(n - 1 - i));
  const long double half = std::accumulate(w.begin(), w.end(), 0.0L) / 2;
  const long double top_t = std::accumulate(w.begin(), w.begin() + t, 0.0L);
  return top_t < half && top_t + w[t] > half;
}

}  // namespace

TEST(WeightScheme, TenNodeRatiosFromTheEvaluationAreFeasible) {
  const std::pair<int, double> rows[] = {{1, 1.40}, {2, 1.38}, {3, 1.19}, {4, 1.08}};
  for (const auto& [t, r] : rows) {
    EXPECT_TRUE(ratio_feasible(r, 10, t)) << "t=" << t;
    EXPECT_TRUE(geometric_satisfies(r, 10, t)) << "t=" << t;
  }
}

TEST(WeightScheme, GeneratedSchemesHoldForAllSizes) {
  for (int n = 3; n <= 100; ++n) {
    for (int t = 1; t <= (n - 1) / 2; ++t) {
      const WeightScheme s = generate_scheme(n, t);
      ASSERT_EQ(static_cast<int>(s.weights.size()), n);
      EXPECT_GT(s.ratio, 1.0);
      EXPECT_LT(s.ratio, 2.0);
      EXPECT_DOUBLE_EQ(s.weights.back(), 1.0);
      for (int i = 1; i < n; ++i) EXPECT_GT(s.weights[i - 1], s.weights[i]);
      EXPECT_NEAR(s.ct, s.total() / 2.0, 1e-12 * s.total());
      EXPECT_TRUE(validate_scheme(s).valid) << "n=" << n << " t=" << t;
      EXPECT_TRUE(geometric_satisfies(s.ratio, n, t)) << "n=" << n << " t=" << t;
    }
  }
}

TEST(WeightScheme, RatioIntervalEndsAreTight) {
  for (int n : {5, 10, 31, 64}) {
    for (int t = 1; t <= (n - 1) / 2; ++t) {
      const RatioInterval iv = feasible_ratio_interval(n, t);
      const double inside = std::sqrt(iv.lo * iv.hi);
      EXPECT_TRUE(geometric_satisfies(inside, n, t));
      if (iv.lo > 1.0) {
        EXPECT_FALSE(geometric_satisfies(iv.lo - 1e-6, n, t)) << n << "," << t;
      }
      EXPECT_FALSE(geometric_satisfies(iv.hi + 1e-6, n, t)) << n << "," << t;
    }
  }
}

TEST(WeightScheme, ValidityIsScaleInvariant) {
  const WeightScheme s = generate_scheme(9, 3);
  for (double c : {1e-3, 0.5, 7.0, 1e6}) {
    std::vector<double> scaled = s.weights;
    for (double& w : scaled) w *= c;
    EXPECT_TRUE(validate_scheme(scaled, s.ct * c, 3).valid) << c;
  }
}

TEST(WeightScheme, TriageOfTheThreeSevenNodeExamples) {
  const std::vector<double> ws1{1, 2, 3, 4, 5, 6, 7};
  const SchemeVerdict v1 = validate_scheme(ws1, 8.0, 2);
  EXPECT_FALSE(v1.valid);
  EXPECT_EQ(v1.violated, Violation::ct_mismatch);

  const std::vector<double> ws2{1, 10, 100, 1000, 10000, 100000, 1000000};
  const SchemeVerdict v2 = validate_scheme(ws2, 555555.5, 2);
  EXPECT_FALSE(v2.valid);
  EXPECT_EQ(v2.violated, Violation::liveness_I2);

  const std::vector<double> ws3{2, 3, 4, 6, 8, 10, 12};
  const SchemeVerdict v3 = validate_scheme(ws3, 22.5, 2);
  EXPECT_TRUE(v3.valid);
  EXPECT_DOUBLE_EQ(v3.margins.first, 0.5);
  EXPECT_DOUBLE_EQ(v3.margins.second, 7.5);
}

TEST(WeightScheme, ValidationReportsTheFirstBrokenRule) {
  EXPECT_EQ(validate_scheme(std::vector<double>{3, 2, 1}, 3.0, 0).violated, Violation::bad_threshold_range);
  EXPECT_EQ(validate_scheme(std::vector<double>{3, 2, 0}, 2.5, 1).violated, Violation::nonpositive_weight);
  EXPECT_EQ(validate_scheme(std::vector<double>{3, 2, 1}, 2.0, 1).violated, Violation::ct_mismatch);
  // top-(t+1) = 1+1 = 2 is not above ct = 2.5 with equal weights of 1 over 5 nodes
  EXPECT_EQ(validate_scheme(std::vector<double>{1, 1, 1, 1, 1}, 2.5, 1).violated, Violation::safety_I1);
}

TEST(WeightScheme, RejectsOutOfRangeThresholds) {
  EXPECT_THROW(
      {
        try {
          generate_scheme(10, 5);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::bad_threshold_range);
          throw;
        }
      },
      Error);
  EXPECT_THROW(generate_scheme(10, 0), Error);
  EXPECT_THROW(generate_scheme(2, 1), Error);
}

TEST(WeightScheme, JsonRoundTrip) {
  const WeightScheme s = generate_scheme(11, 4);
  const WeightScheme back = scheme_from_json(nlohmann::json::parse(to_json(s).dump()));
  EXPECT_EQ(back, s);
}
