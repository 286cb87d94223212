#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cabinet/error.hpp"

namespace cabinet {

/// Relative tolerance for the ct == total/2 check and for I1/I2 margins.
inline constexpr double kSchemeTolerance = 1e-9;
/// Absolute tolerance on r when bisecting the geometric ratio.
inline constexpr double kRatioTolerance = 1e-12;

/// Largest failure threshold a cluster of n nodes can be configured with.
constexpr int max_threshold(int n) { return (n - 1) / 2; }

constexpr bool threshold_in_range(int n, int t) { return t >= 1 && t <= max_threshold(n); }

/// A weight scheme: n distinct weights in descending order, the consensus
/// threshold (half the total weight) and the failure threshold t it was built for.
struct WeightScheme {
  int n = 0;
  int t = 0;
  double ratio = 0.0;
  std::vector<double> weights;  // weights[0] is the highest
  double ct = 0.0;

  double total() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

  /// Sum of the k highest weights.
  double top_sum(int k) const {
    return std::accumulate(weights.begin(), weights.begin() + std::min<std::size_t>(k, weights.size()), 0.0);
  }

  bool operator==(const WeightScheme&) const = default;
};

enum class Violation { none, bad_threshold_range, nonpositive_weight, ct_mismatch, liveness_I2, safety_I1 };

constexpr std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::none: return "none";
    case Violation::bad_threshold_range: return "bad_threshold_range";
    case Violation::nonpositive_weight: return "nonpositive_weight";
    case Violation::ct_mismatch: return "ct_mismatch";
    case Violation::liveness_I2: return "liveness_I2";
    case Violation::safety_I1: return "safety_I1";
  }
  return "unknown";
}

struct SchemeVerdict {
  bool valid = false;
  Violation violated = Violation::none;
  /// (ct - sum of top t, sum of top t+1 - ct). Both > 0 for a valid scheme.
  std::pair<double, double> margins{0.0, 0.0};
};

/// Checks a weight list against the weighted-quorum invariants.
///
/// The list is treated as a multiset: sums are taken over the weights sorted
/// in descending order. Violations are reported in a fixed priority order:
/// threshold range, positivity, ct == total/2, then I2 (top-t below ct) and
/// finally I1 (top-(t+1) above ct). A margin only counts as satisfied when it
/// exceeds kSchemeTolerance times the total weight.
inline SchemeVerdict validate_scheme(std::span<const double> weights, double ct, int t) {
  SchemeVerdict verdict;
  std::vector<double> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const int n = static_cast<int>(sorted.size());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);

  if (n > 0 && t >= 0 && t < n) {
    const double top_t = std::accumulate(sorted.begin(), sorted.begin() + t, 0.0);
    const double top_t1 = top_t + sorted[t];
    verdict.margins = {ct - top_t, top_t1 - ct};
  }

  auto fail = [&](Violation v) {
    verdict.valid = false;
    verdict.violated = v;
    return verdict;
  };

  if (n == 0 || !threshold_in_range(n, t)) return fail(Violation::bad_threshold_range);
  if (std::any_of(sorted.begin(), sorted.end(), [](double w) { return !(w > 0.0); }))
    return fail(Violation::nonpositive_weight);
  if (!std::isfinite(ct) || std::abs(ct - total / 2.0) > kSchemeTolerance * total)
    return fail(Violation::ct_mismatch);

  const double slack = kSchemeTolerance * total;
  if (!(verdict.margins.first > slack)) return fail(Violation::liveness_I2);
  if (!(verdict.margins.second > slack)) return fail(Violation::safety_I1);

  verdict.valid = true;
  verdict.violated = Violation::none;
  return verdict;
}

inline SchemeVerdict validate_scheme(const WeightScheme& scheme) {
  return validate_scheme(scheme.weights, scheme.ct, scheme.t);
}

namespace detail {

// (r^n + 1) / 2 - r^(n-t-1): positive exactly when the top t+1 geometric
// weights exceed half the total.
inline double upper_inequality(double r, int n, int t) {
  return (std::pow(r, n) + 1.0) / 2.0 - std::pow(r, n - t - 1);
}

// r^(n-t) - (r^n + 1) / 2: positive exactly when the top t weights stay
// below half the total.
inline double lower_inequality(double r, int n, int t) {
  return std::pow(r, n - t) - (std::pow(r, n) + 1.0) / 2.0;
}

}  // namespace detail

/// Open interval of ratios r in (1, 2) for which the geometric sequence
/// r^(n-1), ..., r, 1 satisfies both invariants.
struct RatioInterval {
  double lo = 1.0;
  double hi = 2.0;
};

/// True when r strictly satisfies r^(n-t-1) < (r^n + 1)/2 < r^(n-t).
inline bool ratio_feasible(double r, int n, int t) {
  return detail::upper_inequality(r, n, t) > 0.0 && detail::lower_inequality(r, n, t) > 0.0;
}

inline RatioInterval feasible_ratio_interval(int n, int t) {
  if (n < 3 || !threshold_in_range(n, t))
    throw Error(ErrorCode::bad_threshold_range,
                "t=" + std::to_string(t) + " outside [1, " + std::to_string(max_threshold(n)) + "] for n=" +
                    std::to_string(n));

  RatioInterval interval;

  // Lower end: the top-(t+1) inequality holds for every r > 1 when the
  // sequence is short relative to t (2(t+1) >= n); otherwise it fails just
  // above 1 and holds at 2, with a single crossing in between.
  if (2 * (t + 1) < n) {
    double lo = 1.0, hi = 2.0;
    while (hi - lo > kRatioTolerance) {
      const double mid = lo + (hi - lo) / 2.0;
      (detail::upper_inequality(mid, n, t) > 0.0 ? hi : lo) = mid;
    }
    interval.lo = hi;
  }

  // Upper end: the top-t inequality holds just above 1 and fails at 2.
  {
    double lo = 1.0, hi = 2.0;
    while (hi - lo > kRatioTolerance) {
      const double mid = lo + (hi - lo) / 2.0;
      (detail::lower_inequality(mid, n, t) > 0.0 ? lo : hi) = mid;
    }
    interval.hi = lo;
  }
  return interval;
}

/// Geometric scheme with w_n = 1 and w_i = r^(n-i), r the geometric midpoint
/// of the feasible ratio interval.
inline WeightScheme generate_scheme(int n, int t) {
  const RatioInterval interval = feasible_ratio_interval(n, t);
  const double r = std::sqrt(interval.lo * interval.hi);
  if (!(interval.lo < interval.hi) || !ratio_feasible(r, n, t))
    throw Error(ErrorCode::infeasible_ratio,
                "no ratio in (1, 2) found for n=" + std::to_string(n) + " t=" + std::to_string(t));

  WeightScheme scheme;
  scheme.n = n;
  scheme.t = t;
  scheme.ratio = r;
  scheme.weights.resize(n);
  for (int i = 0; i < n; ++i) scheme.weights[i] = std::pow(r, n - 1 - i);
  scheme.ct = scheme.total() / 2.0;

  if (const auto verdict = validate_scheme(scheme); !verdict.valid)
    throw Error(ErrorCode::infeasible_ratio, "generated scheme fails validation: " +
                                                 std::string(to_string(verdict.violated)));
  return scheme;
}

inline nlohmann::ordered_json to_json(const WeightScheme& scheme) {
  nlohmann::ordered_json j;
  j["n"] = scheme.n;
  j["t"] = scheme.t;
  j["r"] = scheme.ratio;
  j["weights"] = scheme.weights;
  j["ct"] = scheme.ct;
  return j;
}

/// Reads {n, t, r, weights[], ct}. The result is not validated.
inline WeightScheme scheme_from_json(const nlohmann::json& j) {
  try {
    WeightScheme scheme;
    scheme.n = j.at("n").get<int>();
    scheme.t = j.at("t").get<int>();
    scheme.ratio = j.value("r", 0.0);
    scheme.weights = j.at("weights").get<std::vector<double>>();
    scheme.ct = j.at("ct").get<double>();
    if (static_cast<int>(scheme.weights.size()) != scheme.n)
      throw Error(ErrorCode::config_error, "weights length does not match n");
    return scheme;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("bad scheme json: ") + e.what());
  }
}

}  // namespace cabinet
