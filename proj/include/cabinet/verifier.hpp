#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cabinet/error.hpp"
#include "cabinet/trace.hpp"

namespace cabinet {

// ---- exhaustive quorum check -----------------------------------------------

inline constexpr int kExhaustiveMaxNodes = 20;
inline constexpr int kExactDigits = 9;

/// Result of enumerating every subset of nodes. Node positions in witnesses
/// are 1-based indices into the weight list as given.
struct ExhaustiveReport {
  bool n_minus_t_quorums = true;    // every (n-t)-subset weighs more than ct
  bool non_cabinet_below = true;    // complement of the top t+1 weighs less than ct
  bool no_disjoint_quorums = true;  // no two disjoint subsets both exceed ct
  std::vector<int> light_quorum;    // an (n-t)-subset at or below ct
  std::vector<int> disjoint_a, disjoint_b;
  int min_fatal_crashes = 0;  // fewest crashes that leave the survivors at or below ct

  bool ok() const { return n_minus_t_quorums && non_cabinet_below && no_disjoint_quorums; }
};

namespace detail {

inline std::int64_t to_fixed(double v) {
  return static_cast<std::int64_t>(std::llround(v * 1e9));
}

inline std::vector<int> members(std::uint32_t mask, int n) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (mask & (1u << i)) out.push_back(i + 1);
  return out;
}

}  // namespace detail

/// Enumerates all 2^n subsets using weights scaled to integers at 1e-9, so
/// every subset comparison against ct is exact.
inline ExhaustiveReport exhaustive_scheme_check(std::span<const double> weights, double ct, int t) {
  const int n = static_cast<int>(weights.size());
  if (n > kExhaustiveMaxNodes) throw Error(ErrorCode::too_large, "n=" + std::to_string(n) + " > 20");
  if (n == 0 || t < 0 || t >= n) throw Error(ErrorCode::bad_threshold_range, "t=" + std::to_string(t));

  double total_d = 0.0;
  for (double w : weights) total_d += std::abs(w);
  if (total_d * 1e9 > 4e18) throw Error(ErrorCode::too_large, "weights too large for exact arithmetic");

  std::vector<std::int64_t> w(n);
  for (int i = 0; i < n; ++i) w[i] = detail::to_fixed(weights[i]);
  const std::int64_t ct_fixed = detail::to_fixed(ct);

  const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1;
  std::vector<std::int64_t> sum(std::size_t{1} << n, 0);
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int low = std::countr_zero(mask);
    sum[mask] = sum[mask & (mask - 1)] + w[low];
  }
  const std::int64_t total = sum[full];

  ExhaustiveReport report;
  report.min_fatal_crashes = n + 1;
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    const int size = std::popcount(mask);
    if (size == n - t && sum[mask] <= ct_fixed && report.n_minus_t_quorums) {
      report.n_minus_t_quorums = false;
      report.light_quorum = detail::members(mask, n);
    }
    const std::uint32_t comp = full & ~mask;
    if (sum[mask] > ct_fixed && sum[comp] > ct_fixed && report.no_disjoint_quorums) {
      report.no_disjoint_quorums = false;
      report.disjoint_a = detail::members(mask, n);
      report.disjoint_b = detail::members(comp, n);
    }
    // mask = crashed set
    if (total - sum[mask] <= ct_fixed) report.min_fatal_crashes = std::min(report.min_fatal_crashes, size);
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });
  std::uint32_t cabinet = 0;
  for (int k = 0; k <= t; ++k) cabinet |= 1u << order[k];
  report.non_cabinet_below = sum[full & ~cabinet] < ct_fixed;
  return report;
}

/// Sum of the listed (1-based) positions, exact at 1e-9.
inline bool subset_exceeds(std::span<const double> weights, std::span<const int> positions, double ct) {
  std::int64_t s = 0;
  for (int p : positions) s += detail::to_fixed(weights[p - 1]);
  return s > detail::to_fixed(ct);
}

// ---- order-statistic commit time -------------------------------------------

struct FollowerTiming {
  NodeId node = 0;
  double weight = 0.0;
  std::optional<SimTime> round_trip;  // empty: never replies
};

/// Offset from round start at which the accumulated weight first exceeds ct
/// when replies arrive in round-trip order (ties: lower node id first).
inline SimTime commit_time_oracle(double leader_weight, std::span<const FollowerTiming> followers, double ct) {
  std::vector<FollowerTiming> live;
  double surviving = leader_weight;
  for (const auto& f : followers)
    if (f.round_trip) {
      live.push_back(f);
      surviving += f.weight;
    }
  if (!(surviving > ct)) throw Error(ErrorCode::infeasible, "surviving weight does not exceed ct");

  std::sort(live.begin(), live.end(), [](const FollowerTiming& a, const FollowerTiming& b) {
    return *a.round_trip != *b.round_trip ? *a.round_trip < *b.round_trip : a.node < b.node;
  });
  double acc = leader_weight;
  if (acc > ct) return 0;
  for (const auto& f : live) {
    acc += f.weight;
    if (acc > ct) return *f.round_trip;
  }
  throw Error(ErrorCode::infeasible, "unreachable");
}

// ---- trace audit -----------------------------------------------------------

struct AuditViolation {
  std::string kind;  // divergent_commit | dual_leader | stale_leader | wclock_regression | weight_multiset
  SimTime time = 0;
  std::string detail;
};

inline nlohmann::ordered_json to_json(const std::vector<AuditViolation>& violations) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& v : violations) {
    nlohmann::ordered_json j;
    j["kind"] = v.kind;
    j["time"] = to_ms(v.time);
    j["detail"] = v.detail;
    arr.push_back(j);
  }
  return arr;
}

/// Scans a trace for safety and bookkeeping violations. Empty result = clean.
inline std::vector<AuditViolation> audit_trace(const ExecutionTrace& trace) {
  std::vector<AuditViolation> out;
  auto flag = [&](const char* kind, SimTime time, std::string detail) {
    out.push_back({kind, time, std::move(detail)});
  };

  using EntryId = std::pair<std::uint64_t, std::uint64_t>;  // (term, wclock)
  std::map<std::uint64_t, EntryId> committed;                // index -> entry
  std::map<std::uint64_t, NodeId> leader_of_term;
  std::map<NodeId, std::uint64_t> last_weight_wclock;
  std::map<NodeId, std::pair<std::uint64_t, std::uint64_t>> last_commit;  // node -> (index, wclock)
  std::map<NodeId, std::uint64_t> last_round_wclock;
  std::map<NodeId, int> active_t;

  const auto& recs = trace.records;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const TraceRecord& r = recs[i];
    switch (r.kind) {
      case TraceKind::commit: {
        const EntryId id{r.term, r.wclock};
        auto [it, fresh] = committed.emplace(r.index, id);
        if (!fresh && it->second != id)
          flag("divergent_commit", r.time,
               "index " + std::to_string(r.index) + " committed as term " + std::to_string(id.first) + " on node " +
                   std::to_string(r.from) + " but term " + std::to_string(it->second.first) + " elsewhere");
        auto& last = last_commit[r.from];
        if (last.first != 0 && r.index > last.first && r.wclock <= last.second)
          flag("wclock_regression", r.time,
               "node " + std::to_string(r.from) + " committed index " + std::to_string(r.index) + " with wclock " +
                   std::to_string(r.wclock) + " after " + std::to_string(last.second));
        if (r.index > last.first) last = {r.index, r.wclock};
        break;
      }
      case TraceKind::become_leader: {
        auto [it, fresh] = leader_of_term.emplace(r.term, r.from);
        if (!fresh && it->second != r.from)
          flag("dual_leader", r.time,
               "term " + std::to_string(r.term) + " led by " + std::to_string(it->second) + " and " +
                   std::to_string(r.from));
        std::map<std::uint64_t, EntryId> log;
        for (std::size_t j = i + 1; j < recs.size() && recs[j].kind == TraceKind::leader_log && recs[j].from == r.from;
             ++j)
          log[recs[j].index] = {recs[j].term, recs[j].wclock};
        for (const auto& [index, id] : committed) {
          auto lit = log.find(index);
          if (lit == log.end() || lit->second != id) {
            flag("stale_leader", r.time,
                 "leader " + std::to_string(r.from) + " of term " + std::to_string(r.term) +
                     " lacks committed index " + std::to_string(index));
            break;
          }
        }
        active_t.erase(r.from);
        break;
      }
      case TraceKind::weight: {
        auto [it, fresh] = last_weight_wclock.emplace(r.to, r.wclock);
        if (!fresh) {
          if (r.wclock < it->second)
            flag("wclock_regression", r.time,
                 "node " + std::to_string(r.to) + " stored wclock " + std::to_string(r.wclock) + " after " +
                     std::to_string(it->second));
          it->second = std::max(it->second, r.wclock);
        }
        break;
      }
      case TraceKind::round_start: {
        auto [it, fresh] = last_round_wclock.emplace(r.from, r.wclock);
        if (!fresh) {
          if (r.wclock <= it->second)
            flag("wclock_regression", r.time,
                 "leader " + std::to_string(r.from) + " reopened wclock " + std::to_string(r.wclock));
          it->second = r.wclock;
        }
        break;
      }
      case TraceKind::config:
        active_t[r.from] = static_cast<int>(r.weight);
        break;
      case TraceKind::assign: {
        if (r.index != 0) break;  // handle each group from its rank-0 record
        std::vector<double> got;
        std::set<NodeId> holders;
        std::size_t j = i;
        for (; j < recs.size() && recs[j].kind == TraceKind::assign && recs[j].from == r.from &&
               recs[j].wclock == r.wclock && recs[j].time == r.time && recs[j].index == got.size();
             ++j) {
          got.push_back(recs[j].weight);
          holders.insert(recs[j].to);
        }
        const int t = active_t.count(r.from) ? active_t[r.from] : trace.t;
        const auto sit = trace.schemes.find(t);
        if (sit == trace.schemes.end()) {
          flag("weight_multiset", r.time, "no scheme recorded for t=" + std::to_string(t));
          break;
        }
        std::vector<double> sorted = got;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        if (sorted != sit->second || holders.size() != got.size() || static_cast<int>(got.size()) != trace.n ||
            holders.count(r.from) == 0 || got.front() != sit->second.front() || recs[i].to != r.from)
          flag("weight_multiset", r.time,
               "assignment for wclock " + std::to_string(r.wclock) + " by " + std::to_string(r.from) +
                   " is not a permutation of the scheme with the leader on top");
        break;
      }
      default:
        break;
    }
  }
  return out;
}

}  // namespace cabinet
