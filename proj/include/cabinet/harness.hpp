#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cabinet/delay_model.hpp"
#include "cabinet/error.hpp"
#include "cabinet/simulator.hpp"
#include "cabinet/verifier.hpp"
#include "cabinet/weight_scheme.hpp"
#include "cabinet/workload.hpp"

namespace cabinet {

// ---- scenario building -----------------------------------------------------

/// Parses "<int>" or "f<x>%": t = max(1, round(x * n / 100)), capped at
/// the largest threshold n supports.
inline int parse_threshold(const std::string& s, int n) {
  if (s.size() >= 3 && s.front() == 'f' && s.back() == '%') {
    double pct = 0.0;
    try {
      pct = std::stod(s.substr(1, s.size() - 2));
    } catch (const std::exception&) {
      throw Error(ErrorCode::config_error, "bad threshold '" + s + "'");
    }
    if (pct <= 0.0) throw Error(ErrorCode::config_error, "threshold percent must be > 0");
    const int t = std::max(1, static_cast<int>(std::lround(pct * n / 100.0)));
    return std::min(t, max_threshold(n));
  }
  try {
    std::size_t used = 0;
    const int t = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return t;
  } catch (const std::exception&) {
    throw Error(ErrorCode::config_error, "bad threshold '" + s + "'");
  }
}

inline Algo algo_from_string(const std::string& s) {
  if (s == "cabinet") return Algo::cabinet;
  if (s == "baseline" || s == "raft") return Algo::majority_baseline;
  throw Error(ErrorCode::config_error, "unknown algo '" + s + "'");
}

inline KillStrategy kill_strategy_from_string(const std::string& s) {
  if (s == "none") return KillStrategy::none;
  if (s == "strong" || s == "strong_kills") return KillStrategy::strong_kills;
  if (s == "weak" || s == "weak_kills") return KillStrategy::weak_kills;
  if (s == "random" || s == "random_kills") return KillStrategy::random_kills;
  throw Error(ErrorCode::config_error, "unknown kill strategy '" + s + "'");
}

/// Command-line values; anything set here wins over the scenario file.
struct RunFlags {
  std::optional<std::string> algo;
  std::optional<int> n;
  std::optional<std::string> t;
  std::optional<std::size_t> batch;
  std::optional<int> rounds;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> delay;
  std::optional<std::string> crash;
};

inline HeterogeneityProfile profile_from_json(const nlohmann::json& j, int n) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "heterogeneous") return HeterogeneityProfile::heterogeneous(n);
    if (name == "homogeneous") return HeterogeneityProfile::homogeneous(n);
    throw Error(ErrorCode::config_error, "unknown profile '" + name + "'");
  }
  HeterogeneityProfile p;
  const double per_op = j.value("per_op_ms", p.per_op_ms);
  if (j.contains("preset")) p = profile_from_json(j["preset"], n);
  p.per_op_ms = per_op;
  p.reference_vcpus = j.value("reference_vcpus", p.reference_vcpus);
  if (j.contains("zones")) {
    p.zones.clear();
    for (const auto& z : j["zones"])
      p.zones.push_back({z.value("name", std::string("zone")), z.at("vcpus").get<int>(), z.at("nodes").get<std::vector<NodeId>>()});
  }
  return p;
}

inline CrashPlan crash_from_json(const nlohmann::json& j) {
  if (j.is_string()) return crash_from_flag(j.get<std::string>());
  CrashPlan plan;
  plan.strategy = kill_strategy_from_string(j.value("strategy", std::string("none")));
  plan.count = j.value("count", 0);
  plan.trigger_round = j.value("trigger_round", 0);
  plan.stagger = j.value("stagger", 0);
  return plan;
}

/// Builds a validated scenario from an optional scenario document and flag
/// overrides. The seed falls back to CABINET_SEED, then 1.
inline Scenario build_scenario(const nlohmann::json& doc, const RunFlags& flags) {
  try {
    const nlohmann::json j = doc.is_null() ? nlohmann::json::object() : doc;
    Scenario sc;

    const int n = flags.n.value_or(j.value("n", 5));
    const Algo algo = algo_from_string(flags.algo.value_or(j.value("algo", std::string("cabinet"))));
    std::string t_text = "f10%";
    if (j.contains("t")) t_text = j["t"].is_string() ? j["t"].get<std::string>() : std::to_string(j["t"].get<int>());
    if (flags.t) t_text = *flags.t;
    if (n < 3) throw Error(ErrorCode::config_error, "n must be >= 3");
    const int t = parse_threshold(t_text, n);

    sc.config = ClusterConfig::make(n, algo == Algo::cabinet ? t : std::max(1, std::min(t, max_threshold(n))), algo);
    sc.profile = j.contains("profile") ? profile_from_json(j["profile"], n) : HeterogeneityProfile::heterogeneous(n);
    sc.delays = flags.delay ? delay_from_flag(*flags.delay) : j.contains("delay") ? delay_from_json(j["delay"]) : DelayModel{};
    sc.crashes = flags.crash ? crash_from_flag(*flags.crash) : j.contains("crash") ? crash_from_json(j["crash"]) : CrashPlan{};
    if (j.contains("workload")) sc.mix = mix_from_json(j["workload"]);
    sc.batch_size = flags.batch.value_or(j.value("batch", std::size_t{5000}));
    sc.rounds = flags.rounds.value_or(j.value("rounds", 100));

    std::uint64_t seed = 1;
    if (const char* env = std::getenv("CABINET_SEED"); env != nullptr && *env != '\0') seed = std::stoull(env);
    if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
    if (flags.seed) seed = *flags.seed;
    sc.seed = seed;

    if (j.contains("reconfig"))
      for (const auto& step : j["reconfig"]) sc.reconfig.push_back({step.at("after_round").get<int>(), step.at("t").get<int>()});
    if (j.contains("loads"))
      for (const auto& l : j["loads"])
        sc.loads.push_back({l.at("nodes").get<std::vector<NodeId>>(), l.at("factor").get<double>(), l.value("start_ms", 0.0),
                            l.at("duration_ms").get<double>()});
    if (j.contains("faults"))
      for (const auto& f : j["faults"])
        sc.faults.push_back({f.value("at_ms", 0.0), f.at("node").get<NodeId>(), f.value("recover", false), f.value("after_round", -1)});

    const nlohmann::json opts = j.value("options", nlohmann::json::object());
    sc.options.heartbeat_ms = opts.value("heartbeat_ms", sc.options.heartbeat_ms);
    sc.options.livelock_cap_ms = opts.value("livelock_cap_ms", sc.options.livelock_cap_ms);
    sc.options.bootstrap_leader = opts.value("bootstrap_leader", sc.options.bootstrap_leader);
    sc.options.grace_factor = opts.value("grace_factor", sc.options.grace_factor);
    if (opts.contains("reply_extra_ms")) sc.options.reply_extra_ms = opts["reply_extra_ms"].get<std::vector<double>>();

    // Election timeouts must outlast a heartbeat round trip under the
    // configured delays, otherwise followers depose healthy leaders.
    const double floor_ms = std::max(150.0, 3.0 * sc.delays.max_one_way_ms());
    sc.config.election_timeout_min_ms = floor_ms;
    sc.config.election_timeout_max_ms = 2.0 * floor_ms;
    if (opts.contains("election_timeout_ms")) {
      const auto range = opts["election_timeout_ms"].get<std::vector<double>>();
      if (range.size() != 2) throw Error(ErrorCode::config_error, "election_timeout_ms needs [min, max]");
      sc.config.election_timeout_min_ms = range[0];
      sc.config.election_timeout_max_ms = range[1];
    }

    sc.validate();
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("bad scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::config_error, std::string("bad number: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw Error(ErrorCode::config_error, std::string("number out of range: ") + e.what());
  }
}

// ---- metrics ---------------------------------------------------------------

struct MetricsRow {
  int round = 0;
  std::uint64_t wclock = 0;
  std::string algo;
  double commit_latency_ms = 0.0;
  double throughput_ops_per_s = 0.0;
  int quorum_replies_counted = 0;
  std::vector<NodeId> cabinet_ids;
  NodeId leader_id = 0;
  int active_delay_regime = 0;
  int crashed_count = 0;
};

inline constexpr const char* kCsvHeader =
    "round,wclock,algo,commit_latency_ms,throughput_ops_per_s,quorum_replies_counted,cabinet_ids,leader_id,"
    "active_delay_regime,crashed_count";

/// One row per committed client round; configuration rounds are skipped.
inline std::vector<MetricsRow> metrics_rows(const SimResult& result) {
  std::vector<MetricsRow> rows;
  for (const auto& s : result.samples) {
    if (s.is_config || !s.has_commit) continue;
    MetricsRow row;
    row.round = s.round;
    row.wclock = s.wclock;
    row.algo = result.trace.algo;
    const SimTime elapsed = std::max<SimTime>(1, s.committed - s.started);
    row.commit_latency_ms = to_ms(s.committed - s.started);
    row.throughput_ops_per_s = static_cast<double>(s.batch_size) / (static_cast<double>(elapsed) / 1e6);
    row.quorum_replies_counted = s.replies_counted;
    row.cabinet_ids = s.cabinet;
    row.leader_id = s.leader;
    row.active_delay_regime = s.delay_regime;
    row.crashed_count = s.crashed;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string to_csv_line(const MetricsRow& r) {
  std::string ids;
  for (std::size_t i = 0; i < r.cabinet_ids.size(); ++i) {
    if (i) ids += ';';
    ids += std::to_string(r.cabinet_ids[i]);
  }
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%llu,%s,%.3f,%.3f,%d,%s,%d,%d,%d", r.round,
                static_cast<unsigned long long>(r.wclock), r.algo.c_str(), r.commit_latency_ms, r.throughput_ops_per_s,
                r.quorum_replies_counted, ids.c_str(), r.leader_id, r.active_delay_regime, r.crashed_count);
  return buf;
}

struct Summary {
  int rounds = 0;
  double mean_latency_ms = 0.0;
  double p99_latency_ms = 0.0;
  double mean_throughput = 0.0;
  int cabinet_churn = 0;                     // rounds whose cabinet differs from the previous one
  std::map<int, double> stage_mean_latency;  // by failure threshold
};

inline Summary summarize(const std::vector<MetricsRow>& rows, const std::vector<RoundSample>& samples = {}) {
  Summary s;
  s.rounds = static_cast<int>(rows.size());
  if (rows.empty()) return s;
  std::vector<double> lat;
  double thr = 0.0;
  for (const auto& r : rows) {
    lat.push_back(r.commit_latency_ms);
    thr += r.throughput_ops_per_s;
  }
  s.mean_latency_ms = std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(lat.size());
  s.mean_throughput = thr / static_cast<double>(rows.size());
  std::vector<double> sorted = lat;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size())));
  s.p99_latency_ms = sorted[std::max<std::size_t>(rank, 1) - 1];
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::set<NodeId> a(rows[i - 1].cabinet_ids.begin(), rows[i - 1].cabinet_ids.end());
    const std::set<NodeId> b(rows[i].cabinet_ids.begin(), rows[i].cabinet_ids.end());
    if (a != b) ++s.cabinet_churn;
  }
  std::map<int, std::pair<double, int>> stage;
  for (const auto& smp : samples) {
    if (smp.is_config || !smp.has_commit) continue;
    auto& [sum, count] = stage[smp.t];
    sum += to_ms(smp.committed - smp.started);
    ++count;
  }
  for (const auto& [t, acc] : stage) s.stage_mean_latency[t] = acc.first / acc.second;
  return s;
}

inline void write_csv(std::ostream& os, const std::vector<MetricsRow>& rows, const Summary& summary) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) os << to_csv_line(r) << '\n';
  char buf[256];
  os << "# summary\n";
  std::snprintf(buf, sizeof buf, "# rounds,%d\n# mean_commit_latency_ms,%.3f\n# p99_commit_latency_ms,%.3f\n",
                summary.rounds, summary.mean_latency_ms, summary.p99_latency_ms);
  os << buf;
  std::snprintf(buf, sizeof buf, "# mean_throughput_ops_per_s,%.3f\n# cabinet_churn,%d\n", summary.mean_throughput,
                summary.cabinet_churn);
  os << buf;
  if (summary.stage_mean_latency.size() > 1)
    for (const auto& [t, mean] : summary.stage_mean_latency) {
      std::snprintf(buf, sizeof buf, "# stage_t%d_mean_commit_latency_ms,%.3f\n", t, mean);
      os << buf;
    }
}

// ---- experiment ------------------------------------------------------------

enum ExitCode { kExitOk = 0, kExitConfigError = 2, kExitAuditFailed = 3, kExitLivelock = 4 };

struct ExperimentResult {
  SimResult sim;
  std::vector<MetricsRow> rows;
  Summary summary;
  std::vector<AuditViolation> violations;
  int exit_code = kExitOk;
};

/// Simulates, audits and tabulates one scenario.
inline ExperimentResult run_experiment(const Scenario& scenario) {
  ExperimentResult r;
  r.sim = run(scenario);
  r.violations = audit_trace(r.sim.trace);
  r.rows = metrics_rows(r.sim);
  r.summary = summarize(r.rows, r.sim.samples);
  if (!r.violations.empty()) r.exit_code = kExitAuditFailed;
  else if (r.sim.trace.outcome == RunOutcome::livelock_detected) r.exit_code = kExitLivelock;
  return r;
}

struct PairedComparison {
  ExperimentResult cabinet;
  ExperimentResult baseline;

  /// Baseline mean latency over cabinet mean latency.
  double latency_ratio() const {
    return cabinet.summary.mean_latency_ms > 0.0 ? baseline.summary.mean_latency_ms / cabinet.summary.mean_latency_ms
                                                 : 0.0;
  }
};

/// Runs the scenario under both algorithms with the same seed, so both see
/// the same delay draws and workload batches.
inline PairedComparison paired_compare(Scenario scenario) {
  PairedComparison out;
  Scenario cab = scenario;
  if (cab.config.algo != Algo::cabinet) {
    ClusterConfig c = ClusterConfig::make(cab.config.n, cab.config.t, Algo::cabinet);
    c.election_timeout_min_ms = cab.config.election_timeout_min_ms;
    c.election_timeout_max_ms = cab.config.election_timeout_max_ms;
    cab.config = c;
  }
  Scenario base = cab;
  base.config.algo = Algo::majority_baseline;
  base.reconfig.clear();
  out.cabinet = run_experiment(cab);
  out.baseline = run_experiment(base);
  return out;
}

inline void write_comparison(std::ostream& os, const PairedComparison& cmp) {
  char buf[512];
  os << "algo,rounds,mean_commit_latency_ms,p99_commit_latency_ms,mean_throughput_ops_per_s,cabinet_churn\n";
  for (const auto* r : {&cmp.cabinet, &cmp.baseline}) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.3f,%.3f,%.3f,%d\n", r->sim.trace.algo.c_str(), r->summary.rounds,
                  r->summary.mean_latency_ms, r->summary.p99_latency_ms, r->summary.mean_throughput,
                  r->summary.cabinet_churn);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "# baseline_over_cabinet_latency,%.4f\n", cmp.latency_ratio());
  os << buf;
}

}  // namespace cabinet
