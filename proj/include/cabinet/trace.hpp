#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cabinet/error.hpp"

namespace cabinet {

using NodeId = int;             // 1-based; 0 means "none" / broadcast
using SimTime = std::int64_t;   // simulated microseconds

constexpr SimTime from_ms(double ms) { return static_cast<SimTime>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5)); }
constexpr double to_ms(SimTime t) { return static_cast<double>(t) / 1000.0; }

enum class TraceKind : std::uint8_t {
  round_start,    // leader opened a round: wclock, index = entry index, weight = leader weight
  round_commit,   // round reached the threshold: weight = accumulated weight, to = replies counted
  ae_send,        // leader -> follower append (not heartbeats): weight = follower's round weight
  reply_recv,     // leader received a successful append reply: weight = echoed weight
  assign,         // next-round assignment: to = node, index = rank, wclock = round it applies to
  weight,         // follower stored (wclock, weight)
  commit,         // node committed entry: index, term = entry term, wclock = entry wclock
  become_leader,  // from = new leader, index = last log index
  become_candidate,
  become_follower,
  leader_log,     // one per entry of a newly elected leader's log
  vote_granted,   // from = voter, to = candidate
  config,         // node adopted a configuration: weight = t, index = config entry index, wclock = epoch
  crash,
  recover,
  regime,         // delay regime change: index = regime number
};

inline constexpr TraceKind kAllTraceKinds[] = {
    TraceKind::round_start, TraceKind::round_commit,     TraceKind::ae_send,        TraceKind::reply_recv,
    TraceKind::assign,      TraceKind::weight,           TraceKind::commit,         TraceKind::become_leader,
    TraceKind::become_candidate, TraceKind::become_follower, TraceKind::leader_log, TraceKind::vote_granted,
    TraceKind::config,      TraceKind::crash,            TraceKind::recover,        TraceKind::regime};

constexpr std::string_view to_string(TraceKind k) {
  switch (k) {
    case TraceKind::round_start: return "round_start";
    case TraceKind::round_commit: return "round_commit";
    case TraceKind::ae_send: return "ae_send";
    case TraceKind::reply_recv: return "reply_recv";
    case TraceKind::assign: return "assign";
    case TraceKind::weight: return "weight";
    case TraceKind::commit: return "commit";
    case TraceKind::become_leader: return "become_leader";
    case TraceKind::become_candidate: return "become_candidate";
    case TraceKind::become_follower: return "become_follower";
    case TraceKind::leader_log: return "leader_log";
    case TraceKind::vote_granted: return "vote_granted";
    case TraceKind::config: return "config";
    case TraceKind::crash: return "crash";
    case TraceKind::recover: return "recover";
    case TraceKind::regime: return "regime";
  }
  return "?";
}

inline TraceKind trace_kind_from_string(std::string_view s) {
  for (TraceKind k : kAllTraceKinds)
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::config_error, "unknown trace kind '" + std::string(s) + "'");
}

/// One line of the execution trace: {time, from, to, kind, term, wclock, weight, index}.
struct TraceRecord {
  SimTime time = 0;
  NodeId from = 0;
  NodeId to = 0;
  TraceKind kind = TraceKind::round_start;
  std::uint64_t term = 0;
  std::uint64_t wclock = 0;
  double weight = 0.0;
  std::uint64_t index = 0;

  bool operator==(const TraceRecord&) const = default;
};

/// Fixed key order and fixed number formatting so traces are byte-stable.
inline std::string to_line(const TraceRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"time\":%" PRId64 ".%03" PRId64 ",\"from\":%d,\"to\":%d,\"kind\":\"%s\",\"term\":%" PRIu64
                ",\"wclock\":%" PRIu64 ",\"weight\":%.17g,\"index\":%" PRIu64 "}",
                r.time / 1000, (r.time % 1000 + 1000) % 1000, r.from, r.to, std::string(to_string(r.kind)).c_str(),
                r.term, r.wclock, r.weight, r.index);
  return buf;
}

inline TraceRecord record_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.time = from_ms(j.at("time").get<double>());
  r.from = j.at("from").get<NodeId>();
  r.to = j.at("to").get<NodeId>();
  r.kind = trace_kind_from_string(j.at("kind").get<std::string>());
  r.term = j.at("term").get<std::uint64_t>();
  r.wclock = j.at("wclock").get<std::uint64_t>();
  r.weight = j.at("weight").get<double>();
  r.index = j.at("index").get<std::uint64_t>();
  return r;
}

enum class RunOutcome { completed, livelock_detected };

/// Everything a run produced. `schemes` maps each failure threshold used in
/// the run to its weight list so auditors can check assignments.
struct ExecutionTrace {
  int n = 0;
  int t = 0;
  std::string algo;
  std::uint64_t seed = 0;
  RunOutcome outcome = RunOutcome::completed;
  SimTime end_time = 0;
  std::map<int, std::vector<double>> schemes;
  std::vector<TraceRecord> records;

  std::vector<TraceRecord> of_kind(TraceKind k) const {
    std::vector<TraceRecord> out;
    for (const auto& r : records)
      if (r.kind == k) out.push_back(r);
    return out;
  }
};

inline void write_jsonl(std::ostream& os, const ExecutionTrace& trace) {
  nlohmann::ordered_json header;
  header["n"] = trace.n;
  header["t"] = trace.t;
  header["algo"] = trace.algo;
  header["seed"] = trace.seed;
  header["outcome"] = trace.outcome == RunOutcome::completed ? "completed" : "livelock_detected";
  header["end_time"] = to_ms(trace.end_time);
  nlohmann::ordered_json schemes = nlohmann::ordered_json::object();
  for (const auto& [t, w] : trace.schemes) schemes[std::to_string(t)] = w;
  header["schemes"] = schemes;
  os << header.dump() << '\n';
  for (const auto& r : trace.records) os << to_line(r) << '\n';
}

inline ExecutionTrace read_jsonl(std::istream& is) {
  ExecutionTrace trace;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::config_error, "empty trace");
  try {
    const auto header = nlohmann::json::parse(line);
    trace.n = header.at("n").get<int>();
    trace.t = header.at("t").get<int>();
    trace.algo = header.at("algo").get<std::string>();
    trace.seed = header.at("seed").get<std::uint64_t>();
    trace.outcome =
        header.at("outcome").get<std::string>() == "completed" ? RunOutcome::completed : RunOutcome::livelock_detected;
    trace.end_time = from_ms(header.at("end_time").get<double>());
    for (const auto& [t, w] : header.at("schemes").items()) trace.schemes[std::stoi(t)] = w.get<std::vector<double>>();
    while (std::getline(is, line))
      if (!line.empty()) trace.records.push_back(record_from_json(nlohmann::json::parse(line)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("bad trace: ") + e.what());
  }
  return trace;
}

}  // namespace cabinet
