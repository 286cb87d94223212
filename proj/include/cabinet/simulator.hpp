#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include "cabinet/delay_model.hpp"
#include "cabinet/error.hpp"
#include "cabinet/node.hpp"
#include "cabinet/rng.hpp"
#include "cabinet/trace.hpp"
#include "cabinet/workload.hpp"

namespace cabinet {

// ---- heterogeneity ---------------------------------------------------------

struct Zone {
  std::string name;
  int vcpus = 4;
  std::vector<NodeId> nodes;
};

/// Per-node service time for one batch:
///   per_op_ms x batch cost x (reference_vcpus / zone vcpus) x load factor.
struct HeterogeneityProfile {
  std::vector<Zone> zones;
  double per_op_ms = 0.01;
  double reference_vcpus = 4.0;

  /// The five cloud zones, strongest first, spread over node ids
  /// ascending: node 1 sits in the 16-vCPU zone.
  static HeterogeneityProfile heterogeneous(int n, double per_op_ms = 0.01) {
    struct Spec {
      const char* name;
      int vcpus;
    };
    static constexpr std::array<Spec, 5> kZones{{{"Z5", 16}, {"Z4", 8}, {"Z3", 4}, {"Z2", 2}, {"Z1", 1}}};
    // Zone sizes (Z5..Z1) for the cluster scales used in the evaluation.
    std::array<int, 5> counts{};
    switch (n) {
      case 3: counts = {1, 0, 1, 0, 1}; break;
      case 5: counts = {1, 1, 1, 1, 1}; break;
      case 7: counts = {2, 1, 1, 1, 2}; break;
      case 11: counts = {3, 2, 2, 2, 2}; break;
      default:
        for (int i = 0; i < n; ++i) ++counts[i % 5];
    }
    HeterogeneityProfile p;
    p.per_op_ms = per_op_ms;
    NodeId next = 1;
    for (std::size_t z = 0; z < kZones.size(); ++z) {
      if (counts[z] == 0) continue;
      Zone zone{kZones[z].name, kZones[z].vcpus, {}};
      for (int i = 0; i < counts[z]; ++i) zone.nodes.push_back(next++);
      p.zones.push_back(std::move(zone));
    }
    return p;
  }

  /// Every node in the 4-vCPU zone.
  static HeterogeneityProfile homogeneous(int n, double per_op_ms = 0.01) {
    HeterogeneityProfile p;
    p.per_op_ms = per_op_ms;
    Zone z{"Z3", 4, {}};
    for (NodeId i = 1; i <= n; ++i) z.nodes.push_back(i);
    p.zones.push_back(std::move(z));
    return p;
  }

  const Zone& zone_of(NodeId node) const {
    for (const auto& z : zones)
      if (std::find(z.nodes.begin(), z.nodes.end(), node) != z.nodes.end()) return z;
    throw Error(ErrorCode::config_error, "node " + std::to_string(node) + " is in no zone");
  }

  double speed_factor(NodeId node) const { return reference_vcpus / zone_of(node).vcpus; }

  void validate(int n) const {
    std::vector<int> seen(n + 1, 0);
    for (const auto& z : zones) {
      if (z.vcpus <= 0) throw Error(ErrorCode::config_error, "zone " + z.name + " needs vcpus > 0");
      for (NodeId id : z.nodes) {
        if (id < 1 || id > n) throw Error(ErrorCode::config_error, "zone " + z.name + " has node out of range");
        ++seen[id];
      }
    }
    for (NodeId id = 1; id <= n; ++id)
      if (seen[id] != 1) throw Error(ErrorCode::config_error, "node " + std::to_string(id) + " must be in exactly one zone");
    if (per_op_ms <= 0.0) throw Error(ErrorCode::config_error, "per_op_ms must be > 0");
  }
};

/// Multiplies the service time of `nodes` by `factor` during a window.
struct LoadChange {
  std::vector<NodeId> nodes;
  double factor = 1.0;
  double start_ms = 0.0;
  double duration_ms = 0.0;
};

// ---- faults ----------------------------------------------------------------

enum class KillStrategy { none, strong_kills, weak_kills, random_kills };

constexpr std::string_view to_string(KillStrategy s) {
  switch (s) {
    case KillStrategy::none: return "none";
    case KillStrategy::strong_kills: return "strong";
    case KillStrategy::weak_kills: return "weak";
    case KillStrategy::random_kills: return "random";
  }
  return "?";
}

/// Crashes `count` nodes once `trigger_round` client rounds have committed.
/// Targets are resolved against the leader's assignment at that instant.
/// With stagger > 0 the kills are spread one per `stagger` rounds.
struct CrashPlan {
  KillStrategy strategy = KillStrategy::none;
  int count = 0;
  int trigger_round = 0;
  int stagger = 0;

  void validate(int n) const {
    if (strategy == KillStrategy::none) return;
    if (count < 0 || count > n - 1) throw Error(ErrorCode::config_error, "crash count must be in [0, n-1]");
    if (trigger_round < 0 || stagger < 0) throw Error(ErrorCode::config_error, "crash rounds must be >= 0");
  }
};

/// Parses "none" or "<strong|weak|random>:<x>@<round>[/<stagger>]".
inline CrashPlan crash_from_flag(const std::string& flag) {
  CrashPlan plan;
  if (flag == "none") return plan;
  const auto colon = flag.find(':');
  const auto at = flag.find('@');
  if (colon == std::string::npos || at == std::string::npos || at < colon)
    throw Error(ErrorCode::config_error, "bad crash spec '" + flag + "'");
  const std::string kind = flag.substr(0, colon);
  if (kind == "strong") plan.strategy = KillStrategy::strong_kills;
  else if (kind == "weak") plan.strategy = KillStrategy::weak_kills;
  else if (kind == "random") plan.strategy = KillStrategy::random_kills;
  else throw Error(ErrorCode::config_error, "unknown kill strategy '" + kind + "'");
  try {
    plan.count = std::stoi(flag.substr(colon + 1, at - colon - 1));
    const std::string rest = flag.substr(at + 1);
    const auto slash = rest.find('/');
    plan.trigger_round = std::stoi(rest.substr(0, slash));
    if (slash != std::string::npos) plan.stagger = std::stoi(rest.substr(slash + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::config_error, "bad crash spec '" + flag + "'");
  }
  return plan;
}

/// Crash or restart a node at a fixed simulated time, or (after_round >= 0)
/// right after that many client rounds committed, before the next one starts.
struct ScriptedFault {
  double at_ms = 0.0;
  NodeId node = 0;
  bool recover = false;
  int after_round = -1;
};

/// Change the failure threshold once `after_round` client rounds committed.
struct ReconfigStep {
  int after_round = 0;
  int t = 0;
};

// ---- scenario --------------------------------------------------------------

struct SimOptions {
  double heartbeat_ms = 50.0;
  /// No commit for this long => livelock. 0 derives 1000x the expected round latency.
  double livelock_cap_ms = 0.0;
  /// Node started as leader of term 1; 0 starts leaderless and elects one.
  NodeId bootstrap_leader = 1;
  double grace_factor = 0.0;
  /// Extra per-node latency: every reply from node i is held for
  /// reply_extra_ms[i - 1] on top of its service time. Used to script orderings.
  std::vector<double> reply_extra_ms;
};

struct Scenario {
  ClusterConfig config;
  HeterogeneityProfile profile;
  DelayModel delays;
  CrashPlan crashes;
  OperationMix mix = builtin_mix("A");
  std::size_t batch_size = 5000;
  std::uint64_t seed = 1;
  int rounds = 100;
  std::vector<ReconfigStep> reconfig;
  std::vector<LoadChange> loads;
  std::vector<ScriptedFault> faults;
  SimOptions options;

  void validate() const {
    const int n = config.n;
    if (n < 3) throw Error(ErrorCode::config_error, "n must be >= 3");
    if (config.algo == Algo::cabinet && !threshold_in_range(n, config.t))
      throw Error(ErrorCode::bad_threshold_range, "t=" + std::to_string(config.t));
    if (rounds < 1) throw Error(ErrorCode::config_error, "rounds must be >= 1");
    if (batch_size < 1) throw Error(ErrorCode::config_error, "batch must be >= 1");
    if (config.election_timeout_min_ms <= 0 || config.election_timeout_max_ms < config.election_timeout_min_ms)
      throw Error(ErrorCode::config_error, "bad election timeout range");
    profile.validate(n);
    delays.validate();
    crashes.validate(n);
    mix.validate();
    for (const auto& step : reconfig)
      if (!threshold_in_range(n, step.t)) throw Error(ErrorCode::bad_threshold_range, "reconfig t=" + std::to_string(step.t));
    if (options.bootstrap_leader < 0 || options.bootstrap_leader > n)
      throw Error(ErrorCode::config_error, "bootstrap leader out of range");
    for (const auto& f : faults)
      if (f.node < 1 || f.node > n || f.at_ms < 0.0) throw Error(ErrorCode::config_error, "bad scripted fault");
  }

  /// Slowest node's service time plus the worst round-trip delay.
  double expected_round_ms() const {
    double worst = 0.0;
    for (NodeId i = 1; i <= config.n; ++i) worst = std::max(worst, profile.speed_factor(i));
    double cost = 0.0;
    for (const auto& [kind, p] : mix.ratios) cost += p * op_cost(kind);
    double extra = 0.0;
    for (double e : options.reply_extra_ms) extra = std::max(extra, e);
    return profile.per_op_ms * cost * static_cast<double>(batch_size) * worst + 2.0 * delays.max_one_way_ms() + extra +
           1.0;
  }

  double livelock_cap_ms() const {
    return options.livelock_cap_ms > 0.0 ? options.livelock_cap_ms : 1000.0 * expected_round_ms();
  }
};

/// Per-round metrics sample collected while the simulation runs.
struct RoundSample {
  int round = 0;  // 1-based count of committed client rounds
  std::uint64_t wclock = 0;
  std::uint64_t index = 0;
  NodeId leader = 0;
  int t = 0;
  bool is_config = false;
  SimTime started = 0;
  SimTime committed = 0;
  int replies_counted = 0;
  bool has_commit = false;
  std::vector<NodeId> cabinet;     // leader + t highest weights at round start
  std::vector<NodeId> reply_order; // wQ order up to finalization
  int delay_regime = 0;
  int crashed = 0;
  std::size_t batch_size = 0;
};

struct SimResult {
  ExecutionTrace trace;
  std::vector<RoundSample> samples;
};

// ---- simulator -------------------------------------------------------------

/// Single-threaded discrete-event simulator. Events run in
/// (time, tiebreak, seq) order; deliveries use the sender id as tiebreak so
/// simultaneous arrivals are processed lower id first.
class Simulator {
 public:
  explicit Simulator(Scenario scenario) : sc_(std::move(scenario)), rng_(sc_.seed) {
    sc_.validate();
    const int n = sc_.config.n;
    NodeOptions opts;
    opts.grace_factor = sc_.options.grace_factor;
    for (NodeId i = 1; i <= n; ++i) {
      nodes_.emplace_back(i, sc_.config, opts);
      streams_.push_back({rng_.split(i, "append"), rng_.split(i, "heartbeat"), rng_.split(i, "vote"),
                          rng_.split(i, "election")});
    }
    alive_.assign(n + 1, true);
    incarnation_.assign(n + 1, 0);
    busy_until_.assign(n + 1, 0);
    election_gen_.assign(n + 1, 0);
    heartbeat_gen_.assign(n + 1, 0);
    channel_last_.assign(static_cast<std::size_t>((n + 1) * (n + 1)), 0);
    workload_rng_ = rng_.split(0, "workload");
    crash_rng_ = rng_.split(0, "crash");

    trace_.n = n;
    trace_.t = sc_.config.t;
    trace_.algo = std::string(to_string(sc_.config.algo));
    trace_.seed = sc_.seed;
    if (sc_.config.algo == Algo::cabinet) {
      trace_.schemes[sc_.config.t] = sc_.config.scheme.weights;
      for (const auto& step : sc_.reconfig) trace_.schemes[step.t] = generate_scheme(n, step.t).weights;
    }
  }

  SimResult run() {
    const int n = sc_.config.n;
    const SimTime cap = from_ms(sc_.livelock_cap_ms());

    for (const auto& f : sc_.faults)
      if (f.after_round < 0) push(from_ms(f.at_ms), tiebreak_timer(f.node), FaultEvent{f.node, f.recover});

    if (sc_.options.bootstrap_leader > 0) {
      const NodeId leader = sc_.options.bootstrap_leader;
      for (auto& node : nodes_)
        if (node.id() != leader) node.bootstrap_follower(1, leader);
      node(leader).bootstrap_leader(1, 0);
    }
    for (NodeId i = 1; i <= n; ++i) arm_election(i, 0);
    for (NodeId i = 1; i <= n; ++i) drain(i, 0);
    for (NodeId i = 1; i <= n; ++i) kick(i, 0);

    SimTime last_commit = 0;
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      if (ev.time - last_commit > cap) {
        trace_.outcome = RunOutcome::livelock_detected;
        now_ = last_commit + cap;
        break;
      }
      now_ = ev.time;
      const std::size_t before_samples = samples_.size();
      std::visit([&](auto& e) { handle(e); }, ev.body);
      if (samples_.size() != before_samples) last_commit = now_;
      if (committed_rounds_ >= sc_.rounds) break;
    }
    if (queue_.empty() && committed_rounds_ < sc_.rounds) trace_.outcome = RunOutcome::livelock_detected;
    trace_.end_time = now_;
    return {std::move(trace_), std::move(samples_)};
  }

  const Node& node(NodeId id) const { return nodes_.at(id - 1); }

 private:
  struct Deliver {
    Message msg;
    std::uint32_t from_inc = 0;
    std::uint32_t to_inc = 0;
  };
  struct Emit {  // reply leaving a follower once its service completes
    Message msg;
    std::uint32_t inc = 0;
  };
  struct ElectionTimer {
    NodeId node = 0;
    std::uint64_t gen = 0;
  };
  struct HeartbeatTimer {
    NodeId node = 0;
    std::uint64_t gen = 0;
  };
  struct CloseRound {
    NodeId node = 0;
    std::uint64_t wclock = 0;
  };
  struct FaultEvent {
    NodeId node = 0;
    bool recover = false;
  };
  using EventBody = std::variant<Deliver, Emit, ElectionTimer, HeartbeatTimer, CloseRound, FaultEvent>;

  struct Event {
    SimTime time = 0;
    int tiebreak = 0;
    std::uint64_t seq = 0;
    EventBody body;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.tiebreak != b.tiebreak) return a.tiebreak > b.tiebreak;
      return a.seq > b.seq;
    }
  };

  struct Streams {
    Rng append, heartbeat, vote, election;
  };

  Node& node(NodeId id) { return nodes_.at(id - 1); }

  void push(SimTime time, int tiebreak, EventBody body) {
    queue_.push(Event{time, tiebreak, seq_++, std::move(body)});
  }

  int crashed_count() const {
    return static_cast<int>(std::count(alive_.begin() + 1, alive_.end(), false));
  }

  int tiebreak_timer(NodeId id) const { return sc_.config.n + 1 + id; }

  // -- sending

  void send(Message msg) {
    const NodeId from = msg.from;
    const NodeId to = msg.to;
    if (!alive_[from]) return;
    const NodeId owner = msg.is_request() ? to : from;
    Streams& s = streams_[owner - 1];
    Rng* rng = &s.vote;
    if (const auto* ae = std::get_if<AppendEntriesMsg>(&msg.body)) rng = ae->heartbeat ? &s.heartbeat : &s.append;
    else if (const auto* r = std::get_if<AppendReply>(&msg.body)) rng = r->heartbeat ? &s.heartbeat : &s.append;

    const SimTime delay = sample_delay(sc_.delays, owner, sc_.config.n, now_, rotation_, *rng);
    SimTime& last = channel_last_[static_cast<std::size_t>(from * (sc_.config.n + 1) + to)];
    const SimTime at = std::max(now_ + delay, last);  // channels are FIFO
    last = at;
    push(at, from, Deliver{std::move(msg), incarnation_[from], incarnation_[to]});
  }

  double service_ms(NodeId id, const AppendEntriesMsg& ae, SimTime start) const {
    double cost = 0.0;
    for (const auto& e : ae.entries) cost += e.batch ? e.batch->cost() : 1.0;
    double factor = sc_.profile.speed_factor(id);
    for (const auto& load : sc_.loads) {
      if (std::find(load.nodes.begin(), load.nodes.end(), id) == load.nodes.end()) continue;
      if (start >= from_ms(load.start_ms) && start < from_ms(load.start_ms + load.duration_ms)) factor *= load.factor;
    }
    return sc_.profile.per_op_ms * cost * factor;
  }

  // -- event handlers

  void handle(Deliver& ev) {
    const NodeId from = ev.msg.from;
    const NodeId to = ev.msg.to;
    if (!alive_[to] || !alive_[from] || incarnation_[to] != ev.to_inc || incarnation_[from] != ev.from_inc) return;
    Node& dst = node(to);

    std::visit(
        [&](auto& body) {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, AppendEntriesMsg>) {
            AppendReply reply = dst.handle_append_entries(body, now_);
            Message out{to, from, reply};
            if (reply.success && !body.entries.empty()) {
              double extra = 0.0;
              if (static_cast<std::size_t>(to - 1) < sc_.options.reply_extra_ms.size())
                extra = sc_.options.reply_extra_ms[to - 1];
              const SimTime start = std::max(now_, busy_until_[to]);
              const SimTime done = start + from_ms(service_ms(to, body, start)) + from_ms(extra);
              busy_until_[to] = done;
              push(done, to, Emit{std::move(out), incarnation_[to]});
            } else {
              dst_outbox_messages_.push_back(std::move(out));
            }
          } else if constexpr (std::is_same_v<T, AppendReply>) {
            dst.on_append_reply(body, now_);
          } else if constexpr (std::is_same_v<T, RequestVoteMsg>) {
            VoteReply reply = dst.handle_vote_request(body, now_);
            dst_outbox_messages_.push_back(Message{to, from, reply});
          } else if constexpr (std::is_same_v<T, VoteReply>) {
            dst.on_vote_reply(body, now_);
          }
        },
        ev.msg.body);

    for (auto& m : dst_outbox_messages_) send(std::move(m));
    dst_outbox_messages_.clear();
    drain(to, now_);
    kick(to, now_);
  }

  void handle(Emit& ev) {
    const NodeId from = ev.msg.from;
    if (!alive_[from] || incarnation_[from] != ev.inc) return;
    send(std::move(ev.msg));
  }

  void handle(ElectionTimer& ev) {
    if (!alive_[ev.node] || election_gen_[ev.node] != ev.gen) return;
    Node& nd = node(ev.node);
    if (nd.role() == Role::leader) return;
    for (auto& m : nd.start_election(now_)) send(std::move(m));
    drain(ev.node, now_);
    kick(ev.node, now_);
  }

  void handle(HeartbeatTimer& ev) {
    if (!alive_[ev.node] || heartbeat_gen_[ev.node] != ev.gen) return;
    Node& nd = node(ev.node);
    if (nd.role() != Role::leader) return;
    for (auto& m : nd.heartbeat(now_)) send(std::move(m));
    push(now_ + from_ms(sc_.options.heartbeat_ms), tiebreak_timer(ev.node), HeartbeatTimer{ev.node, ev.gen});
  }

  void handle(CloseRound& ev) {
    if (!alive_[ev.node]) return;
    Node& nd = node(ev.node);
    if (nd.role() != Role::leader || !nd.round_open() || nd.round()->wclock != ev.wclock) return;
    nd.finalize_round(now_);
    drain(ev.node, now_);
    kick(ev.node, now_);
  }

  void handle(FaultEvent& ev) {
    if (ev.recover) recover(ev.node);
    else crash(ev.node);
  }

  void crash(NodeId id) {
    if (!alive_[id]) return;
    alive_[id] = false;
    ++incarnation_[id];
    trace_.records.push_back({now_, id, 0, TraceKind::crash, node(id).current_term(), 0, 0.0, 0});
  }

  void recover(NodeId id) {
    if (alive_[id]) return;
    alive_[id] = true;
    ++incarnation_[id];
    busy_until_[id] = now_;
    node(id).restart(now_);
    drain(id, now_);
  }

  // -- bookkeeping after a handler ran

  /// Moves a node's outbox into the trace / network / timers.
  void drain(NodeId id, SimTime now) {
    Node& nd = node(id);
    Outbox out = nd.take_outbox();
    const Role role_before = known_role_[id];
    for (auto& r : out.records) absorb(r);
    for (auto& m : out.messages) send(std::move(m));
    if (out.reset_election_timer) arm_election(id, now);
    if (out.close_round_at && nd.round_open())
      push(*out.close_round_at, tiebreak_timer(id), CloseRound{id, nd.round()->wclock});
    if (nd.role() == Role::leader && role_before != Role::leader) {
      push(now + from_ms(sc_.options.heartbeat_ms), tiebreak_timer(id), HeartbeatTimer{id, ++heartbeat_gen_[id]});
    }
    known_role_[id] = nd.role();
    if (out.round_finalized) on_round_finalized(id);
  }

  void arm_election(NodeId id, SimTime now) {
    if (!alive_[id]) return;
    const double timeout =
        streams_[id - 1].election.uniform(sc_.config.election_timeout_min_ms, sc_.config.election_timeout_max_ms);
    node(id).set_election_timeout_ms(timeout);
    push(now + from_ms(timeout), tiebreak_timer(id), ElectionTimer{id, ++election_gen_[id]});
  }

  /// Appends a record to the trace and feeds the open round sample.
  void absorb(const TraceRecord& r) {
    trace_.records.push_back(r);
    if (r.kind != TraceKind::reply_recv && r.kind != TraceKind::round_commit) return;
    const NodeId leader = r.kind == TraceKind::reply_recv ? r.to : r.from;
    auto it = open_samples_.find(leader);
    if (it == open_samples_.end() || it->second.wclock != r.wclock) return;
    if (r.kind == TraceKind::reply_recv) {
      it->second.reply_order.push_back(r.from);
    } else {
      it->second.has_commit = true;
      it->second.committed = r.time;
      it->second.replies_counted = r.to;
    }
  }

  /// Starts the next round (or reconfiguration) on an idle leader.
  void kick(NodeId id, SimTime now) {
    if (!alive_[id]) return;
    Node& nd = node(id);
    if (nd.role() != Role::leader || nd.round_open() || committed_rounds_ >= sc_.rounds) return;

    RoundSample sample;
    sample.leader = id;
    sample.t = nd.threshold();
    sample.started = now;
    sample.delay_regime = active_regime(now);
    sample.crashed = crashed_count();
    const WeightAssignment a = nd.assignment();
    if (nd.algo() == Algo::cabinet) sample.cabinet = a.cabinet(nd.threshold());

    open_samples_.erase(id);
    std::vector<Message> msgs;
    if (next_reconfig_ < sc_.reconfig.size() && committed_rounds_ >= sc_.reconfig[next_reconfig_].after_round &&
        nd.algo() == Algo::cabinet) {
      const int t_new = sc_.reconfig[next_reconfig_].t;
      nd.reconfigure_threshold(t_new, now);
      sample.is_config = true;
      sample.t = t_new;
      sample.cabinet = nd.assignment().cabinet(t_new);
    } else {
      auto batch = std::make_shared<Batch>(generate_batch(sc_.mix, sc_.batch_size, workload_rng_, ++batch_counter_));
      sample.batch_size = batch->size();
      msgs = nd.start_round(std::move(batch), now);
    }
    sample.wclock = nd.round()->wclock;
    sample.index = nd.round()->index;
    open_samples_[id] = sample;

    Outbox out = nd.take_outbox();
    for (auto& r : out.records) absorb(r);
    for (auto& m : out.messages) msgs.push_back(std::move(m));
    for (auto& m : msgs) send(std::move(m));
  }

  void on_round_finalized(NodeId id) {
    Node& nd = node(id);
    auto it = open_samples_.find(id);
    if (it == open_samples_.end()) return;
    RoundSample sample = std::move(it->second);
    open_samples_.erase(it);

    if (!sample.has_commit) return;  // finalized without committing
    if (sample.is_config) {
      ++next_reconfig_;
    } else {
      ++committed_rounds_;
      sample.round = committed_rounds_;
    }
    samples_.push_back(std::move(sample));

    if (!samples_.back().is_config) {
      maybe_rotate(committed_rounds_);
      maybe_crash(nd);
      for (const auto& f : sc_.faults) {
        if (f.after_round != committed_rounds_) continue;
        if (f.recover) recover(f.node);
        else crash(f.node);
      }
    }
  }

  int active_regime(SimTime now) const {
    switch (sc_.delays.kind) {
      case DelayKind::dynamic: return rotation_;
      case DelayKind::burst:
        return regime_for(sc_.delays, 1, sc_.config.n, now, 0).mean_ms > 0.0 ? 1 : 0;
      default: return 0;
    }
  }

  void maybe_rotate(int round) {
    if (sc_.delays.kind != DelayKind::dynamic) return;
    if (round % sc_.delays.rotate_every_rounds != 0) return;
    ++rotation_;
    trace_.records.push_back({now_, 0, 0, TraceKind::regime, 0, 0, 0.0, static_cast<std::uint64_t>(rotation_)});
  }

  void maybe_crash(const Node& leader) {
    const CrashPlan& plan = sc_.crashes;
    if (plan.strategy == KillStrategy::none || kills_done_ >= plan.count) return;
    const int due_round = plan.trigger_round + (plan.stagger > 0 ? kills_done_ * plan.stagger : 0);
    if (committed_rounds_ < due_round) return;

    const int batch = plan.stagger > 0 ? 1 : plan.count - kills_done_;
    const WeightAssignment a = leader.assignment();
    std::vector<NodeId> ranked;
    for (NodeId id : a.by_rank)
      if (alive_[id]) ranked.push_back(id);

    std::vector<NodeId> targets;
    switch (plan.strategy) {
      case KillStrategy::strong_kills:
        targets.assign(ranked.begin(), ranked.begin() + std::min<std::size_t>(batch, ranked.size()));
        break;
      case KillStrategy::weak_kills:
        targets.assign(ranked.rbegin(), ranked.rbegin() + std::min<std::size_t>(batch, ranked.size()));
        break;
      case KillStrategy::random_kills:
        for (int k = 0; k < batch && !ranked.empty(); ++k) {
          const auto pick = static_cast<std::size_t>(crash_rng_() % ranked.size());
          targets.push_back(ranked[pick]);
          ranked.erase(ranked.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        break;
      case KillStrategy::none: break;
    }
    for (NodeId id : targets) crash(id);
    kills_done_ += static_cast<int>(targets.size());
  }

  Scenario sc_;
  Rng rng_;
  Rng workload_rng_{0};
  Rng crash_rng_{0};
  std::vector<Node> nodes_;
  std::vector<Streams> streams_;
  std::vector<bool> alive_;
  std::vector<std::uint32_t> incarnation_;
  std::vector<SimTime> busy_until_;
  std::vector<std::uint64_t> election_gen_;
  std::vector<std::uint64_t> heartbeat_gen_;
  std::vector<SimTime> channel_last_;
  std::map<NodeId, Role> known_role_;
  std::map<NodeId, RoundSample> open_samples_;
  std::vector<Message> dst_outbox_messages_;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  SimTime now_ = 0;
  int rotation_ = 0;
  int committed_rounds_ = 0;
  int kills_done_ = 0;
  std::size_t next_reconfig_ = 0;
  std::uint64_t batch_counter_ = 0;

  ExecutionTrace trace_;
  std::vector<RoundSample> samples_;
};

inline SimResult run(const Scenario& scenario) { return Simulator(scenario).run(); }

inline SimResult run(const ClusterConfig& config, const HeterogeneityProfile& profile, const DelayModel& delays,
                     const CrashPlan& crashes, const OperationMix& workload, std::size_t batch_size,
                     std::uint64_t seed, int rounds) {
  Scenario sc;
  sc.config = config;
  sc.profile = profile;
  sc.delays = delays;
  sc.crashes = crashes;
  sc.mix = workload;
  sc.batch_size = batch_size;
  sc.seed = seed;
  sc.rounds = rounds;
  return run(sc);
}

}  // namespace cabinet
