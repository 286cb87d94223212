#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cabinet/error.hpp"
#include "cabinet/trace.hpp"
#include "cabinet/weight_scheme.hpp"
#include "cabinet/workload.hpp"

namespace cabinet {

enum class Role { follower, candidate, leader };
enum class Algo { cabinet, majority_baseline };

constexpr std::string_view to_string(Role r) {
  switch (r) {
    case Role::follower: return "follower";
    case Role::candidate: return "candidate";
    case Role::leader: return "leader";
  }
  return "?";
}

constexpr std::string_view to_string(Algo a) { return a == Algo::cabinet ? "cabinet" : "baseline"; }

struct ClusterConfig {
  int n = 0;
  int t = 0;
  WeightScheme scheme;  // unused by the baseline
  double election_timeout_min_ms = 150.0;
  double election_timeout_max_ms = 300.0;
  int epoch = 0;
  Algo algo = Algo::cabinet;

  /// Votes a candidate needs: n - t for cabinet, a majority for the baseline.
  int election_quorum() const { return algo == Algo::cabinet ? n - t : n / 2 + 1; }

  static ClusterConfig make(int n, int t, Algo algo) {
    ClusterConfig c;
    c.n = n;
    c.t = t;
    c.algo = algo;
    if (algo == Algo::cabinet) {
      c.scheme = generate_scheme(n, t);
    } else {
      if (n < 1) throw Error(ErrorCode::config_error, "n must be >= 1");
    }
    return c;
  }
};

/// Configuration entry replicated through the log when t changes.
struct ConfigChange {
  int epoch = 0;
  int t = 0;
  WeightScheme scheme;
};

struct LogEntry {
  std::uint64_t index = 0;
  std::uint64_t term = 0;
  std::uint64_t wclock = 0;
  BatchPtr batch;                              // null for configuration entries
  std::shared_ptr<const ConfigChange> config;  // set for configuration entries
  double committed_weight = 0.0;               // this node's weight when it acknowledged the entry
};

struct AppendEntriesMsg {
  std::uint64_t term = 0;
  NodeId leader_id = 0;
  std::uint64_t prev_index = 0;
  std::uint64_t prev_term = 0;
  std::vector<LogEntry> entries;
  std::uint64_t leader_commit = 0;
  std::uint64_t wclock = 0;
  double weight = 0.0;
  bool heartbeat = false;
};

struct AppendReply {
  std::uint64_t term = 0;
  NodeId from_id = 0;
  bool success = false;
  std::uint64_t acked_index = 0;
  std::uint64_t echoed_wclock = 0;
  double echoed_weight = 0.0;
  bool heartbeat = false;
  std::uint64_t last_index = 0;  // follower's last log index, used to back off on mismatch
};

struct RequestVoteMsg {
  std::uint64_t term = 0;
  NodeId candidate_id = 0;
  std::uint64_t last_log_index = 0;
  std::uint64_t last_log_term = 0;
};

struct VoteReply {
  std::uint64_t term = 0;
  NodeId from_id = 0;
  bool granted = false;
};

using MessageBody = std::variant<AppendEntriesMsg, AppendReply, RequestVoteMsg, VoteReply>;

struct Message {
  NodeId from = 0;
  NodeId to = 0;
  MessageBody body;

  /// Requests (append, vote request) versus responses.
  bool is_request() const {
    return std::holds_alternative<AppendEntriesMsg>(body) || std::holds_alternative<RequestVoteMsg>(body);
  }
  bool carries_entries() const {
    const auto* ae = std::get_if<AppendEntriesMsg>(&body);
    return ae != nullptr && !ae->entries.empty();
  }
};

enum class RoundStatus {
  pending,    // counted, threshold not reached yet
  committed,  // this reply pushed the accumulator over the threshold
  late,       // round already committed; reply only affects next-round order
  stale,      // reply for an older wclock (or no round open)
  duplicate,  // node already replied in this round
  ignored,    // failure reply, heartbeat, or not leader
};

/// Node ids in rank order for one wclock; by_rank[k] holds weights[k].
struct WeightAssignment {
  std::uint64_t wclock = 0;
  std::vector<NodeId> by_rank;
  std::vector<double> weights;

  double weight_of(NodeId id) const {
    for (std::size_t k = 0; k < by_rank.size(); ++k)
      if (by_rank[k] == id) return weights[k];
    return 0.0;
  }

  /// Leader plus the t next-highest holders.
  std::vector<NodeId> cabinet(int t) const {
    return {by_rank.begin(), by_rank.begin() + std::min<std::size_t>(t + 1, by_rank.size())};
  }
};

struct WeightState {
  std::uint64_t wc = 0;
  double w = 0.0;
};

/// Leader bookkeeping for the single in-flight weighted-consensus instance.
struct Round {
  std::uint64_t wclock = 0;
  std::uint64_t index = 0;
  SimTime started = 0;
  bool is_config = false;
  bool joint = false;  // a configuration entry is uncommitted: clear both old and new ct
  bool committed = false;
  SimTime committed_at = 0;
  double accumulated = 0.0;
  double accumulated_old = 0.0;  // same replies weighed under the outgoing scheme
  int replies_counted = 0;
  std::vector<std::pair<double, NodeId>> queue;  // wQ, arrival order
  std::vector<NodeId> updated;                   // UpdateWgt order, leader excluded
  std::vector<bool> replied;                     // indexed by node id
};

struct NodeOptions {
  /// A round stays open for late replies for grace_factor x its commit
  /// latency after committing. Zero finalizes at the commit instant.
  double grace_factor = 0.0;
};

/// Work a handler produced that the owner (the simulator) must act on.
struct Outbox {
  std::vector<Message> messages;
  std::vector<TraceRecord> records;
  bool reset_election_timer = false;
  std::optional<SimTime> close_round_at;
  bool round_finalized = false;

  void clear() { *this = Outbox{}; }
};

/// Replica state machine for both Cabinet and the majority baseline.
///
/// Handlers are synchronous: they mutate this node's state and leave any
/// messages, timer requests and trace records in the outbox. Nothing here
/// reads a clock or a random source; time is passed in by the caller.
class Node {
 public:
  Node(NodeId id, ClusterConfig config, NodeOptions options = {})
      : id_(id), base_(std::move(config)), options_(options) {
    if (base_.n < 1 || id_ < 1 || id_ > base_.n) throw Error(ErrorCode::config_error, "node id out of range");
    rank_.resize(base_.n);
    std::iota(rank_.begin(), rank_.end(), 1);
    next_index_.assign(base_.n + 1, 1);
    match_index_.assign(base_.n + 1, 0);
  }

  // ---- queries -----------------------------------------------------------

  NodeId id() const { return id_; }
  Role role() const { return role_; }
  std::uint64_t current_term() const { return term_; }
  NodeId voted_for() const { return voted_for_; }
  NodeId leader_hint() const { return leader_hint_; }
  const std::vector<LogEntry>& log() const { return log_; }
  std::uint64_t commit_index() const { return commit_index_; }
  const WeightState& weight_state() const { return weight_state_; }
  std::uint64_t last_log_index() const { return log_.size(); }
  std::uint64_t last_log_term() const { return log_.empty() ? 0 : log_.back().term; }
  Algo algo() const { return base_.algo; }
  int n() const { return base_.n; }
  bool round_open() const { return round_.has_value(); }
  const std::optional<Round>& round() const { return round_; }
  std::uint64_t match_index(NodeId f) const { return match_index_.at(f); }
  std::uint64_t next_index(NodeId f) const { return next_index_.at(f); }
  std::uint64_t last_wclock() const { return last_wclock_; }
  double election_timeout_ms() const { return election_timeout_ms_; }
  void set_election_timeout_ms(double ms) { election_timeout_ms_ = ms; }

  /// Configuration in force: the latest one in the log, else the initial one.
  ClusterConfig config() const {
    ClusterConfig c = base_;
    if (const auto* cc = latest_config_change()) {
      c.t = cc->t;
      c.scheme = cc->scheme;
      c.epoch = cc->epoch;
    }
    return c;
  }
  int config_epoch() const { return config().epoch; }
  int threshold() const { return config().t; }

  /// Weight of rank k under the active scheme (all ones for the baseline).
  double rank_weight(std::size_t k) const {
    if (base_.algo == Algo::majority_baseline) return 1.0;
    return active_scheme().weights.at(k);
  }

  /// Assignment the leader will use for the next round it starts.
  WeightAssignment assignment() const {
    WeightAssignment a;
    a.wclock = last_wclock_ + 1;
    a.by_rank = rank_;
    for (std::size_t k = 0; k < rank_.size(); ++k) a.weights.push_back(rank_weight(k));
    return a;
  }

  double weight_of(NodeId node) const {
    return rank_weight(rank_position(node));
  }

  int election_quorum() const {
    if (base_.algo == Algo::majority_baseline) return base_.n / 2 + 1;
    // While the newest configuration entry is not known to be committed, use
    // the larger of the old and new quorums.
    int t = threshold();
    if (config_change_pending()) {
      const int prev_t =
          config_indices_.size() >= 2 ? log_[config_indices_[config_indices_.size() - 2] - 1].config->t : base_.t;
      t = std::min(t, prev_t);
    }
    return base_.n - t;
  }

  Outbox take_outbox() {
    Outbox out = std::move(outbox_);
    outbox_.clear();
    return out;
  }
  const Outbox& outbox() const { return outbox_; }

  // ---- leader: replication ----------------------------------------------

  /// Opens the next weighted-consensus round for `batch` and returns one
  /// append per follower, each carrying that follower's weight for the round.
  std::vector<Message> start_round(BatchPtr batch, SimTime now) {
    ensure_can_start();
    LogEntry entry;
    entry.batch = std::move(batch);
    return open_round(std::move(entry), now, /*is_config=*/false);
  }

  /// Replaces the active scheme with generate_scheme(n, t_new) by
  /// replicating a configuration entry; its appends land in the outbox.
  /// Client rounds cannot start until it commits, and commitment needs the
  /// accumulated weight to clear both the new and the outgoing thresholds.
  ClusterConfig reconfigure_threshold(int t_new, SimTime now) {
    if (role_ != Role::leader) throw Error(ErrorCode::not_leader, "node " + std::to_string(id_));
    if (base_.algo != Algo::cabinet) throw Error(ErrorCode::config_error, "baseline has no failure threshold");
    if (!threshold_in_range(base_.n, t_new))
      throw Error(ErrorCode::bad_threshold_range, "t_new=" + std::to_string(t_new));
    ensure_can_start();

    auto change = std::make_shared<ConfigChange>();
    change->epoch = config_epoch() + 1;
    change->t = t_new;
    change->scheme = generate_scheme(base_.n, t_new);

    LogEntry entry;
    entry.config = change;
    for (auto& m : open_round(std::move(entry), now, /*is_config=*/true)) outbox_.messages.push_back(std::move(m));

    ClusterConfig c = base_;
    c.t = t_new;
    c.scheme = change->scheme;
    c.epoch = change->epoch;
    return c;
  }

  /// Counts one reply toward the open round. Faster repliers are queued
  /// first and receive the higher weights next round.
  RoundStatus on_append_reply(const AppendReply& reply, SimTime now) {
    if (reply.term > term_) {
      step_down(reply.term, now);
      return RoundStatus::ignored;
    }
    if (role_ != Role::leader || reply.term < term_) return RoundStatus::ignored;
    const NodeId f = reply.from_id;
    if (f < 1 || f > base_.n || f == id_) return RoundStatus::ignored;

    if (!reply.success) {
      next_index_[f] = std::max<std::uint64_t>(1, std::min(next_index_[f] - 1, reply.last_index + 1));
      if (round_) outbox_.messages.push_back(make_append(f, round_->wclock, weight_of(f), false));
      return RoundStatus::ignored;
    }

    match_index_[f] = std::max(match_index_[f], reply.acked_index);
    next_index_[f] = std::max(next_index_[f], reply.acked_index + 1);
    if (reply.heartbeat) return RoundStatus::ignored;
    if (!round_ || reply.echoed_wclock != round_->wclock || reply.acked_index < round_->index)
      return RoundStatus::stale;
    Round& round = *round_;
    if (round.replied[f]) return RoundStatus::duplicate;

    round.replied[f] = true;
    round.queue.emplace_back(reply.echoed_weight, f);
    round.updated.push_back(f);
    record(now, TraceKind::reply_recv, f, id_, term_, round.wclock, reply.echoed_weight, reply.acked_index);

    if (round.committed) {
      if (round.updated.size() + 1 == static_cast<std::size_t>(base_.n)) finalize_round(now);  // nobody left to wait for
      return RoundStatus::late;
    }

    round.accumulated += base_.algo == Algo::cabinet ? reply.echoed_weight : 1.0;
    if (round.joint) round.accumulated_old += previous_scheme().weights.at(rank_position(f));
    ++round.replies_counted;
    if (!threshold_reached(round)) return RoundStatus::pending;

    round.committed = true;
    round.committed_at = now;
    record(now, TraceKind::round_commit, id_, round.replies_counted, term_, round.wclock, round.accumulated,
           round.index);
    advance_commit(round.index, now);
    const SimTime grace = static_cast<SimTime>(options_.grace_factor * static_cast<double>(now - round.started));
    if (grace <= 0 || round.updated.size() + 1 == static_cast<std::size_t>(base_.n)) finalize_round(now);
    else outbox_.close_round_at = now + grace;
    return RoundStatus::committed;
  }

  /// Closes the round and fixes the assignment for wclock + 1: leader first,
  /// then repliers in arrival order, then non-repliers by their previous
  /// weight (descending) with node id as tie-break. An uncommitted round
  /// leaves the assignment untouched.
  WeightAssignment finalize_round(SimTime now) {
    if (!round_) throw Error(ErrorCode::round_not_open, "node " + std::to_string(id_));
    const Round round = std::move(*round_);
    round_.reset();
    outbox_.round_finalized = true;

    if (round.committed && base_.algo == Algo::cabinet) {
      std::vector<NodeId> remaining;
      for (NodeId node : rank_)
        if (node != id_ && !round.replied[node]) remaining.push_back(node);
      std::vector<NodeId> next;
      next.reserve(rank_.size());
      next.push_back(id_);
      next.insert(next.end(), round.updated.begin(), round.updated.end());
      // rank_ is already ordered by previous weight, so `remaining` keeps
      // that order; ranks are unique so the id tie-break never fires.
      next.insert(next.end(), remaining.begin(), remaining.end());
      rank_ = std::move(next);
      record_assignment(now);
    }
    return assignment();
  }

  /// Heartbeat appends for every follower: no entries, prev at the
  /// follower's known match point so they never trigger repair.
  std::vector<Message> heartbeat(SimTime now) {
    (void)now;
    std::vector<Message> out;
    if (role_ != Role::leader) return out;
    const std::uint64_t wclock = round_ ? round_->wclock : last_wclock_;
    for (NodeId f = 1; f <= base_.n; ++f) {
      if (f == id_) continue;
      AppendEntriesMsg msg;
      msg.term = term_;
      msg.leader_id = id_;
      msg.prev_index = match_index_[f];
      msg.prev_term = term_at(match_index_[f]);
      msg.leader_commit = commit_index_;
      msg.wclock = wclock;
      msg.weight = weight_of(f);
      msg.heartbeat = true;
      out.push_back({id_, f, std::move(msg)});
    }
    return out;
  }

  // ---- follower ----------------------------------------------------------

  AppendReply handle_append_entries(const AppendEntriesMsg& msg, SimTime now) {
    AppendReply reply;
    reply.from_id = id_;
    reply.echoed_wclock = msg.wclock;
    reply.echoed_weight = msg.weight;
    reply.heartbeat = msg.heartbeat;

    if (msg.term < term_) {
      reply.term = term_;
      reply.last_index = last_log_index();
      return reply;
    }
    if (msg.term > term_ || role_ != Role::follower) step_down(msg.term, now);
    leader_hint_ = msg.leader_id;
    outbox_.reset_election_timer = true;
    reply.term = term_;

    if (msg.prev_index > last_log_index() || term_at(msg.prev_index) != msg.prev_term) {
      reply.last_index = std::min(last_log_index(), msg.prev_index == 0 ? 0 : msg.prev_index - 1);
      return reply;
    }

    bool config_touched = false;
    for (const LogEntry& incoming : msg.entries) {
      if (incoming.index <= last_log_index()) {
        if (log_[incoming.index - 1].term == incoming.term) {
          log_[incoming.index - 1].committed_weight = msg.weight;
          continue;
        }
        truncate_from(incoming.index);
        config_touched = true;
      }
      LogEntry stored = incoming;
      stored.committed_weight = msg.weight;
      log_.push_back(std::move(stored));
      if (log_.back().config) {
        config_indices_.push_back(log_.back().index);
        config_touched = true;
      }
    }
    if (config_touched) record_config(now);

    if (!msg.heartbeat &&
        (msg.wclock > weight_state_.wc || (msg.wclock == weight_state_.wc && msg.weight != weight_state_.w))) {
      weight_state_ = {msg.wclock, msg.weight};
      record(now, TraceKind::weight, msg.leader_id, id_, term_, msg.wclock, msg.weight, 0);
    }

    const std::uint64_t last_new = msg.prev_index + msg.entries.size();
    if (msg.leader_commit > commit_index_) advance_commit(std::min(msg.leader_commit, last_new), now);

    reply.success = true;
    reply.acked_index = last_new;
    reply.last_index = last_log_index();
    return reply;
  }

  // ---- elections ---------------------------------------------------------

  std::vector<Message> start_election(SimTime now) {
    if (role_ == Role::leader) return {};
    role_ = Role::candidate;
    ++term_;
    voted_for_ = id_;
    votes_ = {id_};
    leader_hint_ = 0;
    outbox_.reset_election_timer = true;
    record(now, TraceKind::become_candidate, id_, 0, term_, 0, 0.0, last_log_index());

    std::vector<Message> out;
    if (static_cast<int>(votes_.size()) >= election_quorum()) {
      become_leader(now);
      return out;
    }
    for (NodeId peer = 1; peer <= base_.n; ++peer) {
      if (peer == id_) continue;
      out.push_back({id_, peer, RequestVoteMsg{term_, id_, last_log_index(), last_log_term()}});
    }
    return out;
  }

  VoteReply handle_vote_request(const RequestVoteMsg& req, SimTime now) {
    if (req.term > term_) step_down(req.term, now);
    const bool up_to_date = req.last_log_term > last_log_term() ||
                            (req.last_log_term == last_log_term() && req.last_log_index >= last_log_index());
    const bool grant =
        req.term == term_ && (voted_for_ == 0 || voted_for_ == req.candidate_id) && up_to_date;
    if (grant) {
      voted_for_ = req.candidate_id;
      outbox_.reset_election_timer = true;
      record(now, TraceKind::vote_granted, id_, req.candidate_id, term_, 0, 0.0, 0);
    }
    return {term_, id_, grant};
  }

  void on_vote_reply(const VoteReply& reply, SimTime now) {
    if (reply.term > term_) {
      step_down(reply.term, now);
      return;
    }
    if (role_ != Role::candidate || reply.term != term_ || !reply.granted) return;
    votes_.insert(reply.from_id);
    if (static_cast<int>(votes_.size()) >= election_quorum()) become_leader(now);
  }

  /// Installs leadership: the leader takes w_1, the rest get the remaining
  /// weights in ascending node-id order, and the weight clock resumes above
  /// everything this node has seen.
  WeightAssignment become_leader(SimTime now) {
    role_ = Role::leader;
    leader_hint_ = id_;
    votes_.clear();
    round_.reset();
    for (NodeId f = 1; f <= base_.n; ++f) {
      next_index_[f] = last_log_index() + 1;
      match_index_[f] = 0;
    }
    match_index_[id_] = last_log_index();

    std::uint64_t max_wclock = weight_state_.wc;
    for (const auto& e : log_) max_wclock = std::max(max_wclock, e.wclock);
    last_wclock_ = max_wclock;

    rank_.clear();
    rank_.push_back(id_);
    for (NodeId f = 1; f <= base_.n; ++f)
      if (f != id_) rank_.push_back(f);
    weight_state_ = {last_wclock_, rank_weight(0)};

    record(now, TraceKind::become_leader, id_, 0, term_, last_wclock_, 0.0, last_log_index());
    for (const auto& e : log_) record(now, TraceKind::leader_log, id_, 0, e.term, e.wclock, 0.0, e.index);
    if (base_.algo == Algo::cabinet) record_assignment(now);
    return assignment();
  }

  /// Starts this node as the agreed leader of `term` without an election.
  WeightAssignment bootstrap_leader(std::uint64_t term, SimTime now) {
    term_ = term;
    voted_for_ = id_;
    return become_leader(now);
  }

  /// Follower side of bootstrap_leader.
  void bootstrap_follower(std::uint64_t term, NodeId leader) {
    term_ = term;
    voted_for_ = leader;
    leader_hint_ = leader;
    outbox_.reset_election_timer = true;
  }

  // ---- crash / restart ---------------------------------------------------

  /// Restart after a crash: persistent state (term, vote, log) survives,
  /// everything else resets to a follower.
  void restart(SimTime now) {
    role_ = Role::follower;
    round_.reset();
    votes_.clear();
    leader_hint_ = 0;
    outbox_.clear();
    outbox_.reset_election_timer = true;
    record(now, TraceKind::recover, id_, 0, term_, 0, 0.0, last_log_index());
  }

 private:
  const WeightScheme& active_scheme() const {
    if (const auto* cc = latest_config_change()) return cc->scheme;
    return base_.scheme;
  }

  /// Scheme in force before the newest configuration entry.
  const WeightScheme& previous_scheme() const {
    if (config_indices_.size() >= 2) return log_[config_indices_[config_indices_.size() - 2] - 1].config->scheme;
    return base_.scheme;
  }

  bool config_change_pending() const { return !config_indices_.empty() && config_indices_.back() > commit_index_; }

  std::size_t rank_position(NodeId node) const {
    return static_cast<std::size_t>(std::find(rank_.begin(), rank_.end(), node) - rank_.begin());
  }

  const ConfigChange* latest_config_change() const {
    return config_indices_.empty() ? nullptr : log_[config_indices_.back() - 1].config.get();
  }

  std::uint64_t term_at(std::uint64_t index) const {
    if (index == 0 || index > log_.size()) return 0;
    return log_[index - 1].term;
  }

  void ensure_can_start() const {
    if (role_ != Role::leader) throw Error(ErrorCode::not_leader, "node " + std::to_string(id_));
    if (round_) throw Error(ErrorCode::round_in_flight, "wclock " + std::to_string(round_->wclock));
  }

  std::vector<Message> open_round(LogEntry entry, SimTime now, bool is_config) {
    const std::uint64_t wclock = ++last_wclock_;
    entry.index = last_log_index() + 1;
    entry.term = term_;
    entry.wclock = wclock;
    entry.committed_weight = rank_weight(0);
    const bool has_config = entry.config != nullptr;
    log_.push_back(std::move(entry));
    match_index_[id_] = last_log_index();
    if (has_config) {
      config_indices_.push_back(last_log_index());
      record_config(now);
    }
    weight_state_ = {wclock, rank_weight(0)};

    Round round;
    round.wclock = wclock;
    round.index = last_log_index();
    round.started = now;
    round.is_config = is_config;
    round.accumulated = rank_weight(0);
    round.joint = base_.algo == Algo::cabinet && config_change_pending();
    round.accumulated_old = round.joint ? previous_scheme().weights.at(0) : 0.0;
    round.replied.assign(base_.n + 1, false);
    round_ = std::move(round);
    record(now, TraceKind::round_start, id_, 0, term_, wclock, rank_weight(0), last_log_index());

    std::vector<Message> out;
    for (NodeId f = 1; f <= base_.n; ++f) {
      if (f == id_) continue;
      const double w = weight_of(f);
      record(now, TraceKind::ae_send, id_, f, term_, wclock, w, last_log_index());
      out.push_back(make_append(f, wclock, w, false));
    }
    return out;
  }

  /// Append carrying everything from next_index; next_index then moves
  /// past it optimistically and backs off again on a failure reply.
  Message make_append(NodeId f, std::uint64_t wclock, double weight, bool heartbeat) {
    AppendEntriesMsg msg;
    msg.term = term_;
    msg.leader_id = id_;
    msg.prev_index = next_index_[f] - 1;
    msg.prev_term = term_at(msg.prev_index);
    msg.entries.assign(log_.begin() + static_cast<std::ptrdiff_t>(msg.prev_index), log_.end());
    msg.leader_commit = commit_index_;
    msg.wclock = wclock;
    msg.weight = weight;
    msg.heartbeat = heartbeat;
    next_index_[f] = last_log_index() + 1;
    return {id_, f, std::move(msg)};
  }

  bool threshold_reached(const Round& round) const {
    if (base_.algo == Algo::majority_baseline) return round.accumulated > static_cast<double>(base_.n) / 2.0;
    if (round.joint) return round.accumulated > active_scheme().ct && round.accumulated_old > previous_scheme().ct;
    return round.accumulated > active_scheme().ct;
  }

  void advance_commit(std::uint64_t target, SimTime now) {
    target = std::min<std::uint64_t>(target, last_log_index());
    while (commit_index_ < target) {
      ++commit_index_;
      const LogEntry& e = log_[commit_index_ - 1];
      record(now, TraceKind::commit, id_, id_, e.term, e.wclock, e.committed_weight, e.index);
    }
  }

  void truncate_from(std::uint64_t index) {
    log_.resize(index - 1);
    while (!config_indices_.empty() && config_indices_.back() >= index) config_indices_.pop_back();
  }

  void step_down(std::uint64_t term, SimTime now) {
    const bool was_follower = role_ == Role::follower;
    if (term > term_) {
      term_ = term;
      voted_for_ = 0;
    }
    role_ = Role::follower;
    round_.reset();
    votes_.clear();
    outbox_.reset_election_timer = true;
    if (!was_follower) record(now, TraceKind::become_follower, id_, 0, term_, 0, 0.0, last_log_index());
  }

  void record_assignment(SimTime now) {
    for (std::size_t k = 0; k < rank_.size(); ++k)
      record(now, TraceKind::assign, id_, rank_[k], term_, last_wclock_ + 1, rank_weight(k), k);
  }

  void record_config(SimTime now) {
    const ClusterConfig c = config();
    record(now, TraceKind::config, id_, 0, term_, static_cast<std::uint64_t>(c.epoch), c.t,
           config_indices_.empty() ? 0 : config_indices_.back());
  }

  void record(SimTime now, TraceKind kind, NodeId from, NodeId to, std::uint64_t term, std::uint64_t wclock,
              double weight, std::uint64_t index) {
    outbox_.records.push_back({now, from, to, kind, term, wclock, weight, index});
  }

  NodeId id_;
  ClusterConfig base_;
  NodeOptions options_;

  Role role_ = Role::follower;
  std::uint64_t term_ = 0;
  NodeId voted_for_ = 0;
  NodeId leader_hint_ = 0;
  std::vector<LogEntry> log_;
  std::vector<std::uint64_t> config_indices_;
  std::uint64_t commit_index_ = 0;
  WeightState weight_state_;
  double election_timeout_ms_ = 0.0;

  // candidate
  std::set<NodeId> votes_;

  // leader
  std::vector<std::uint64_t> next_index_;
  std::vector<std::uint64_t> match_index_;
  std::vector<NodeId> rank_;
  std::uint64_t last_wclock_ = 0;
  std::optional<Round> round_;

  Outbox outbox_;
};

/// Outcome of a client-side weighted read.
template <typename Value>
struct ReadResult {
  bool confirmed = false;
  Value value{};
  double accumulated = 0.0;
};

/// Accumulates the stored weights of replies per distinct value and returns
/// the value whose total exceeds ct. Two values both exceeding ct would mean
/// two disjoint weight quorums, which valid schemes rule out.
template <typename Value>
ReadResult<Value> weighted_read(const std::vector<std::pair<Value, double>>& replies, double ct) {
  std::vector<std::pair<Value, double>> totals;
  for (const auto& [value, weight] : replies) {
    auto it = std::find_if(totals.begin(), totals.end(), [&](const auto& p) { return p.first == value; });
    if (it == totals.end()) totals.emplace_back(value, weight);
    else it->second += weight;
  }
  ReadResult<Value> result;
  for (const auto& [value, total] : totals) {
    if (total <= ct) continue;
    if (result.confirmed) throw Error(ErrorCode::conflicting_confirmations, "two values exceed ct");
    result = {true, value, total};
  }
  return result;
}

}  // namespace cabinet
