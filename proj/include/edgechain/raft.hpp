#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "edgechain/messages.hpp"

namespace edgechain::raft {

struct RaftConfig {
    int32_t id = 0;
    int32_t cluster_size = 3;
    double election_min_ms = 150.0;
    double election_max_ms = 300.0;
    double heartbeat_ms = 50.0;
    size_t max_entries_per_ae = 64;
    // Heartbeats to wait before re-sending an unacknowledged entry batch.
    // Keeps one data batch in flight per follower so a slow or lossy link
    // sees empty heartbeats instead of an ever-growing pile of duplicates.
    int resend_after_ticks = 10;
};

/// The replica's "disk": survives crash/restart, owned outside RaftCore so
/// a restarted core resumes from it.
struct DurableState {
    uint64_t current_term = 0;
    int32_t voted_for = -1;
    std::vector<msg::LogEntry> log;
};

enum class Role : uint8_t { Follower = 0, Candidate = 1, Leader = 2 };

const char* role_name(Role r);

/// Pure message-in/messages-out Raft replica. Owns neither clock nor
/// network; the hosting node feeds inputs and drains outbox / timer flags
/// after every call. Keeping it passive makes single-stepped deterministic
/// tests trivial.
class RaftCore {
public:
    RaftCore(RaftConfig cfg, DurableState* durable);

    struct Out {
        int32_t to;  // orderer index
        msg::Message m;
    };

    void on_election_timeout();
    void on_heartbeat_tick();
    /// Dispatches the four Raft message kinds; other kinds are ignored.
    void on_message(const msg::Message& m, int32_t from);
    /// Leader only: appends and starts replicating; returns the new index
    /// or -1 when not leader.
    int64_t append_entry(msg::LogEntry e);

    std::vector<Out> take_outbox();
    /// True once per event that requires re-arming the election timer.
    bool take_election_reset();
    /// True once after winning an election.
    bool take_became_leader();

    Role role() const { return role_; }
    bool is_leader() const { return role_ == Role::Leader; }
    uint64_t current_term() const { return d_->current_term; }
    int32_t leader_hint() const { return leader_hint_; }
    int64_t commit_index() const { return commit_index_; }
    const std::vector<msg::LogEntry>& log() const { return d_->log; }
    int32_t id() const { return cfg_.id; }
    int64_t last_index() const { return static_cast<int64_t>(d_->log.size()) - 1; }

private:
    void on_request_vote(const msg::RequestVote& rv, int32_t from);
    void on_request_vote_response(const msg::RequestVoteResponse& r, int32_t from);
    void on_append_entries(const msg::AppendEntries& ae, int32_t from);
    void on_append_entries_response(const msg::AppendEntriesResponse& r, int32_t from);

    void maybe_adopt_term(uint64_t term);
    void become_leader();
    bool log_up_to_date(int64_t their_last_index, uint64_t their_last_term) const;
    void send_append(int32_t to);
    void send_heartbeat(int32_t to);
    void advance_commit();
    uint64_t last_term() const { return d_->log.empty() ? 0 : d_->log.back().term; }
    int32_t majority() const { return cfg_.cluster_size / 2 + 1; }
    uint64_t term_at(int64_t index) const {
        return index < 0 ? 0 : d_->log[static_cast<size_t>(index)].term;
    }

    RaftConfig cfg_;
    DurableState* d_;

    // Volatile: rebuilt after restart.
    Role role_ = Role::Follower;
    int64_t commit_index_ = -1;
    int32_t leader_hint_ = -1;
    std::set<int32_t> votes_granted_;
    std::vector<int64_t> next_index_;
    std::vector<int64_t> match_index_;
    std::vector<int64_t> sent_end_;  // one past the last entry sent, per follower
    std::vector<int> sent_age_;      // heartbeats since that batch went out

    std::vector<Out> outbox_;
    bool election_reset_ = false;
    bool became_leader_ = false;
};

}  // namespace edgechain::raft
