#include "edgechain/raft.hpp"

#include <algorithm>

namespace edgechain::raft {

const char* role_name(Role r) {
    switch (r) {
        case Role::Follower: return "follower";
        case Role::Candidate: return "candidate";
        case Role::Leader: return "leader";
    }
    return "unknown";
}

RaftCore::RaftCore(RaftConfig cfg, DurableState* durable)
    : cfg_(cfg),
      d_(durable),
      next_index_(static_cast<size_t>(cfg.cluster_size), 0),
      match_index_(static_cast<size_t>(cfg.cluster_size), -1),
      sent_end_(static_cast<size_t>(cfg.cluster_size), 0),
      sent_age_(static_cast<size_t>(cfg.cluster_size), 0) {
    election_reset_ = true;  // the host must arm the first election timer
}

std::vector<RaftCore::Out> RaftCore::take_outbox() { return std::exchange(outbox_, {}); }

bool RaftCore::take_election_reset() { return std::exchange(election_reset_, false); }

bool RaftCore::take_became_leader() { return std::exchange(became_leader_, false); }

void RaftCore::maybe_adopt_term(uint64_t term) {
    if (term > d_->current_term) {
        d_->current_term = term;
        d_->voted_for = -1;
        role_ = Role::Follower;
        votes_granted_.clear();
        election_reset_ = true;
    }
}

void RaftCore::on_election_timeout() {
    if (role_ == Role::Leader) return;
    role_ = Role::Candidate;
    ++d_->current_term;
    d_->voted_for = cfg_.id;
    leader_hint_ = -1;
    votes_granted_ = {cfg_.id};
    election_reset_ = true;
    if (votes_granted_.size() >= static_cast<size_t>(majority())) {
        become_leader();  // single-node cluster
        return;
    }
    msg::RequestVote rv;
    rv.term = d_->current_term;
    rv.candidate = cfg_.id;
    rv.last_log_index = last_index();
    rv.last_log_term = last_term();
    for (int32_t i = 0; i < cfg_.cluster_size; ++i)
        if (i != cfg_.id) outbox_.push_back({i, rv});
}

void RaftCore::on_heartbeat_tick() {
    if (role_ != Role::Leader) return;
    for (int32_t i = 0; i < cfg_.cluster_size; ++i) {
        if (i == cfg_.id) continue;
        size_t f = static_cast<size_t>(i);
        bool lagging = next_index_[f] < static_cast<int64_t>(d_->log.size());
        bool in_flight = sent_end_[f] > next_index_[f];
        if (lagging && (!in_flight || ++sent_age_[f] >= cfg_.resend_after_ticks))
            send_append(i);
        else
            send_heartbeat(i);
    }
}

void RaftCore::on_message(const msg::Message& m, int32_t from) {
    if (const auto* rv = std::get_if<msg::RequestVote>(&m)) on_request_vote(*rv, from);
    else if (const auto* rr = std::get_if<msg::RequestVoteResponse>(&m))
        on_request_vote_response(*rr, from);
    else if (const auto* ae = std::get_if<msg::AppendEntries>(&m)) on_append_entries(*ae, from);
    else if (const auto* ar = std::get_if<msg::AppendEntriesResponse>(&m))
        on_append_entries_response(*ar, from);
}

bool RaftCore::log_up_to_date(int64_t their_last_index, uint64_t their_last_term) const {
    if (their_last_term != last_term()) return their_last_term > last_term();
    return their_last_index >= last_index();
}

void RaftCore::on_request_vote(const msg::RequestVote& rv, int32_t from) {
    maybe_adopt_term(rv.term);
    bool grant = rv.term == d_->current_term &&
                 (d_->voted_for == -1 || d_->voted_for == rv.candidate) &&
                 log_up_to_date(rv.last_log_index, rv.last_log_term);
    if (grant) {
        d_->voted_for = rv.candidate;
        election_reset_ = true;
    }
    outbox_.push_back({from, msg::RequestVoteResponse{d_->current_term, grant}});
}

void RaftCore::on_request_vote_response(const msg::RequestVoteResponse& r, int32_t from) {
    maybe_adopt_term(r.term);
    if (role_ != Role::Candidate || r.term != d_->current_term || !r.granted) return;
    votes_granted_.insert(from);
    if (votes_granted_.size() >= static_cast<size_t>(majority())) become_leader();
}

void RaftCore::become_leader() {
    role_ = Role::Leader;
    leader_hint_ = cfg_.id;
    became_leader_ = true;
    std::fill(next_index_.begin(), next_index_.end(),
              static_cast<int64_t>(d_->log.size()));
    std::fill(match_index_.begin(), match_index_.end(), int64_t{-1});
    std::fill(sent_end_.begin(), sent_end_.end(), static_cast<int64_t>(d_->log.size()));
    std::fill(sent_age_.begin(), sent_age_.end(), 0);
    on_heartbeat_tick();  // assert authority immediately
}

void RaftCore::send_append(int32_t to) {
    size_t f = static_cast<size_t>(to);
    int64_t next = next_index_[f];
    msg::AppendEntries ae;
    ae.term = d_->current_term;
    ae.leader = cfg_.id;
    ae.prev_log_index = next - 1;
    ae.prev_log_term = term_at(next - 1);
    ae.leader_commit = commit_index_;
    size_t end = std::min(d_->log.size(), static_cast<size_t>(next) + cfg_.max_entries_per_ae);
    for (size_t i = static_cast<size_t>(next); i < end; ++i) ae.entries.push_back(d_->log[i]);
    sent_end_[f] = static_cast<int64_t>(end);
    sent_age_[f] = 0;
    outbox_.push_back({to, std::move(ae)});
}

void RaftCore::send_heartbeat(int32_t to) {
    int64_t next = next_index_[static_cast<size_t>(to)];
    msg::AppendEntries ae;
    ae.term = d_->current_term;
    ae.leader = cfg_.id;
    ae.prev_log_index = next - 1;
    ae.prev_log_term = term_at(next - 1);
    ae.leader_commit = commit_index_;
    outbox_.push_back({to, std::move(ae)});
}

void RaftCore::on_append_entries(const msg::AppendEntries& ae, int32_t from) {
    maybe_adopt_term(ae.term);
    if (ae.term < d_->current_term) {
        outbox_.push_back({from, msg::AppendEntriesResponse{d_->current_term, false, -1}});
        return;
    }
    // Same-term AppendEntries: the sender is the one leader of this term.
    role_ = Role::Follower;
    leader_hint_ = ae.leader;
    election_reset_ = true;

    bool have_prev = ae.prev_log_index < 0 ||
                     (ae.prev_log_index < static_cast<int64_t>(d_->log.size()) &&
                      term_at(ae.prev_log_index) == ae.prev_log_term);
    if (!have_prev) {
        outbox_.push_back({from, msg::AppendEntriesResponse{d_->current_term, false, -1}});
        return;
    }
    int64_t idx = ae.prev_log_index;
    for (const msg::LogEntry& e : ae.entries) {
        ++idx;
        if (idx < static_cast<int64_t>(d_->log.size())) {
            if (d_->log[static_cast<size_t>(idx)].term != e.term) {
                d_->log.resize(static_cast<size_t>(idx));  // drop conflicting suffix
                d_->log.push_back(e);
            }
            // Same index+term: already have it (log matching), keep ours.
        } else {
            d_->log.push_back(e);
        }
    }
    int64_t match = ae.prev_log_index + static_cast<int64_t>(ae.entries.size());
    if (ae.leader_commit > commit_index_)
        commit_index_ = std::min(ae.leader_commit, match);
    outbox_.push_back({from, msg::AppendEntriesResponse{d_->current_term, true, match}});
}

void RaftCore::on_append_entries_response(const msg::AppendEntriesResponse& r, int32_t from) {
    maybe_adopt_term(r.term);
    if (role_ != Role::Leader || r.term != d_->current_term) return;
    size_t f = static_cast<size_t>(from);
    if (r.success) {
        match_index_[f] = std::max(match_index_[f], r.match_index);
        next_index_[f] = match_index_[f] + 1;
        if (next_index_[f] >= sent_end_[f]) sent_end_[f] = next_index_[f];  // batch acked
        advance_commit();
        if (sent_end_[f] <= next_index_[f] &&
            next_index_[f] < static_cast<int64_t>(d_->log.size()))
            send_append(from);  // keep streaming the backlog
    } else {
        next_index_[f] = std::max<int64_t>(0, next_index_[f] - 1);
        sent_end_[f] = next_index_[f];  // abandon whatever was in flight
        send_append(from);
    }
}

void RaftCore::advance_commit() {
    for (int64_t n = last_index(); n > commit_index_; --n) {
        if (term_at(n) != d_->current_term) break;  // only own-term entries by counting
        int32_t replicas = 1;  // self
        for (int32_t i = 0; i < cfg_.cluster_size; ++i)
            if (i != cfg_.id && match_index_[static_cast<size_t>(i)] >= n) ++replicas;
        if (replicas >= majority()) {
            commit_index_ = n;
            break;
        }
    }
}

int64_t RaftCore::append_entry(msg::LogEntry e) {
    if (role_ != Role::Leader) return -1;
    e.term = d_->current_term;
    d_->log.push_back(std::move(e));
    advance_commit();  // single-node cluster commits immediately
    for (int32_t i = 0; i < cfg_.cluster_size; ++i) {
        size_t f = static_cast<size_t>(i);
        if (i != cfg_.id && next_index_[f] == static_cast<int64_t>(d_->log.size()) - 1 &&
            sent_end_[f] <= next_index_[f])
            send_append(i);
    }
    return last_index();
}

}  // namespace edgechain::raft
