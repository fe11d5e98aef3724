#include "edgechain/ordering.hpp"

#include <algorithm>

namespace edgechain::ordering {

std::vector<std::vector<Transaction>> BlockCutter::feed(const msg::LogEntry& e) {
    std::vector<std::vector<Transaction>> done;
    auto flush = [&] {
        if (!batch_.empty()) {
            done.push_back(std::exchange(batch_, {}));
            batch_bytes_ = 0;
        }
    };
    if (e.kind == msg::EntryKind::TimeToCut) {
        flush();
        return done;
    }
    size_t tx_bytes = e.tx.encode().size();
    if (!batch_.empty() && batch_bytes_ + tx_bytes > policy_.max_bytes) flush();
    batch_.push_back(e.tx);
    batch_bytes_ += tx_bytes;
    if (batch_.size() >= policy_.max_message_count) flush();
    return done;
}

OrdererNode::OrdererNode(OrdererConfig cfg)
    : cfg_(cfg), work_(cfg.compute, TIMER_WORK) {
    cfg_.raft.id = cfg_.index;
    cfg_.raft.cluster_size = cfg_.cluster_size;
    core_ = std::make_unique<raft::RaftCore>(cfg_.raft, &disk_);
    cutter_ = std::make_unique<BlockCutter>(cfg_.cut);
}

void OrdererNode::boot() {
    core_->take_election_reset();  // consume the constructor's request
    arm_election_timer();
    sim().set_timer(address(), cfg_.raft.heartbeat_ms, TIMER_HEARTBEAT);
}

void OrdererNode::arm_ttc_timer() {
    // Batch timeout counts from the first envelope of a batch, so block
    // latency tracks arrival time instead of a free-running metronome.
    if (!ttc_token_)
        ttc_token_ = sim().set_timer(address(), cfg_.cut.batch_timeout_ms, TIMER_TTC);
}

void OrdererNode::arm_election_timer() {
    sim().cancel_timer(election_token_);
    double span = cfg_.raft.election_max_ms - cfg_.raft.election_min_ms;
    double delay = cfg_.raft.election_min_ms + span * sim().uniform();
    election_token_ = sim().set_timer(address(), delay, TIMER_ELECTION);
}

msg::LogEntry OrdererNode::ttc_entry() const {
    msg::LogEntry e;
    e.kind = msg::EntryKind::TimeToCut;
    e.received_at = sim().now_ms();
    return e;
}

bool OrdererNode::log_has_uncut_envelope() const {
    const auto& log = disk_.log;
    for (auto it = log.rbegin(); it != log.rend(); ++it) {
        if (it->kind == msg::EntryKind::TimeToCut) return false;
        if (it->kind == msg::EntryKind::Envelope) return true;
    }
    return false;
}

void OrdererNode::on_message(const msg::Message& m, net::NodeAddress from, size_t bytes) {
    if (std::holds_alternative<msg::SubmitEnvelope>(m)) {
        work_.push(*this, 0, m, from, bytes);
        return;
    }
    if (const auto* ae = std::get_if<msg::AppendEntries>(&m); ae && !ae->entries.empty()) {
        work_.push(*this, 0, m, from, bytes);  // data-bearing: charge service
        return;
    }
    if (const auto* ack = std::get_if<msg::BlockAck>(&m)) {
        if (from.kind == net::NodeKind::Peer) {
            uint64_t& acked = peer_acked_[from.index];
            acked = std::max(acked, ack->height);
            deliver_pending();
        }
        return;
    }
    // Control traffic (votes, heartbeats, replication acks): handled inline.
    core_->on_message(m, from.index);
    after_core();
}

void OrdererNode::handle_work(net::WorkQueue::Item item) {
    if (const auto* env = std::get_if<msg::SubmitEnvelope>(&item.work)) {
        msg::SubmitResult res;
        res.proposal_hash = env->tx.proposal_hash();
        if (core_->is_leader()) {
            msg::LogEntry e;
            e.kind = msg::EntryKind::Envelope;
            e.tx = env->tx;
            e.received_at = sim().now_ms();
            core_->append_entry(std::move(e));
            arm_ttc_timer();
            res.status = msg::SubmitStatus::Accepted;
            ++stats_.submits_accepted;
        } else if (core_->leader_hint() >= 0) {
            res.status = msg::SubmitStatus::Redirect;
            res.leader_hint = core_->leader_hint();
            ++stats_.submits_redirected;
        } else {
            res.status = msg::SubmitStatus::NoLeader;
            ++stats_.submits_no_leader;
        }
        sim().send(address(), item.from, res);
        after_core();
        return;
    }
    core_->on_message(item.work, item.from.index);
    after_core();
}

void OrdererNode::on_timer(int timer_id) {
    switch (timer_id) {
        case TIMER_ELECTION:
            core_->on_election_timeout();
            after_core();
            break;
        case TIMER_HEARTBEAT:
            core_->on_heartbeat_tick();
            after_core();
            deliver_pending();
            sim().set_timer(address(), cfg_.raft.heartbeat_ms, TIMER_HEARTBEAT);
            break;
        case TIMER_TTC:
            ttc_token_ = 0;
            if (core_->is_leader() && log_has_uncut_envelope())
                core_->append_entry(ttc_entry());
            after_core();
            break;
        case TIMER_WORK:
            handle_work(work_.complete(*this));
            break;
        default: break;
    }
}

void OrdererNode::after_core() {
    for (int pass = 0; pass < 2; ++pass) {
        if (core_->take_became_leader()) {
            // Fresh reign: a no-op marker commits prior-term entries and
            // flushes any batch stranded by the leader change.
            core_->append_entry(ttc_entry());
            peer_acked_.clear();
            peer_sent_.clear();
            peer_sent_at_.clear();
        }
        auto outs = core_->take_outbox();
        if (core_->take_election_reset()) arm_election_timer();
        for (auto& o : outs)
            sim().send(address(), net::NodeAddress::orderer(o.to), std::move(o.m));
        if (outs.empty()) break;
    }
    derive_blocks();
}

void OrdererNode::derive_blocks() {
    bool grew = false;
    while (fed_ <= core_->commit_index()) {
        const msg::LogEntry& e = disk_.log[static_cast<size_t>(fed_)];
        ++fed_;
        for (auto& batch : cutter_->feed(e)) {
            Block b;
            b.header.number = derived_.size();
            b.header.previous_hash =
                derived_.empty() ? Hash::zero() : hash_header(derived_.back().header);
            b.transactions = std::move(batch);
            b.validity.assign(b.transactions.size(), Validity::Valid);
            b.header.data_hash = b.compute_data_hash();
            derived_.push_back(std::move(b));
            ++stats_.blocks_cut;
            grew = true;
        }
    }
    if (grew) deliver_pending();
}

void OrdererNode::deliver_pending() {
    if (!core_->is_leader()) return;
    for (int32_t p = 0; p < cfg_.peer_count; ++p) {
        uint64_t from = peer_acked_[p];
        uint64_t to = std::min<uint64_t>(derived_.size(), from + cfg_.delivery_window);
        if (from >= to) continue;
        // Send heights not sent before; resend the whole window only after
        // silence long enough to suggest loss, not mere slow processing.
        bool resend = sim().now_ms() - peer_sent_at_[p] >= cfg_.delivery_resend_ms;
        bool sent = false;
        for (uint64_t h = from; h < to; ++h) {
            if (h >= peer_sent_[p] || resend) {
                sim().send(address(), net::NodeAddress::peer(p),
                           msg::BlockDeliver{derived_[h]});
                sent = true;
            }
        }
        if (sent) {
            peer_sent_[p] = std::max(peer_sent_[p], to);
            peer_sent_at_[p] = sim().now_ms();
        }
    }
}

void OrdererNode::on_restart() {
    work_.reset();
    ttc_token_ = 0;  // pending timers died with the node
    core_ = std::make_unique<raft::RaftCore>(cfg_.raft, &disk_);
    cutter_ = std::make_unique<BlockCutter>(cfg_.cut);
    fed_ = 0;
    derived_.clear();
    peer_acked_.clear();
    peer_sent_.clear();
    peer_sent_at_.clear();
    boot();
}

}  // namespace edgechain::ordering
