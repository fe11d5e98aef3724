#pragma once

#include <map>
#include <memory>

#include "edgechain/ledger.hpp"
#include "edgechain/netsim.hpp"
#include "edgechain/raft.hpp"

namespace edgechain::ordering {

struct BlockCutPolicy {
    size_t max_message_count = 10;
    size_t max_bytes = 512 * 1024;
    double batch_timeout_ms = 250.0;
};

/// Pure incremental batcher over the committed entry stream: greedy fill up
/// to the count/byte limits, flush on TimeToCut markers. Identical input
/// stream => identical batch boundaries on every orderer.
class BlockCutter {
public:
    explicit BlockCutter(BlockCutPolicy policy) : policy_(policy) {}

    /// Feeds one committed entry; returns the batches completed by it.
    std::vector<std::vector<Transaction>> feed(const msg::LogEntry& e);

    size_t pending_count() const { return batch_.size(); }

private:
    BlockCutPolicy policy_;
    std::vector<Transaction> batch_;
    size_t batch_bytes_ = 0;
};

struct OrdererConfig {
    int32_t index = 0;
    int32_t cluster_size = 3;
    int32_t peer_count = 3;
    raft::RaftConfig raft;  // id / cluster_size overwritten from the above
    BlockCutPolicy cut;
    net::ComputeModel compute;
    size_t delivery_window = 2;
    double delivery_resend_ms = 500.0;
};

/// One orderer: Raft replica + deterministic block derivation from the
/// committed log + windowed block delivery to peers (leader only).
class OrdererNode : public net::Node {
public:
    explicit OrdererNode(OrdererConfig cfg);

    /// Arms timers; call once after add_node, and nowhere else.
    void boot();

    void on_message(const msg::Message& m, net::NodeAddress from, size_t bytes) override;
    void on_timer(int timer_id) override;
    void on_restart() override;

    const raft::RaftCore& core() const { return *core_; }
    bool is_leader() const { return core_->is_leader(); }
    const Chain& derived_chain() const { return derived_; }
    const raft::DurableState& disk() const { return disk_; }

    struct Stats {
        uint64_t submits_accepted = 0;
        uint64_t submits_redirected = 0;
        uint64_t submits_no_leader = 0;
        uint64_t blocks_cut = 0;
    };
    const Stats& stats() const { return stats_; }

private:
    static constexpr int TIMER_ELECTION = 1;
    static constexpr int TIMER_HEARTBEAT = 2;
    static constexpr int TIMER_TTC = 3;
    static constexpr int TIMER_WORK = 4;

    void after_core();
    void arm_election_timer();
    void arm_ttc_timer();
    void derive_blocks();
    void deliver_pending();
    void handle_work(net::WorkQueue::Item item);
    bool log_has_uncut_envelope() const;
    msg::LogEntry ttc_entry() const;

    OrdererConfig cfg_;
    raft::DurableState disk_;  // survives on_restart untouched
    std::unique_ptr<raft::RaftCore> core_;
    net::WorkQueue work_;
    uint64_t election_token_ = 0;
    uint64_t ttc_token_ = 0;  // nonzero while a batch-timeout is pending

    // Volatile, rebuilt after restart.
    std::unique_ptr<BlockCutter> cutter_;
    int64_t fed_ = 0;  // committed entries already fed to the cutter
    Chain derived_;
    std::map<int32_t, uint64_t> peer_acked_;
    std::map<int32_t, uint64_t> peer_sent_;       // next height never yet sent
    std::map<int32_t, TimestampMs> peer_sent_at_;  // for loss-driven resends
    Stats stats_;
};

}  // namespace edgechain::ordering
