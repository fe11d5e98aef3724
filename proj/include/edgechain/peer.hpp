#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>

#include "edgechain/contracts.hpp"
#include "edgechain/identity.hpp"
#include "edgechain/ledger.hpp"
#include "edgechain/netsim.hpp"

namespace edgechain::peer {

struct EndorsementPolicy {
    uint32_t required = 1;  // distinct verifying peer endorsements
};

/// Pre-distributed certificate directory: every node holds the same copy,
/// modeling out-of-band CA provisioning.
using CertDirectory = std::map<Pseudonym, Certificate>;

struct PeerConfig {
    int32_t index = 0;
    std::string zone;
    EndorsementPolicy policy;
    net::ComputeModel compute;
};

/// Commit-time validation: per transaction, in order — replay, client
/// signature, endorsement policy, MVCC against committed state plus earlier
/// valid transactions of this block. Deterministic given identical inputs.
std::vector<Validity> validate_block(const Block& block, const WorldState& world,
                                     const std::set<Hash>& committed_proposals,
                                     const EndorsementPolicy& policy,
                                     const CertDirectory& directory, const Bytes& ca_public_key,
                                     TimestampMs now);

/// Edge-server peer: endorser (simulate + sign read/write sets) and
/// committer (validate ordered blocks, commit, notify connected vehicles).
class PeerNode : public net::Node {
public:
    PeerNode(PeerConfig cfg, crypto::KeyPair keys, Bytes ca_public_key,
             std::shared_ptr<const CertDirectory> directory);

    void on_message(const msg::Message& m, net::NodeAddress from, size_t bytes) override;
    void on_timer(int timer_id) override;
    void on_restart() override;

    Pseudonym id() const { return id_; }
    const std::string& zone() const { return cfg_.zone; }
    const Chain& chain() const { return chain_; }
    const WorldState& world() const { return world_; }
    Hash state_hash() const { return world_.state_hash(); }
    std::vector<Pseudonym> connected() const;

    struct Stats {
        uint64_t proposals_endorsed = 0;
        uint64_t proposals_refused = 0;
        uint64_t auth_failures = 0;
        uint64_t blocks_committed = 0;
        uint64_t txs_valid = 0;
        uint64_t txs_invalid = 0;
        uint64_t notifications_sent = 0;
    };
    const Stats& stats() const { return stats_; }

private:
    static constexpr int TIMER_WORK = 1;

    void handle_proposal(const msg::Proposal& p, net::NodeAddress from);
    void handle_block(Block block, net::NodeAddress from);
    void handle_register(const msg::Register& r, net::NodeAddress from);
    void commit(Block block, std::vector<Validity> flags, net::NodeAddress orderer);
    void enqueue_ready_blocks();

    PeerConfig cfg_;
    crypto::KeyPair keys_;
    Bytes ca_pk_;
    std::shared_ptr<const CertDirectory> directory_;
    Pseudonym id_;
    net::WorkQueue work_;

    // Durable across restart.
    Chain chain_;

    // Volatile: rebuilt or cleared in on_restart.
    WorldState world_;
    std::set<Hash> committed_proposals_;  // proposal hashes of valid committed txs
    std::map<Pseudonym, net::NodeAddress> connected_;
    // Blocks that arrived ahead of the chain tip, with their deliverer.
    std::map<uint64_t, std::pair<Block, net::NodeAddress>> future_blocks_;
    Stats stats_;
};

}  // namespace edgechain::peer
