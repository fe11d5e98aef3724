#include "edgechain/peer.hpp"

#include <algorithm>

namespace edgechain::peer {

namespace {

/// Resolves a subject to a verified certificate of the wanted role, or
/// nullptr. All validity judgments about identities funnel through here.
const Certificate* verified_cert(const CertDirectory& directory, const Pseudonym& subject,
                                 Role role, const Bytes& ca_pk, TimestampMs now) {
    auto it = directory.find(subject);
    if (it == directory.end()) return nullptr;
    if (it->second.role != role) return nullptr;
    if (!verify_certificate(it->second, ca_pk, now)) return nullptr;
    return &it->second;
}

std::optional<Version> overlay_version(const std::string& key, const WorldState& world,
                                       const std::map<std::string, Version>& block_writes) {
    auto hit = block_writes.find(key);
    if (hit != block_writes.end()) return hit->second;
    auto entry = world.get(key);
    if (!entry) return std::nullopt;
    return entry->version;
}

}  // namespace

std::vector<Validity> validate_block(const Block& block, const WorldState& world,
                                     const std::set<Hash>& committed_proposals,
                                     const EndorsementPolicy& policy,
                                     const CertDirectory& directory, const Bytes& ca_public_key,
                                     TimestampMs now) {
    std::vector<Validity> flags;
    flags.reserve(block.transactions.size());
    std::set<Hash> block_proposals;              // valid proposals earlier in this block
    std::map<std::string, Version> block_writes;  // keys written by earlier valid txs

    for (uint32_t i = 0; i < block.transactions.size(); ++i) {
        const Transaction& tx = block.transactions[i];
        Hash phash = tx.proposal_hash();

        // (a) replay: only valid commits occupy a proposal hash.
        if (committed_proposals.count(phash) || block_proposals.count(phash)) {
            flags.push_back(Validity::ConflictInvalid);
            continue;
        }

        // (b) client signature under a registered vehicle certificate.
        const Certificate* client =
            verified_cert(directory, tx.creator, Role::Vehicle, ca_public_key, now);
        if (!client || !crypto::verify(client->subject_public_key,
                                       ByteView(phash.bytes.data(), phash.bytes.size()),
                                       tx.client_signature)) {
            flags.push_back(Validity::SignatureInvalid);
            continue;
        }

        // (c) endorsement policy: distinct peers endorsing exactly this
        // proposal and read/write set.
        Hash rw_hash = tx.rw_set.hash();
        std::set<Pseudonym> endorsers;
        for (const Endorsement& e : tx.endorsements) {
            if (e.proposal_hash != phash || e.rw_set_hash != rw_hash) continue;
            const Certificate* pc =
                verified_cert(directory, e.peer, Role::Peer, ca_public_key, now);
            if (!pc) continue;
            Bytes payload = e.signing_payload();
            if (!crypto::verify(pc->subject_public_key,
                                ByteView(payload.data(), payload.size()), e.signature))
                continue;
            endorsers.insert(e.peer);
        }
        if (endorsers.size() < policy.required) {
            flags.push_back(Validity::EndorsementInvalid);
            continue;
        }

        // (d) MVCC: every read must still see the version it saw at
        // simulation time, counting earlier valid txs of this block.
        bool stale = false;
        for (const ReadItem& r : tx.rw_set.reads) {
            if (overlay_version(r.key, world, block_writes) != r.version) {
                stale = true;
                break;
            }
        }
        if (stale) {
            flags.push_back(Validity::ConflictInvalid);
            continue;
        }

        flags.push_back(Validity::Valid);
        block_proposals.insert(phash);
        for (const WriteItem& w : tx.rw_set.writes)
            block_writes[w.key] = Version{block.header.number, i};
    }
    return flags;
}

PeerNode::PeerNode(PeerConfig cfg, crypto::KeyPair keys, Bytes ca_public_key,
                   std::shared_ptr<const CertDirectory> directory)
    : cfg_(cfg),
      keys_(std::move(keys)),
      ca_pk_(std::move(ca_public_key)),
      directory_(std::move(directory)),
      id_(Pseudonym::of(keys_.public_key)),
      work_(cfg.compute, TIMER_WORK) {}

std::vector<Pseudonym> PeerNode::connected() const {
    std::vector<Pseudonym> out;
    out.reserve(connected_.size());
    for (const auto& [p, addr] : connected_) out.push_back(p);
    return out;
}

void PeerNode::on_message(const msg::Message& m, net::NodeAddress from, size_t bytes) {
    if (const auto* p = std::get_if<msg::Proposal>(&m)) {
        contracts::ContractCall call{p->contract, p->operation, p->args, p->payload};
        int priority = contracts::classify_priority(call) == contracts::Priority::High ? 1 : 2;
        work_.push(*this, priority, m, from, bytes);
        return;
    }
    if (const auto* bd = std::get_if<msg::BlockDeliver>(&m)) {
        uint64_t number = bd->block.header.number;
        if (number < chain_.size()) {
            // Duplicate of an already-committed block: re-ack, no service.
            sim().send(address(), from, msg::BlockAck{chain_.size()});
            return;
        }
        if (number > chain_.size()) {
            if (number < chain_.size() + 8)
                future_blocks_.emplace(number, std::make_pair(bd->block, from));
            return;
        }
        work_.push(*this, 0, m, from, bytes);
        return;
    }
    if (const auto* r = std::get_if<msg::Register>(&m)) {
        handle_register(*r, from);
        return;
    }
    if (const auto* d = std::get_if<msg::Deregister>(&m)) {
        connected_.erase(d->vehicle);
        return;
    }
}

void PeerNode::on_timer(int timer_id) {
    if (timer_id != TIMER_WORK) return;
    auto item = work_.complete(*this);
    if (const auto* p = std::get_if<msg::Proposal>(&item.work)) {
        handle_proposal(*p, item.from);
    } else if (auto* bd = std::get_if<msg::BlockDeliver>(&item.work)) {
        handle_block(std::move(bd->block), item.from);
    }
}

void PeerNode::handle_register(const msg::Register& r, net::NodeAddress from) {
    const Certificate& cert = r.certificate;
    bool ok = cert.role == Role::Vehicle && verify_certificate(cert, ca_pk_, sim().now_ms());
    if (ok) {
        connected_[cert.subject] = from;  // idempotent
        sim().send(address(), from, msg::RegisterAck{true, ""});
    } else {
        ++stats_.auth_failures;
        sim().send(address(), from, msg::RegisterAck{false, "certificate rejected"});
    }
}

void PeerNode::handle_proposal(const msg::Proposal& p, net::NodeAddress from) {
    msg::ProposalResponse res;
    Hash phash = p.proposal_hash();
    res.proposal_hash = phash;

    const Certificate* client =
        verified_cert(*directory_, p.creator, Role::Vehicle, ca_pk_, sim().now_ms());
    if (!client || !crypto::verify(client->subject_public_key,
                                   ByteView(phash.bytes.data(), phash.bytes.size()),
                                   p.client_signature)) {
        ++stats_.auth_failures;
        res.status = msg::ProposalStatus::AuthFailure;
        res.message = "client authentication failed";
        sim().send(address(), from, std::move(res));
        return;
    }

    contracts::ContractCall call{p.contract, p.operation, p.args, p.payload};
    if (!contracts::contract_registered(call.contract, call.operation)) {
        ++stats_.proposals_refused;
        res.status = msg::ProposalStatus::EndorseRefused;
        res.message = "unknown contract";
        sim().send(address(), from, std::move(res));
        return;
    }
    contracts::ExecResult exec = contracts::execute(call, p.creator, phash, world_);
    if (!exec.ok()) {
        ++stats_.proposals_refused;
        res.status = msg::ProposalStatus::EndorseRefused;
        res.message = contracts::exec_error_name(exec.error) + std::string(": ") +
                      exec.message;
        sim().send(address(), from, std::move(res));
        return;
    }

    res.status = msg::ProposalStatus::Ok;
    res.rw_set = exec.rw_set;
    res.query_result = std::move(exec.query_result);
    res.endorsement.peer = id_;
    res.endorsement.proposal_hash = phash;
    res.endorsement.rw_set_hash = exec.rw_set.hash();
    Bytes payload = res.endorsement.signing_payload();
    res.endorsement.signature =
        crypto::sign(keys_.secret_key, ByteView(payload.data(), payload.size()));
    ++stats_.proposals_endorsed;
    sim().send(address(), from, std::move(res));
}

void PeerNode::handle_block(Block block, net::NodeAddress from) {
    if (block.header.number != chain_.size()) {
        // Raced with a buffered commit; duplicates were acked earlier.
        if (block.header.number < chain_.size())
            sim().send(address(), from, msg::BlockAck{chain_.size()});
        return;
    }
    std::vector<Validity> flags =
        validate_block(block, world_, committed_proposals_, cfg_.policy, *directory_, ca_pk_,
                       sim().now_ms());
    commit(std::move(block), std::move(flags), from);
    enqueue_ready_blocks();
}

void PeerNode::commit(Block block, std::vector<Validity> flags, net::NodeAddress orderer) {
    block.validity = std::move(flags);
    append_block(chain_, std::move(block));
    const Block& committed = chain_.back();
    world_.apply_block(committed);
    ++stats_.blocks_committed;

    sim().send(address(), orderer, msg::BlockAck{chain_.size()});

    for (uint32_t i = 0; i < committed.transactions.size(); ++i) {
        const Transaction& tx = committed.transactions[i];
        bool valid = committed.validity[i] == Validity::Valid;
        Hash phash = tx.proposal_hash();
        if (valid) {
            committed_proposals_.insert(phash);
            ++stats_.txs_valid;
        } else {
            ++stats_.txs_invalid;
        }

        // Commit outcome goes to the creator if it is registered here.
        auto home = connected_.find(tx.creator);
        if (home != connected_.end()) {
            sim().send(address(), home->second,
                       msg::CommitConfirm{phash, tx.id(), committed.header.number,
                                          committed.validity[i]});
        }

        // Push notifications for valid high-priority commits.
        contracts::ContractCall call{tx.contract, tx.operation, tx.args, tx.payload};
        if (!valid || contracts::classify_priority(call) != contracts::Priority::High)
            continue;
        msg::Notification note;
        note.block_number = committed.header.number;
        note.tx_id = tx.id();
        note.proposal_hash = phash;
        if (!tx.args.empty()) {
            note.report = tx.args[0];
            try {
                auto rep = contracts::IncidentReport::decode(
                    ByteView(tx.args[0].data(), tx.args[0].size()));
                note.zone = rep.zone;
            } catch (const CodecError&) {
                // Malformed report in a valid tx cannot happen via the
                // contract path; leave the zone empty if it does.
            }
        }
        for (const auto& [pseud, addr] : connected_) {
            sim().send(address(), addr, note);
            ++stats_.notifications_sent;
        }
    }
}

void PeerNode::enqueue_ready_blocks() {
    auto it = future_blocks_.find(chain_.size());
    if (it == future_blocks_.end()) return;
    Block next = std::move(it->second.first);
    net::NodeAddress deliverer = it->second.second;
    future_blocks_.erase(it);
    size_t bytes = next.encode().size();
    work_.push(*this, 0, msg::BlockDeliver{std::move(next)}, deliverer, bytes);
}

void PeerNode::on_restart() {
    work_.reset();
    future_blocks_.clear();
    connected_.clear();  // session state: vehicles must re-register
    world_ = replay_chain(chain_);
    committed_proposals_.clear();
    for (const Block& b : chain_)
        for (uint32_t i = 0; i < b.transactions.size(); ++i)
            if (b.validity[i] == Validity::Valid)
                committed_proposals_.insert(b.transactions[i].proposal_hash());
}

}  // namespace edgechain::peer
