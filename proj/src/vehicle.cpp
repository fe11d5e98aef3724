#include "edgechain/vehicle.hpp"

#include <algorithm>

namespace edgechain::vehicle {

const char* submit_mode_name(SubmitMode m) {
    return m == SubmitMode::Single ? "single" : "multiple";
}

std::optional<SubmitMode> submit_mode_from(const std::string& name) {
    if (name == "single") return SubmitMode::Single;
    if (name == "multiple") return SubmitMode::Multiple;
    return std::nullopt;
}

VehicleNode::VehicleNode(VehicleConfig cfg, crypto::KeyPair keys, Certificate cert)
    : cfg_(std::move(cfg)),
      keys_(std::move(keys)),
      cert_(std::move(cert)),
      id_(Pseudonym::of(keys_.public_key)),
      graph_(cfg_.graph) {
    if (graph_ && cfg_.position >= 0 && cfg_.destination >= 0 &&
        cfg_.position != cfg_.destination)
        route_ = road::plan_route(*graph_, cfg_.position, cfg_.destination);
}

std::vector<int32_t> VehicleNode::targets() const {
    if (cfg_.mode == SubmitMode::Single) return {cfg_.home_peer};
    std::vector<int32_t> all(static_cast<size_t>(cfg_.peer_count));
    for (int32_t i = 0; i < cfg_.peer_count; ++i) all[static_cast<size_t>(i)] = i;
    return all;
}

bool VehicleNode::registered() const {
    for (int32_t p : targets())
        if (!registered_.count(p)) return false;
    return true;
}

void VehicleNode::boot() { send_registrations(); }

void VehicleNode::send_registrations() {
    for (int32_t p : targets())
        if (!registered_.count(p))
            sim().send(address(), net::NodeAddress::peer(p), msg::Register{cert_});
    reg_token_ = sim().set_timer(address(), cfg_.register_retry_ms, TIMER_REGISTER);
}

void VehicleNode::cancel(uint64_t& token) {
    if (token) {
        sim().cancel_timer(token);
        token = 0;
    }
}

void VehicleNode::on_message(const msg::Message& m, net::NodeAddress from, size_t) {
    if (const auto* ack = std::get_if<msg::RegisterAck>(&m)) {
        if (ack->ok && from.kind == net::NodeKind::Peer) {
            registered_.insert(from.index);
            if (registered() && !started_) {
                cancel(reg_token_);
                started_ = true;
                if (effective_count() > 0) schedule_next();
            }
        }
        return;
    }
    if (const auto* r = std::get_if<msg::ProposalResponse>(&m)) {
        handle_response(*r, from.index);
        return;
    }
    if (const auto* sr = std::get_if<msg::SubmitResult>(&m)) {
        if (phase_ != Phase::Commit || sr->proposal_hash != phash_) return;
        if (sr->status == msg::SubmitStatus::Redirect && sr->leader_hint >= 0) {
            leader_guess_ = sr->leader_hint;
            sim().send(address(), net::NodeAddress::orderer(leader_guess_),
                       msg::SubmitEnvelope{envelope_});
        } else if (sr->status == msg::SubmitStatus::NoLeader) {
            cancel(retry_token_);
            retry_token_ = sim().set_timer(address(), cfg_.submit_backoff_ms, TIMER_RETRY);
        }
        // Accepted: wait for commit evidence; the commit timer is running.
        return;
    }
    if (const auto* cc = std::get_if<msg::CommitConfirm>(&m)) {
        handle_confirm(*cc);
        return;
    }
    if (const auto* note = std::get_if<msg::Notification>(&m)) {
        handle_notification(*note);
        return;
    }
}

void VehicleNode::on_timer(int timer_id) {
    switch (timer_id) {
        case TIMER_REGISTER:
            if (!registered()) send_registrations();
            break;
        case TIMER_ENDORSE: {
            endorse_token_ = 0;
            if (phase_ != Phase::Endorse) break;
            for (int32_t p : targets())
                if (!responses_.count(p)) suspects_.insert(p);
            bool any_ok = false;
            for (const auto& [p, r] : responses_)
                if (r.status == msg::ProposalStatus::Ok) any_ok = true;
            if (any_ok)
                assemble_and_submit();
            else
                finish_request(false);  // endorsement timeout
            break;
        }
        case TIMER_COMMIT:
            commit_token_ = 0;
            if (phase_ != Phase::Commit) break;
            if (resubmits_ < cfg_.max_resubmits) {
                ++resubmits_;
                leader_guess_ = (leader_guess_ + 1) % cfg_.orderer_count;
                submit_envelope();
            } else {
                finish_request(false);  // commit timeout
            }
            break;
        case TIMER_RETRY:
            retry_token_ = 0;
            if (phase_ != Phase::Commit) break;
            leader_guess_ = (leader_guess_ + 1) % cfg_.orderer_count;
            sim().send(address(), net::NodeAddress::orderer(leader_guess_),
                       msg::SubmitEnvelope{envelope_});
            break;
        case TIMER_KICK:
            kick_token_ = 0;
            if (phase_ == Phase::Idle && req_idx_ < effective_count()) begin_request();
            break;
        default:
            break;
    }
}

void VehicleNode::schedule_next() {
    double delay = cfg_.think_ms_max > 0 ? sim().uniform() * cfg_.think_ms_max : 0.0;
    kick_token_ = sim().set_timer(address(), delay, TIMER_KICK);
}

void VehicleNode::begin_request() {
    phase_ = Phase::Endorse;
    attempts_ = 1;
    call_ = build_call(req_idx_);
    t_req_start_ = sim().metric_now_ms();
    send_proposal();
}

Bytes VehicleNode::make_payload(uint32_t request) const {
    Bytes out(cfg_.payload_bytes);
    // Cheap deterministic filler; content only needs to be incompressible
    // enough to be honest about wire size.
    uint64_t x = (static_cast<uint64_t>(cfg_.index) << 32) ^ (request + 0x9E3779B97F4A7C15ULL);
    for (size_t i = 0; i < out.size(); i += 8) {
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        uint64_t v = x * 0x2545F4914F6CDD1DULL;
        for (size_t j = 0; j < 8 && i + j < out.size(); ++j)
            out[i + j] = static_cast<uint8_t>(v >> (8 * j));
    }
    return out;
}

contracts::ContractCall VehicleNode::build_call(uint32_t request) {
    if (!cfg_.scripted.empty()) return cfg_.scripted[request];

    contracts::GeoPoint gps{48.0 + 0.1 * cfg_.index, 11.0};
    if (cfg_.report_gps)
        gps = *cfg_.report_gps;
    else if (graph_ && cfg_.position >= 0)
        gps = graph_->position(cfg_.position);

    double f = cfg_.report_fraction;
    bool report = static_cast<uint64_t>((request + 1) * f) > static_cast<uint64_t>(request * f);
    Bytes payload = make_payload(request);
    if (report) {
        contracts::IncidentReport rep;
        rep.reporter = id_;
        rep.gps = gps;
        rep.kind = contracts::IncidentKind::Accident;
        rep.image_hash = crypto::sha256(payload);
        rep.zone = cfg_.zone;
        rep.reported_at = sim().now_ms();
        return {"situation", "report", {rep.encode()}, std::move(payload)};
    }
    contracts::VehicleRecord rec;
    rec.pseudonym = id_;
    rec.owners = {id_};
    rec.gps = gps;
    rec.connected_edge = cfg_.zone;
    rec.insurance_ref = "sim";
    // Payload still rides along so wire size matches the configured load.
    return {"vehicle", "update", {rec.encode()}, std::move(payload)};
}

void VehicleNode::send_proposal() {
    responses_.clear();
    proposal_.creator = id_;
    proposal_.contract = call_.contract;
    proposal_.operation = call_.operation;
    proposal_.args = call_.args;
    proposal_.payload = call_.payload;
    proposal_.created_at = sim().now_ms();
    phash_ = proposal_.proposal_hash();
    proposal_.client_signature =
        crypto::sign(keys_.secret_key, ByteView(phash_.bytes.data(), phash_.bytes.size()));
    if (cfg_.metrics)
        cfg_.metrics->on_request_begin(cfg_.index, req_idx_, phash_, t_req_start_);
    for (int32_t p : targets())
        sim().send(address(), net::NodeAddress::peer(p), proposal_);
    cancel(endorse_token_);
    endorse_token_ = sim().set_timer(address(), cfg_.endorse_timeout_ms, TIMER_ENDORSE);
}

void VehicleNode::handle_response(const msg::ProposalResponse& r, int32_t peer) {
    auto q = query_pending_.find(r.proposal_hash);
    if (q != query_pending_.end()) {
        query_pending_.erase(q);
        ++queries_done_;
        last_query_reports_.clear();
        if (r.status == msg::ProposalStatus::Ok && !r.query_result.empty())
            last_query_reports_ = contracts::decode_incident_list(
                ByteView(r.query_result.data(), r.query_result.size()));
        return;
    }
    if (phase_ != Phase::Endorse || r.proposal_hash != phash_) return;
    responses_[peer] = r;
    suspects_.erase(peer);
    maybe_finish_endorse();
}

void VehicleNode::maybe_finish_endorse() {
    for (int32_t p : targets())
        if (!suspects_.count(p) && !responses_.count(p)) return;  // still waiting
    bool any_ok = false;
    for (const auto& [p, r] : responses_)
        if (r.status == msg::ProposalStatus::Ok) any_ok = true;
    if (any_ok)
        assemble_and_submit();
    else
        finish_request(false);  // refused everywhere
}

void VehicleNode::assemble_and_submit() {
    cancel(endorse_token_);
    const ReadWriteSet* rw = nullptr;
    for (const auto& [p, r] : responses_) {  // map order: lowest peer wins
        if (r.status == msg::ProposalStatus::Ok) {
            rw = &r.rw_set;
            break;
        }
    }
    envelope_ = Transaction{};
    envelope_.creator = id_;
    envelope_.contract = proposal_.contract;
    envelope_.operation = proposal_.operation;
    envelope_.args = proposal_.args;
    envelope_.payload = proposal_.payload;
    envelope_.created_at = proposal_.created_at;
    envelope_.rw_set = *rw;
    Hash rw_hash = rw->hash();
    for (const auto& [p, r] : responses_)
        if (r.status == msg::ProposalStatus::Ok && r.endorsement.rw_set_hash == rw_hash)
            envelope_.endorsements.push_back(r.endorsement);
    envelope_.client_signature = proposal_.client_signature;

    phase_ = Phase::Commit;
    resubmits_ = 0;
    submit_envelope();
}

void VehicleNode::submit_envelope() {
    sim().send(address(), net::NodeAddress::orderer(leader_guess_),
               msg::SubmitEnvelope{envelope_});
    cancel(commit_token_);
    commit_token_ = sim().set_timer(address(), cfg_.commit_timeout_ms, TIMER_COMMIT);
}

void VehicleNode::handle_confirm(const msg::CommitConfirm& cc) {
    if (phase_ != Phase::Commit || cc.proposal_hash != phash_) return;
    if (cc.validity == Validity::Valid) {
        finish_request(true);
    } else if (cc.validity == Validity::ConflictInvalid && attempts_ < cfg_.max_attempts) {
        // Stale read/write set: take a fresh snapshot and try again.
        ++attempts_;
        phase_ = Phase::Endorse;
        send_proposal();
    } else {
        finish_request(false);
    }
}

void VehicleNode::handle_notification(const msg::Notification& note) {
    if (!seen_notes_.insert(note.tx_id).second) return;  // duplicate
    if (cfg_.metrics)
        cfg_.metrics->on_notification(cfg_.index, note, sim().metric_now_ms());

    if (phase_ == Phase::Commit && note.proposal_hash == phash_) finish_request(true);

    if (!graph_ || route_.empty() || note.report.empty()) return;
    contracts::IncidentReport rep;
    try {
        rep = contracts::IncidentReport::decode(
            ByteView(note.report.data(), note.report.size()));
    } catch (const CodecError&) {
        return;
    }
    road::EdgeId edge = road::nearest_edge(*graph_, rep.gps);
    if (!road::route_uses(route_, edge)) return;  // not on my way: no action
    graph_->set_penalized(edge, true);
    std::vector<road::NodeId> old_route = route_;
    route_ = road::plan_route(*graph_, cfg_.position, cfg_.destination);
    ++reroutes_;
    if (cfg_.metrics)
        cfg_.metrics->on_reroute(cfg_.index, old_route, route_, edge, sim().metric_now_ms());
}

void VehicleNode::finish_request(bool ok) {
    cancel(endorse_token_);
    cancel(commit_token_);
    cancel(retry_token_);
    if (ok)
        ++completed_;
    else
        ++failed_;
    if (cfg_.metrics)
        cfg_.metrics->on_request_done(cfg_.index, req_idx_, ok, t_req_start_,
                                      sim().metric_now_ms(), attempts_);
    phase_ = Phase::Idle;
    ++req_idx_;
    if (req_idx_ < effective_count()) schedule_next();
}

void VehicleNode::start_zone_query(const std::string& zone) {
    msg::Proposal p;
    p.creator = id_;
    p.contract = "situation";
    p.operation = "query";
    p.args = {to_bytes(zone)};
    p.created_at = sim().now_ms();
    Hash ph = p.proposal_hash();
    p.client_signature =
        crypto::sign(keys_.secret_key, ByteView(ph.bytes.data(), ph.bytes.size()));
    query_pending_[ph] = zone;
    sim().send(address(), net::NodeAddress::peer(cfg_.home_peer), p);
}

void VehicleNode::on_restart() {
    // Vehicles are session-stateful only: re-register and resume cleanly.
    registered_.clear();
    started_ = false;
    phase_ = Phase::Idle;
    responses_.clear();
    suspects_.clear();
    query_pending_.clear();
    reg_token_ = endorse_token_ = commit_token_ = retry_token_ = kick_token_ = 0;
    send_registrations();
}

}  // namespace edgechain::vehicle
