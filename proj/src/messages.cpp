#include "edgechain/messages.hpp"

#include "edgechain/codec.hpp"
#include "edgechain/crypto.hpp"

namespace edgechain::msg {

Hash Proposal::proposal_hash() const {
    Writer w;
    encode_proposal_fields(w, creator, contract, operation, args, payload, created_at);
    return crypto::sha256(w.data());
}

void LogEntry::encode(Writer& w) const {
    w.u64(term);
    w.u8(static_cast<uint8_t>(kind));
    w.u64(static_cast<uint64_t>(received_at));
    if (kind == EntryKind::Envelope) w.bytes(tx.encode());
}

LogEntry LogEntry::decode(Reader& r) {
    LogEntry e;
    e.term = r.u64();
    e.kind = static_cast<EntryKind>(r.u8());
    e.received_at = static_cast<TimestampMs>(r.u64());
    if (e.kind == EntryKind::Envelope) {
        Bytes raw = r.bytes();
        e.tx = Transaction::decode(ByteView(raw.data(), raw.size()));
    }
    return e;
}

namespace {

void enc(Writer& w, const Proposal& m) {
    encode_proposal_fields(w, m.creator, m.contract, m.operation, m.args, m.payload,
                           m.created_at);
    w.bytes(m.client_signature.bytes);
}

Proposal dec_proposal(Reader& r) {
    Proposal m;
    m.creator.value = r.hash();
    m.contract = r.str();
    m.operation = r.str();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) m.args.push_back(r.bytes());
    m.payload = r.bytes();
    m.created_at = static_cast<TimestampMs>(r.u64());
    m.client_signature.bytes = r.bytes();
    return m;
}

void enc(Writer& w, const ProposalResponse& m) {
    w.hash(m.proposal_hash);
    w.u8(static_cast<uint8_t>(m.status));
    w.str(m.message);
    w.bytes(m.rw_set.encode());
    m.endorsement.encode(w);
    w.bytes(m.query_result);
}

ProposalResponse dec_proposal_response(Reader& r) {
    ProposalResponse m;
    m.proposal_hash = r.hash();
    m.status = static_cast<ProposalStatus>(r.u8());
    m.message = r.str();
    Bytes rw = r.bytes();
    Reader rwr(ByteView(rw.data(), rw.size()));
    m.rw_set = ReadWriteSet::decode(rwr);
    m.endorsement = Endorsement::decode(r);
    m.query_result = r.bytes();
    return m;
}

void enc(Writer& w, const SubmitEnvelope& m) { w.bytes(m.tx.encode()); }

SubmitEnvelope dec_submit_envelope(Reader& r) {
    Bytes raw = r.bytes();
    return SubmitEnvelope{Transaction::decode(ByteView(raw.data(), raw.size()))};
}

void enc(Writer& w, const SubmitResult& m) {
    w.hash(m.proposal_hash);
    w.u8(static_cast<uint8_t>(m.status));
    w.u32(static_cast<uint32_t>(m.leader_hint));
}

SubmitResult dec_submit_result(Reader& r) {
    SubmitResult m;
    m.proposal_hash = r.hash();
    m.status = static_cast<SubmitStatus>(r.u8());
    m.leader_hint = static_cast<int32_t>(r.u32());
    return m;
}

void enc(Writer& w, const RequestVote& m) {
    w.u64(m.term);
    w.u32(static_cast<uint32_t>(m.candidate));
    w.u64(static_cast<uint64_t>(m.last_log_index));
    w.u64(m.last_log_term);
}

RequestVote dec_request_vote(Reader& r) {
    RequestVote m;
    m.term = r.u64();
    m.candidate = static_cast<int32_t>(r.u32());
    m.last_log_index = static_cast<int64_t>(r.u64());
    m.last_log_term = r.u64();
    return m;
}

void enc(Writer& w, const RequestVoteResponse& m) {
    w.u64(m.term);
    w.u8(m.granted ? 1 : 0);
}

RequestVoteResponse dec_request_vote_response(Reader& r) {
    RequestVoteResponse m;
    m.term = r.u64();
    m.granted = r.u8() != 0;
    return m;
}

void enc(Writer& w, const AppendEntries& m) {
    w.u64(m.term);
    w.u32(static_cast<uint32_t>(m.leader));
    w.u64(static_cast<uint64_t>(m.prev_log_index));
    w.u64(m.prev_log_term);
    w.u32(static_cast<uint32_t>(m.entries.size()));
    for (const LogEntry& e : m.entries) e.encode(w);
    w.u64(static_cast<uint64_t>(m.leader_commit));
}

AppendEntries dec_append_entries(Reader& r) {
    AppendEntries m;
    m.term = r.u64();
    m.leader = static_cast<int32_t>(r.u32());
    m.prev_log_index = static_cast<int64_t>(r.u64());
    m.prev_log_term = r.u64();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) m.entries.push_back(LogEntry::decode(r));
    m.leader_commit = static_cast<int64_t>(r.u64());
    return m;
}

void enc(Writer& w, const AppendEntriesResponse& m) {
    w.u64(m.term);
    w.u8(m.success ? 1 : 0);
    w.u64(static_cast<uint64_t>(m.match_index));
}

AppendEntriesResponse dec_append_entries_response(Reader& r) {
    AppendEntriesResponse m;
    m.term = r.u64();
    m.success = r.u8() != 0;
    m.match_index = static_cast<int64_t>(r.u64());
    return m;
}

void enc(Writer& w, const BlockDeliver& m) { w.bytes(m.block.encode()); }

BlockDeliver dec_block_deliver(Reader& r) {
    Bytes raw = r.bytes();
    return BlockDeliver{Block::decode(ByteView(raw.data(), raw.size()))};
}

void enc(Writer& w, const BlockAck& m) { w.u64(m.height); }

BlockAck dec_block_ack(Reader& r) { return BlockAck{r.u64()}; }

void enc(Writer& w, const Notification& m) {
    w.str(m.zone);
    w.u64(m.block_number);
    w.hash(m.tx_id);
    w.hash(m.proposal_hash);
    w.bytes(m.report);
}

Notification dec_notification(Reader& r) {
    Notification m;
    m.zone = r.str();
    m.block_number = r.u64();
    m.tx_id = r.hash();
    m.proposal_hash = r.hash();
    m.report = r.bytes();
    return m;
}

void enc(Writer& w, const CommitConfirm& m) {
    w.hash(m.proposal_hash);
    w.hash(m.tx_id);
    w.u64(m.block_number);
    w.u8(static_cast<uint8_t>(m.validity));
}

CommitConfirm dec_commit_confirm(Reader& r) {
    CommitConfirm m;
    m.proposal_hash = r.hash();
    m.tx_id = r.hash();
    m.block_number = r.u64();
    m.validity = static_cast<Validity>(r.u8());
    return m;
}

void enc(Writer& w, const Register& m) { w.bytes(m.certificate.encode()); }

Register dec_register(Reader& r) {
    Bytes raw = r.bytes();
    return Register{Certificate::decode(ByteView(raw.data(), raw.size()))};
}

void enc(Writer& w, const RegisterAck& m) {
    w.u8(m.ok ? 1 : 0);
    w.str(m.message);
}

RegisterAck dec_register_ack(Reader& r) {
    RegisterAck m;
    m.ok = r.u8() != 0;
    m.message = r.str();
    return m;
}

void enc(Writer& w, const Deregister& m) { w.hash(m.vehicle.value); }

Deregister dec_deregister(Reader& r) { return Deregister{Pseudonym{r.hash()}}; }

}  // namespace

const char* message_type_name(const Message& m) {
    static constexpr const char* names[] = {
        "proposal",      "proposal-response", "submit-envelope", "submit-result",
        "request-vote",  "request-vote-response", "append-entries",
        "append-entries-response", "block-deliver", "block-ack", "notification",
        "commit-confirm", "register", "register-ack", "deregister"};
    return names[m.index()];
}

Bytes encode_message(const Message& m) {
    Writer w;
    w.u8(static_cast<uint8_t>(m.index()));
    std::visit([&w](const auto& x) { enc(w, x); }, m);
    return w.take();
}

Message decode_message(ByteView data) {
    Reader r(data);
    uint8_t tag = r.u8();
    Message m;
    switch (tag) {
        case 0: m = dec_proposal(r); break;
        case 1: m = dec_proposal_response(r); break;
        case 2: m = dec_submit_envelope(r); break;
        case 3: m = dec_submit_result(r); break;
        case 4: m = dec_request_vote(r); break;
        case 5: m = dec_request_vote_response(r); break;
        case 6: m = dec_append_entries(r); break;
        case 7: m = dec_append_entries_response(r); break;
        case 8: m = dec_block_deliver(r); break;
        case 9: m = dec_block_ack(r); break;
        case 10: m = dec_notification(r); break;
        case 11: m = dec_commit_confirm(r); break;
        case 12: m = dec_register(r); break;
        case 13: m = dec_register_ack(r); break;
        case 14: m = dec_deregister(r); break;
        default: throw CodecError("unknown message tag");
    }
    r.expect_done();
    return m;
}

size_t wire_size(const Message& m) { return encode_message(m).size(); }

}  // namespace edgechain::msg
