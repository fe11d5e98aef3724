#pragma once

#include <string>
#include <variant>
#include <vector>

#include "edgechain/contracts.hpp"
#include "edgechain/identity.hpp"
#include "edgechain/ledger.hpp"

namespace edgechain::msg {

/// Everything that crosses the simulated wire lives here with a canonical
/// encoding; message size on the wire is the size of that encoding.

/// vehicle -> peer: simulate this call and endorse the result.
struct Proposal {
    Pseudonym creator;
    std::string contract;
    std::string operation;
    std::vector<Bytes> args;
    Bytes payload;
    TimestampMs created_at = 0;
    crypto::Signature client_signature;  // over the proposal hash

    Hash proposal_hash() const;
};

enum class ProposalStatus : uint8_t { Ok = 0, AuthFailure = 1, EndorseRefused = 2 };

struct ProposalResponse {
    Hash proposal_hash;
    ProposalStatus status = ProposalStatus::Ok;
    std::string message;
    ReadWriteSet rw_set;
    Endorsement endorsement;
    Bytes query_result;
};

/// vehicle -> orderer: endorsed transaction ready for ordering.
struct SubmitEnvelope {
    Transaction tx;
};

enum class SubmitStatus : uint8_t { Accepted = 0, Redirect = 1, NoLeader = 2 };

struct SubmitResult {
    Hash proposal_hash;
    SubmitStatus status = SubmitStatus::Accepted;
    int32_t leader_hint = -1;  // orderer index, -1 unknown
};

/// Replicated log entry. TimeToCut markers let every orderer derive block
/// boundaries from the committed log alone.
enum class EntryKind : uint8_t { Envelope = 0, TimeToCut = 1 };

struct LogEntry {
    uint64_t term = 0;
    EntryKind kind = EntryKind::Envelope;
    Transaction tx;  // meaningful only for Envelope entries
    TimestampMs received_at = 0;

    bool operator==(const LogEntry&) const = default;

    void encode(Writer& w) const;
    static LogEntry decode(Reader& r);
};

struct RequestVote {
    uint64_t term = 0;
    int32_t candidate = -1;
    int64_t last_log_index = -1;
    uint64_t last_log_term = 0;
};

struct RequestVoteResponse {
    uint64_t term = 0;
    bool granted = false;
};

struct AppendEntries {
    uint64_t term = 0;
    int32_t leader = -1;
    int64_t prev_log_index = -1;  // -1: appending from the start
    uint64_t prev_log_term = 0;
    std::vector<LogEntry> entries;
    int64_t leader_commit = -1;
};

struct AppendEntriesResponse {
    uint64_t term = 0;
    bool success = false;
    int64_t match_index = -1;  // last index known replicated on success
};

/// orderer -> peer.
struct BlockDeliver {
    Block block;
};

/// peer -> orderer: chain height after commit; acknowledges every lower block.
struct BlockAck {
    uint64_t height = 0;
};

/// peer -> vehicle push for committed high-priority transactions.
struct Notification {
    std::string zone;
    uint64_t block_number = 0;
    Hash tx_id;
    Hash proposal_hash;
    Bytes report;  // encoded IncidentReport
};

/// peer -> creator vehicle after commit, any validity.
struct CommitConfirm {
    Hash proposal_hash;
    Hash tx_id;
    uint64_t block_number = 0;
    Validity validity = Validity::Valid;
};

struct Register {
    Certificate certificate;
};

struct RegisterAck {
    bool ok = false;
    std::string message;
};

struct Deregister {
    Pseudonym vehicle;
};

using Message =
    std::variant<Proposal, ProposalResponse, SubmitEnvelope, SubmitResult, RequestVote,
                 RequestVoteResponse, AppendEntries, AppendEntriesResponse, BlockDeliver,
                 BlockAck, Notification, CommitConfirm, Register, RegisterAck, Deregister>;

const char* message_type_name(const Message& m);

Bytes encode_message(const Message& m);
Message decode_message(ByteView data);

/// Size of the canonical encoding; drives latency-free service cost and
/// KiB/s accounting.
size_t wire_size(const Message& m);

}  // namespace edgechain::msg
