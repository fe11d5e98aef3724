#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgechain/bytes.hpp"
#include "edgechain/codec.hpp"
#include "edgechain/crypto.hpp"
#include "edgechain/identity.hpp"

namespace edgechain {

struct ChainLinkError : std::runtime_error {
    explicit ChainLinkError(const std::string& what) : std::runtime_error(what) {}
};

struct DataHashError : std::runtime_error {
    explicit DataHashError(const std::string& what) : std::runtime_error(what) {}
};

/// Commit position of a write: (block number, transaction index). Totally
/// ordered lexicographically; used for commit-time conflict detection.
struct Version {
    uint64_t block_number = 0;
    uint32_t tx_index = 0;

    bool operator==(const Version&) const = default;
    auto operator<=>(const Version&) const = default;
};

/// A key read during simulation, with the version observed at that time.
/// A key that did not exist is recorded as version-absent and validates
/// only if it is still absent at commit time.
struct ReadItem {
    std::string key;
    std::optional<Version> version;

    bool operator==(const ReadItem&) const = default;
};

struct WriteItem {
    std::string key;
    Bytes value;

    bool operator==(const WriteItem&) const = default;
};

struct ReadWriteSet {
    std::vector<ReadItem> reads;
    std::vector<WriteItem> writes;

    bool operator==(const ReadWriteSet&) const = default;

    Bytes encode() const;
    static ReadWriteSet decode(Reader& r);
    Hash hash() const;
};

/// A peer's signed statement that simulating the proposal produced the
/// given read/write set. The signature covers (proposal_hash, rw_set_hash).
struct Endorsement {
    Pseudonym peer;
    Hash proposal_hash;
    Hash rw_set_hash;
    crypto::Signature signature;

    bool operator==(const Endorsement&) const = default;

    Bytes signing_payload() const;
    void encode(Writer& w) const;
    static Endorsement decode(Reader& r);
};

/// Canonical encoding of a transaction's client-authored part, shared by
/// Transaction::proposal_encode and the wire-level Proposal so their hashes
/// can never drift apart.
void encode_proposal_fields(Writer& w, const Pseudonym& creator, const std::string& contract,
                            const std::string& operation, const std::vector<Bytes>& args,
                            const Bytes& payload, TimestampMs created_at);

struct Transaction {
    Pseudonym creator;
    std::string contract;
    std::string operation;
    std::vector<Bytes> args;
    Bytes payload;
    TimestampMs created_at = 0;
    ReadWriteSet rw_set;
    std::vector<Endorsement> endorsements;
    crypto::Signature client_signature;

    bool operator==(const Transaction&) const = default;

    /// Canonical bytes of the client-authored part (everything fixed before
    /// endorsement). Its hash names the transaction in state keys, in
    /// endorsements, and for replay dedup, and is what the client signs.
    Bytes proposal_encode() const;
    Hash proposal_hash() const { return crypto::sha256(proposal_encode()); }

    /// Full canonical encoding including rw-set, endorsements and client
    /// signature. The transaction id is its hash, so any byte of a
    /// committed transaction is tamper-evident through the Merkle root.
    Bytes encode() const;
    Hash id() const { return crypto::sha256(encode()); }

    static Transaction decode(Reader& r);
    static Transaction decode(ByteView data);
};

enum class Validity : uint8_t {
    Valid = 0,
    ConflictInvalid = 1,
    EndorsementInvalid = 2,
    SignatureInvalid = 3,
};

const char* validity_name(Validity v);

struct BlockHeader {
    uint64_t number = 0;
    Hash previous_hash;
    Hash data_hash;

    bool operator==(const BlockHeader&) const = default;

    Bytes encode() const;  // number u64be | previous_hash | data_hash
};

Hash hash_header(const BlockHeader& header);

struct Block {
    BlockHeader header;
    std::vector<Transaction> transactions;
    /// Assigned by peers at validation; not covered by the hashed header,
    /// so post-ordering validation does not disturb chain linkage.
    std::vector<Validity> validity;

    Hash compute_data_hash() const;  // Merkle root over transaction ids

    Bytes encode() const;
    static Block decode(ByteView data);
};

using Chain = std::vector<Block>;

/// Appends after checking number, previous-hash link, and data hash.
/// Throws ChainLinkError / DataHashError.
void append_block(Chain& chain, Block block);

/// nullopt if every link and data hash verifies, else index of the first
/// bad block.
std::optional<size_t> validate_chain(const Chain& chain);

struct StateEntry {
    Bytes value;
    Version version;

    bool operator==(const StateEntry&) const = default;
};

/// Versioned key-value view of the ledger. Deterministic replay: state
/// after applying blocks 0..n is a pure function of those blocks.
class WorldState {
public:
    std::optional<StateEntry> get(const std::string& key) const;

    /// All entries with the given key prefix, in key order.
    std::vector<std::pair<std::string, StateEntry>> prefix(const std::string& p) const;

    /// Applies every transaction flagged Valid, in order. Within a block the
    /// later tx index wins for writes of the same key.
    void apply_block(const Block& block);

    void put(const std::string& key, Bytes value, Version version);

    size_t size() const { return entries_.size(); }
    const std::map<std::string, StateEntry>& entries() const { return entries_; }

    /// Digest of the full state, for cross-peer convergence checks.
    Hash state_hash() const;

private:
    std::map<std::string, StateEntry> entries_;
};

WorldState replay_chain(const Chain& chain);

/// Ledger snapshot files: length-prefixed concatenation of encoded blocks.
Bytes encode_chain(const Chain& chain);
Chain decode_chain(ByteView data);
void write_chain_file(const std::string& path, const Chain& chain);
Chain read_chain_file(const std::string& path);

/// read_chain_file + validate_chain in one pass, but damage that breaks a
/// block's decoding is pinned to that block's index instead of failing the
/// whole file (the outer length prefix isolates each block). Returns the
/// first bad block index, or nullopt when the file is intact; `out`, when
/// given, receives the blocks decoded before the damage.
std::optional<size_t> validate_chain_file(const std::string& path, Chain* out = nullptr);

/// Human-readable JSON dump for debugging; never hashed.
std::string chain_to_json(const Chain& chain);
std::string state_to_json(const WorldState& state);

}  // namespace edgechain
