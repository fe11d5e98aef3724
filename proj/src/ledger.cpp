#include "edgechain/ledger.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "edgechain/merkle.hpp"

namespace edgechain {

using nlohmann::json;

Bytes ReadWriteSet::encode() const {
    Writer w;
    w.u32(static_cast<uint32_t>(reads.size()));
    for (const ReadItem& item : reads) {
        w.str(item.key);
        w.u8(item.version ? 1 : 0);
        if (item.version) {
            w.u64(item.version->block_number);
            w.u32(item.version->tx_index);
        }
    }
    w.u32(static_cast<uint32_t>(writes.size()));
    for (const WriteItem& item : writes) {
        w.str(item.key);
        w.bytes(item.value);
    }
    return w.take();
}

ReadWriteSet ReadWriteSet::decode(Reader& r) {
    ReadWriteSet rw;
    uint32_t n_reads = r.u32();
    rw.reads.reserve(n_reads);
    for (uint32_t i = 0; i < n_reads; ++i) {
        ReadItem item;
        item.key = r.str();
        if (r.u8() != 0) {
            Version v;
            v.block_number = r.u64();
            v.tx_index = r.u32();
            item.version = v;
        }
        rw.reads.push_back(std::move(item));
    }
    uint32_t n_writes = r.u32();
    rw.writes.reserve(n_writes);
    for (uint32_t i = 0; i < n_writes; ++i) {
        WriteItem item;
        item.key = r.str();
        item.value = r.bytes();
        rw.writes.push_back(std::move(item));
    }
    return rw;
}

Hash ReadWriteSet::hash() const { return crypto::sha256(encode()); }

Bytes Endorsement::signing_payload() const {
    Writer w;
    w.hash(proposal_hash);
    w.hash(rw_set_hash);
    return w.take();
}

void Endorsement::encode(Writer& w) const {
    w.hash(peer.value);
    w.hash(proposal_hash);
    w.hash(rw_set_hash);
    w.bytes(signature.bytes);
}

Endorsement Endorsement::decode(Reader& r) {
    Endorsement e;
    e.peer.value = r.hash();
    e.proposal_hash = r.hash();
    e.rw_set_hash = r.hash();
    e.signature.bytes = r.bytes();
    return e;
}

void encode_proposal_fields(Writer& w, const Pseudonym& creator, const std::string& contract,
                            const std::string& operation, const std::vector<Bytes>& args,
                            const Bytes& payload, TimestampMs created_at) {
    w.hash(creator.value);
    w.str(contract);
    w.str(operation);
    w.u32(static_cast<uint32_t>(args.size()));
    for (const Bytes& a : args) w.bytes(a);
    w.bytes(payload);
    w.u64(static_cast<uint64_t>(created_at));
}

Bytes Transaction::proposal_encode() const {
    Writer w;
    encode_proposal_fields(w, creator, contract, operation, args, payload, created_at);
    return w.take();
}

Bytes Transaction::encode() const {
    Writer w;
    w.raw(proposal_encode());
    w.bytes(rw_set.encode());
    w.u32(static_cast<uint32_t>(endorsements.size()));
    for (const Endorsement& e : endorsements) e.encode(w);
    w.bytes(client_signature.bytes);
    return w.take();
}

Transaction Transaction::decode(Reader& r) {
    Transaction tx;
    tx.creator.value = r.hash();
    tx.contract = r.str();
    tx.operation = r.str();
    uint32_t n_args = r.u32();
    tx.args.reserve(n_args);
    for (uint32_t i = 0; i < n_args; ++i) tx.args.push_back(r.bytes());
    tx.payload = r.bytes();
    tx.created_at = static_cast<TimestampMs>(r.u64());
    Bytes rw_bytes = r.bytes();
    Reader rw_reader(rw_bytes);
    tx.rw_set = ReadWriteSet::decode(rw_reader);
    uint32_t n_end = r.u32();
    tx.endorsements.reserve(n_end);
    for (uint32_t i = 0; i < n_end; ++i) tx.endorsements.push_back(Endorsement::decode(r));
    tx.client_signature.bytes = r.bytes();
    return tx;
}

Transaction Transaction::decode(ByteView data) {
    Reader r(data);
    Transaction tx = decode(r);
    r.expect_done();
    return tx;
}

const char* validity_name(Validity v) {
    switch (v) {
        case Validity::Valid: return "valid";
        case Validity::ConflictInvalid: return "conflict-invalid";
        case Validity::EndorsementInvalid: return "endorsement-invalid";
        case Validity::SignatureInvalid: return "signature-invalid";
    }
    return "unknown";
}

Bytes BlockHeader::encode() const {
    Writer w;
    w.u64(number);
    w.hash(previous_hash);
    w.hash(data_hash);
    return w.take();
}

Hash hash_header(const BlockHeader& header) { return crypto::sha256(header.encode()); }

Hash Block::compute_data_hash() const {
    std::vector<Hash> ids;
    ids.reserve(transactions.size());
    for (const Transaction& tx : transactions) ids.push_back(tx.id());
    return merkle_root(ids);
}

Bytes Block::encode() const {
    Writer w;
    w.raw(header.encode());
    w.u32(static_cast<uint32_t>(transactions.size()));
    for (const Transaction& tx : transactions) w.bytes(tx.encode());
    w.u32(static_cast<uint32_t>(validity.size()));
    for (Validity v : validity) w.u8(static_cast<uint8_t>(v));
    return w.take();
}

Block Block::decode(ByteView data) {
    Reader r(data);
    Block b;
    b.header.number = r.u64();
    b.header.previous_hash = r.hash();
    b.header.data_hash = r.hash();
    uint32_t n_tx = r.u32();
    b.transactions.reserve(n_tx);
    for (uint32_t i = 0; i < n_tx; ++i) {
        Bytes tx_bytes = r.bytes();
        b.transactions.push_back(Transaction::decode(ByteView(tx_bytes.data(), tx_bytes.size())));
    }
    uint32_t n_flags = r.u32();
    b.validity.reserve(n_flags);
    for (uint32_t i = 0; i < n_flags; ++i) b.validity.push_back(static_cast<Validity>(r.u8()));
    r.expect_done();
    return b;
}

void append_block(Chain& chain, Block block) {
    const uint64_t expected_number = chain.size();
    if (block.header.number != expected_number) {
        throw ChainLinkError("block number " + std::to_string(block.header.number) +
                             ", expected " + std::to_string(expected_number));
    }
    const Hash expected_prev =
        chain.empty() ? Hash::zero() : hash_header(chain.back().header);
    if (block.header.previous_hash != expected_prev) {
        throw ChainLinkError("previous_hash mismatch at block " +
                             std::to_string(block.header.number));
    }
    if (block.header.data_hash != block.compute_data_hash()) {
        throw DataHashError("data_hash does not match Merkle root at block " +
                            std::to_string(block.header.number));
    }
    chain.push_back(std::move(block));
}

std::optional<size_t> validate_chain(const Chain& chain) {
    Hash prev = Hash::zero();
    for (size_t i = 0; i < chain.size(); ++i) {
        const Block& b = chain[i];
        if (b.header.number != i) return i;
        if (b.header.previous_hash != prev) return i;
        if (b.header.data_hash != b.compute_data_hash()) return i;
        if (b.validity.size() != b.transactions.size()) return i;
        prev = hash_header(b.header);
    }
    return std::nullopt;
}

std::optional<StateEntry> WorldState::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::pair<std::string, StateEntry>> WorldState::prefix(const std::string& p) const {
    std::vector<std::pair<std::string, StateEntry>> out;
    for (auto it = entries_.lower_bound(p); it != entries_.end(); ++it) {
        if (it->first.compare(0, p.size(), p) != 0) break;
        out.emplace_back(it->first, it->second);
    }
    return out;
}

void WorldState::put(const std::string& key, Bytes value, Version version) {
    entries_[key] = StateEntry{std::move(value), version};
}

void WorldState::apply_block(const Block& block) {
    for (size_t i = 0; i < block.transactions.size(); ++i) {
        if (i >= block.validity.size() || block.validity[i] != Validity::Valid) continue;
        const Transaction& tx = block.transactions[i];
        for (const WriteItem& wr : tx.rw_set.writes) {
            put(wr.key, wr.value,
                Version{block.header.number, static_cast<uint32_t>(i)});
        }
    }
}

Hash WorldState::state_hash() const {
    Writer w;
    w.u32(static_cast<uint32_t>(entries_.size()));
    for (const auto& [key, entry] : entries_) {
        w.str(key);
        w.bytes(entry.value);
        w.u64(entry.version.block_number);
        w.u32(entry.version.tx_index);
    }
    return crypto::sha256(w.data());
}

WorldState replay_chain(const Chain& chain) {
    WorldState state;
    for (const Block& b : chain) state.apply_block(b);
    return state;
}

Bytes encode_chain(const Chain& chain) {
    Writer w;
    for (const Block& b : chain) w.bytes(b.encode());
    return w.take();
}

Chain decode_chain(ByteView data) {
    Chain chain;
    Reader r(data);
    while (!r.done()) {
        Bytes block_bytes = r.bytes();
        chain.push_back(Block::decode(ByteView(block_bytes.data(), block_bytes.size())));
    }
    return chain;
}

void write_chain_file(const std::string& path, const Chain& chain) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    Bytes data = encode_chain(chain);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("short write to " + path);
}

Chain read_chain_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_chain(ByteView(data.data(), data.size()));
}

std::optional<size_t> validate_chain_file(const std::string& path, Chain* out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Chain chain;
    Reader r(ByteView(data.data(), data.size()));
    while (!r.done()) {
        try {
            Bytes block_bytes = r.bytes();
            chain.push_back(Block::decode(ByteView(block_bytes.data(), block_bytes.size())));
        } catch (const CodecError&) {
            if (out) *out = std::move(chain);
            return out ? out->size() : chain.size();
        }
    }
    auto bad = validate_chain(chain);
    if (out) *out = std::move(chain);
    return bad;
}

namespace {

json tx_to_json(const Transaction& tx, Validity v) {
    json reads = json::array();
    for (const ReadItem& r : tx.rw_set.reads) {
        json item{{"key", r.key}};
        if (r.version) {
            item["version"] = {{"block", r.version->block_number}, {"tx", r.version->tx_index}};
        } else {
            item["version"] = nullptr;
        }
        reads.push_back(std::move(item));
    }
    json writes = json::array();
    for (const WriteItem& w : tx.rw_set.writes)
        writes.push_back({{"key", w.key}, {"value_len", w.value.size()}});
    return json{
        {"id", tx.id().hex()},
        {"proposal_hash", tx.proposal_hash().hex()},
        {"creator", tx.creator.hex()},
        {"contract", tx.contract},
        {"operation", tx.operation},
        {"payload_len", tx.payload.size()},
        {"created_at", tx.created_at},
        {"endorsements", tx.endorsements.size()},
        {"reads", std::move(reads)},
        {"writes", std::move(writes)},
        {"validity", validity_name(v)},
    };
}

}  // namespace

std::string chain_to_json(const Chain& chain) {
    json blocks = json::array();
    for (const Block& b : chain) {
        json txs = json::array();
        for (size_t i = 0; i < b.transactions.size(); ++i) {
            Validity v = i < b.validity.size() ? b.validity[i] : Validity::Valid;
            txs.push_back(tx_to_json(b.transactions[i], v));
        }
        blocks.push_back({
            {"number", b.header.number},
            {"previous_hash", b.header.previous_hash.hex()},
            {"data_hash", b.header.data_hash.hex()},
            {"header_hash", hash_header(b.header).hex()},
            {"transactions", std::move(txs)},
        });
    }
    return json{{"height", chain.size()}, {"blocks", std::move(blocks)}}.dump(2);
}

std::string state_to_json(const WorldState& state) {
    json entries = json::array();
    for (const auto& [key, entry] : state.entries()) {
        entries.push_back({
            {"key", key},
            {"value_len", entry.value.size()},
            {"version", {{"block", entry.version.block_number}, {"tx", entry.version.tx_index}}},
        });
    }
    return json{{"state_hash", state.state_hash().hex()},
                {"size", state.size()},
                {"entries", std::move(entries)}}
        .dump(2);
}

}  // namespace edgechain
