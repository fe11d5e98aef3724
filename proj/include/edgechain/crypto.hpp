#pragma once

#include <cstdint>
#include <string>

#include "edgechain/bytes.hpp"

namespace edgechain::crypto {

Hash sha256(ByteView data);
Hash sha256(const Bytes& data);

/// Incremental SHA-256; digest() may be called at any point without
/// disturbing the stream (used for running event-trace hashes).
class Sha256Stream {
public:
    Sha256Stream();
    void update(ByteView data);
    Hash digest() const;

private:
    std::array<uint8_t, 104> state_;  // crypto_hash_sha256_state, opaque here
};

/// Ed25519 key pair. Key generation is deterministic from a 32-byte seed so
/// that whole-simulation runs stay reproducible under a fixed seed.
struct KeyPair {
    Bytes public_key;  // 32 bytes
    Bytes secret_key;  // 64 bytes
};

struct Signature {
    Bytes bytes;  // 64 bytes

    bool operator==(const Signature&) const = default;
};

KeyPair keypair_from_seed(const std::array<uint8_t, 32>& seed);
KeyPair keypair_from_seed(uint64_t seed);

Signature sign(const Bytes& secret_key, ByteView message);

/// Total: returns false on malformed keys/signatures instead of throwing.
bool verify(const Bytes& public_key, ByteView message, const Signature& sig);

}  // namespace edgechain::crypto
