#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace edgechain {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

/// Simulation timestamps, milliseconds since simulation epoch.
using TimestampMs = int64_t;

/// 32-byte digest. Equality is byte equality; the all-zero value is the
/// sentinel used for genesis back-links and the empty Merkle tree.
struct Hash {
    std::array<uint8_t, 32> bytes{};

    bool operator==(const Hash&) const = default;
    auto operator<=>(const Hash&) const = default;

    bool is_zero() const {
        for (uint8_t b : bytes)
            if (b != 0) return false;
        return true;
    }

    static Hash zero() { return Hash{}; }

    std::string hex() const;
    static Hash from_hex(const std::string& s);
};

struct HashHasher {
    size_t operator()(const Hash& h) const {
        size_t v;
        std::memcpy(&v, h.bytes.data(), sizeof(v));
        return v;
    }
};

std::string to_hex(ByteView data);
Bytes from_hex(const std::string& s);

inline Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

}  // namespace edgechain
