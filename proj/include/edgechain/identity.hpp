#pragma once

#include <stdexcept>
#include <string>

#include "edgechain/bytes.hpp"
#include "edgechain/crypto.hpp"

namespace edgechain {

/// Vehicle/node identity as stored on the ledger: the hash of the public
/// key and nothing else.
struct Pseudonym {
    Hash value;

    bool operator==(const Pseudonym&) const = default;
    auto operator<=>(const Pseudonym&) const = default;

    static Pseudonym of(const Bytes& public_key) {
        return Pseudonym{crypto::sha256(public_key)};
    }

    std::string hex() const { return value.hex(); }
};

enum class Role : uint8_t { Vehicle = 0, Peer = 1, Orderer = 2 };

const char* role_name(Role r);

struct InvalidWindow : std::runtime_error {
    InvalidWindow() : std::runtime_error("certificate validity window is empty") {}
};

struct Certificate {
    Pseudonym subject;
    Bytes subject_public_key;
    Role role = Role::Vehicle;
    Pseudonym issuer;
    crypto::Signature issuer_signature;
    TimestampMs valid_from = 0;
    TimestampMs valid_to = 0;

    bool operator==(const Certificate&) const = default;

    /// Canonical bytes covered by the issuer signature.
    Bytes signing_payload() const;

    Bytes encode() const;
    static Certificate decode(ByteView data);
};

class CertificateAuthority {
public:
    explicit CertificateAuthority(crypto::KeyPair keys)
        : keys_(std::move(keys)), id_(Pseudonym::of(keys_.public_key)) {}

    Certificate issue(const Bytes& subject_public_key, Role role, TimestampMs valid_from,
                      TimestampMs valid_to) const;

    const Bytes& public_key() const { return keys_.public_key; }
    const Pseudonym& id() const { return id_; }

private:
    crypto::KeyPair keys_;
    Pseudonym id_;
};

/// True iff the issuer signature verifies under the CA key and now falls
/// inside the validity window.
bool verify_certificate(const Certificate& cert, const Bytes& ca_public_key, TimestampMs now);

}  // namespace edgechain
