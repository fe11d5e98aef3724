#include "edgechain/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace edgechain {

std::string Hash::hex() const { return to_hex(ByteView(bytes.data(), bytes.size())); }

Hash Hash::from_hex(const std::string& s) {
    Bytes raw = edgechain::from_hex(s);
    if (raw.size() != 32) throw std::invalid_argument("hash hex must be 64 chars");
    Hash h;
    std::memcpy(h.bytes.data(), raw.data(), 32);
    return h;
}

std::string to_hex(ByteView data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

static int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("bad hex digit");
}

Bytes from_hex(const std::string& s) {
    if (s.size() % 2 != 0) throw std::invalid_argument("odd hex length");
    Bytes out(s.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>((nibble(s[2 * i]) << 4) | nibble(s[2 * i + 1]));
    return out;
}

namespace crypto {

namespace {
void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("sodium_init failed");
}
}  // namespace

Hash sha256(ByteView data) {
    ensure_sodium();
    Hash h;
    crypto_hash_sha256(h.bytes.data(), data.data(), data.size());
    return h;
}

Hash sha256(const Bytes& data) { return sha256(ByteView(data.data(), data.size())); }

static_assert(sizeof(crypto_hash_sha256_state) == 104);

Sha256Stream::Sha256Stream() {
    ensure_sodium();
    crypto_hash_sha256_init(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()));
}

void Sha256Stream::update(ByteView data) {
    crypto_hash_sha256_update(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()),
                              data.data(), data.size());
}

Hash Sha256Stream::digest() const {
    auto copy = state_;  // finalization is destructive, run it on a copy
    Hash h;
    crypto_hash_sha256_final(reinterpret_cast<crypto_hash_sha256_state*>(copy.data()),
                             h.bytes.data());
    return h;
}

KeyPair keypair_from_seed(const std::array<uint8_t, 32>& seed) {
    ensure_sodium();
    KeyPair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

KeyPair keypair_from_seed(uint64_t seed) {
    // Stretch the integer seed through the hash so nearby seeds give
    // unrelated keys.
    std::array<uint8_t, 32> material{};
    Bytes tag = to_bytes("edgechain/keyseed");
    tag.reserve(tag.size() + 8);
    for (int shift = 56; shift >= 0; shift -= 8)
        tag.push_back(static_cast<uint8_t>(seed >> shift));
    Hash h = sha256(tag);
    std::memcpy(material.data(), h.bytes.data(), 32);
    return keypair_from_seed(material);
}

Signature sign(const Bytes& secret_key, ByteView message) {
    ensure_sodium();
    if (secret_key.size() != crypto_sign_SECRETKEYBYTES)
        throw std::invalid_argument("bad secret key length");
    Signature sig;
    sig.bytes.resize(crypto_sign_BYTES);
    crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                         secret_key.data());
    return sig;
}

bool verify(const Bytes& public_key, ByteView message, const Signature& sig) {
    ensure_sodium();
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES) return false;
    if (sig.bytes.size() != crypto_sign_BYTES) return false;
    return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

}  // namespace crypto
}  // namespace edgechain
