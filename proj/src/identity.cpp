#include "edgechain/identity.hpp"

#include "edgechain/codec.hpp"

namespace edgechain {

const char* role_name(Role r) {
    switch (r) {
        case Role::Vehicle: return "vehicle";
        case Role::Peer: return "peer";
        case Role::Orderer: return "orderer";
    }
    return "unknown";
}

Bytes Certificate::signing_payload() const {
    Writer w;
    w.hash(subject.value);
    w.bytes(subject_public_key);
    w.u8(static_cast<uint8_t>(role));
    w.hash(issuer.value);
    w.u64(static_cast<uint64_t>(valid_from));
    w.u64(static_cast<uint64_t>(valid_to));
    return w.take();
}

Bytes Certificate::encode() const {
    Writer w;
    w.hash(subject.value);
    w.bytes(subject_public_key);
    w.u8(static_cast<uint8_t>(role));
    w.hash(issuer.value);
    w.bytes(issuer_signature.bytes);
    w.u64(static_cast<uint64_t>(valid_from));
    w.u64(static_cast<uint64_t>(valid_to));
    return w.take();
}

Certificate Certificate::decode(ByteView data) {
    Reader r(data);
    Certificate c;
    c.subject.value = r.hash();
    c.subject_public_key = r.bytes();
    c.role = static_cast<Role>(r.u8());
    c.issuer.value = r.hash();
    c.issuer_signature.bytes = r.bytes();
    c.valid_from = static_cast<TimestampMs>(r.u64());
    c.valid_to = static_cast<TimestampMs>(r.u64());
    return c;
}

Certificate CertificateAuthority::issue(const Bytes& subject_public_key, Role role,
                                        TimestampMs valid_from, TimestampMs valid_to) const {
    if (valid_to < valid_from) throw InvalidWindow();
    Certificate cert;
    cert.subject = Pseudonym::of(subject_public_key);
    cert.subject_public_key = subject_public_key;
    cert.role = role;
    cert.issuer = id_;
    cert.valid_from = valid_from;
    cert.valid_to = valid_to;
    cert.issuer_signature = crypto::sign(keys_.secret_key, cert.signing_payload());
    return cert;
}

bool verify_certificate(const Certificate& cert, const Bytes& ca_public_key, TimestampMs now) {
    if (now < cert.valid_from || now > cert.valid_to) return false;
    if (cert.subject != Pseudonym::of(cert.subject_public_key)) return false;
    return crypto::verify(ca_public_key, cert.signing_payload(), cert.issuer_signature);
}

}  // namespace edgechain
