#include "edgechain/cluster.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace edgechain::cluster {

namespace {

// Stable key-derivation offsets per role; identities never collide as long
// as a deployment stays under 100 nodes per role.
constexpr uint64_t kCaOffset = 0;
constexpr uint64_t kPeerOffset = 100;
constexpr uint64_t kOrdererOffset = 200;
constexpr uint64_t kVehicleOffset = 300;

uint64_t derive(uint64_t seed, uint64_t offset) { return seed * 10'000 + offset; }

nlohmann::json keypair_json(const crypto::KeyPair& kp) {
    return {{"public_key", to_hex(ByteView(kp.public_key.data(), kp.public_key.size()))},
            {"secret_key", to_hex(ByteView(kp.secret_key.data(), kp.secret_key.size()))}};
}

crypto::KeyPair keypair_from_json(const nlohmann::json& j) {
    crypto::KeyPair kp;
    kp.public_key = from_hex(j.at("public_key").get<std::string>());
    kp.secret_key = from_hex(j.at("secret_key").get<std::string>());
    return kp;
}

nlohmann::json role_json(const std::vector<crypto::KeyPair>& keys,
                         const std::vector<Certificate>& certs) {
    nlohmann::json arr = nlohmann::json::array();
    for (size_t i = 0; i < keys.size(); ++i) {
        nlohmann::json e = keypair_json(keys[i]);
        Bytes enc = certs[i].encode();
        e["certificate"] = to_hex(ByteView(enc.data(), enc.size()));
        arr.push_back(std::move(e));
    }
    return arr;
}

void role_from_json(const nlohmann::json& arr, std::vector<crypto::KeyPair>& keys,
                    std::vector<Certificate>& certs) {
    for (const auto& e : arr) {
        keys.push_back(keypair_from_json(e));
        Bytes enc = from_hex(e.at("certificate").get<std::string>());
        certs.push_back(Certificate::decode(ByteView(enc.data(), enc.size())));
    }
}

}  // namespace

IdentityBundle gen_identities(uint64_t seed, int peers, int orderers, int vehicles,
                              TimestampMs valid_from, TimestampMs valid_to) {
    IdentityBundle ids;
    ids.seed = seed;
    ids.ca_keys = crypto::keypair_from_seed(derive(seed, kCaOffset));
    CertificateAuthority ca(ids.ca_keys);
    auto issue_role = [&](uint64_t offset, int count, Role role,
                          std::vector<crypto::KeyPair>& keys, std::vector<Certificate>& certs) {
        for (int i = 0; i < count; ++i) {
            keys.push_back(crypto::keypair_from_seed(derive(seed, offset + i)));
            certs.push_back(ca.issue(keys.back().public_key, role, valid_from, valid_to));
        }
    };
    issue_role(kPeerOffset, peers, Role::Peer, ids.peer_keys, ids.peer_certs);
    issue_role(kOrdererOffset, orderers, Role::Orderer, ids.orderer_keys, ids.orderer_certs);
    issue_role(kVehicleOffset, vehicles, Role::Vehicle, ids.vehicle_keys, ids.vehicle_certs);
    return ids;
}

peer::CertDirectory IdentityBundle::directory() const {
    peer::CertDirectory dir;
    for (const auto& c : peer_certs) dir[c.subject] = c;
    for (const auto& c : orderer_certs) dir[c.subject] = c;
    for (const auto& c : vehicle_certs) dir[c.subject] = c;
    return dir;
}

void write_identities(const IdentityBundle& ids, const std::string& path) {
    nlohmann::ordered_json j;
    j["seed"] = ids.seed;
    j["ca"] = keypair_json(ids.ca_keys);
    j["peers"] = role_json(ids.peer_keys, ids.peer_certs);
    j["orderers"] = role_json(ids.orderer_keys, ids.orderer_certs);
    j["vehicles"] = role_json(ids.vehicle_keys, ids.vehicle_certs);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write identities file: " + path);
    out << j.dump(2) << "\n";
}

IdentityBundle read_identities(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read identities file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    IdentityBundle ids;
    ids.seed = j.at("seed").get<uint64_t>();
    ids.ca_keys = keypair_from_json(j.at("ca"));
    role_from_json(j.at("peers"), ids.peer_keys, ids.peer_certs);
    role_from_json(j.at("orderers"), ids.orderer_keys, ids.orderer_certs);
    role_from_json(j.at("vehicles"), ids.vehicle_keys, ids.vehicle_certs);
    return ids;
}

Cluster::Cluster(ClusterConfig cfg)
    : Cluster(cfg, gen_identities(cfg.identity_seed, cfg.peers, cfg.orderers, 16)) {}

Cluster::Cluster(ClusterConfig cfg, IdentityBundle ids)
    : cfg_(std::move(cfg)), ids_(std::move(ids)), sim_(cfg_.net) {
    directory_ = std::make_shared<peer::CertDirectory>(ids_.directory());
    for (int32_t i = 0; i < cfg_.peers; ++i) {
        peer::PeerConfig pc;
        pc.index = i;
        pc.zone = i < static_cast<int32_t>(cfg_.zones.size())
                      ? cfg_.zones[static_cast<size_t>(i)]
                      : "zone-" + std::to_string(i);
        pc.policy = cfg_.policy;
        pc.compute = cfg_.peer_compute;
        peers_.push_back(std::make_unique<peer::PeerNode>(
            pc, ids_.peer_keys[static_cast<size_t>(i)], ids_.ca_keys.public_key, directory_));
        sim_.add_node(net::NodeAddress::peer(i), peers_.back().get());
    }
    for (int32_t i = 0; i < cfg_.orderers; ++i) {
        ordering::OrdererConfig oc;
        oc.index = i;
        oc.cluster_size = cfg_.orderers;
        oc.peer_count = cfg_.peers;
        oc.cut = cfg_.cut;
        oc.compute = cfg_.orderer_compute;
        orderers_.push_back(std::make_unique<ordering::OrdererNode>(oc));
        sim_.add_node(net::NodeAddress::orderer(i), orderers_.back().get());
    }
}

vehicle::VehicleNode& Cluster::add_vehicle(vehicle::VehicleConfig vcfg) {
    size_t slot = vehicles_.size();
    if (slot >= ids_.vehicle_keys.size())
        throw std::runtime_error("identity bundle has no key for vehicle " +
                                 std::to_string(slot));
    vcfg.index = static_cast<int32_t>(slot);
    vcfg.peer_count = cfg_.peers;
    vcfg.orderer_count = cfg_.orderers;
    vehicles_.push_back(std::make_unique<vehicle::VehicleNode>(
        std::move(vcfg), ids_.vehicle_keys[slot], ids_.vehicle_certs[slot]));
    sim_.add_node(net::NodeAddress::vehicle(static_cast<int32_t>(slot)),
                  vehicles_.back().get());
    return *vehicles_.back();
}

void Cluster::boot() {
    for (auto& o : orderers_) o->boot();
    for (auto& v : vehicles_) v->boot();
}

int32_t Cluster::leader() const {
    for (size_t i = 0; i < orderers_.size(); ++i) {
        auto addr = net::NodeAddress::orderer(static_cast<int32_t>(i));
        if (!sim_.is_crashed(addr) && orderers_[i]->is_leader())
            return static_cast<int32_t>(i);
    }
    return -1;
}

bool Cluster::peers_converged() const {
    const Chain* ref = nullptr;
    for (size_t i = 0; i < peers_.size(); ++i) {
        if (sim_.is_crashed(net::NodeAddress::peer(static_cast<int32_t>(i)))) continue;
        const Chain& c = peers_[i]->chain();
        if (!ref) {
            ref = &c;
            continue;
        }
        if (c.size() != ref->size()) return false;
        if (!c.empty() && hash_header(c.back().header) != hash_header(ref->back().header))
            return false;
    }
    return true;
}

}  // namespace edgechain::cluster
