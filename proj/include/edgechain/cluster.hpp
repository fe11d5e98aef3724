#pragma once

#include <memory>
#include <string>
#include <vector>

#include "edgechain/ordering.hpp"
#include "edgechain/peer.hpp"
#include "edgechain/vehicle.hpp"

namespace edgechain::cluster {

/// Deterministic identity material for a whole deployment: one CA plus
/// keys and certificates for every peer, orderer and vehicle. The same
/// seed always yields the same bundle, so separate processes agree.
struct IdentityBundle {
    uint64_t seed = 0;
    crypto::KeyPair ca_keys;
    std::vector<crypto::KeyPair> peer_keys;
    std::vector<Certificate> peer_certs;
    std::vector<crypto::KeyPair> orderer_keys;
    std::vector<Certificate> orderer_certs;
    std::vector<crypto::KeyPair> vehicle_keys;
    std::vector<Certificate> vehicle_certs;

    peer::CertDirectory directory() const;
    const Bytes& ca_public_key() const { return ca_keys.public_key; }
    Pseudonym peer_id(size_t i) const { return Pseudonym::of(peer_keys[i].public_key); }
    Pseudonym vehicle_id(size_t i) const { return Pseudonym::of(vehicle_keys[i].public_key); }
};

IdentityBundle gen_identities(uint64_t seed, int peers, int orderers, int vehicles,
                              TimestampMs valid_from = 0,
                              TimestampMs valid_to = 86'400'000);

/// JSON on disk; hex-encoded key material, certificates as hex of their
/// canonical encoding. Round-trips exactly.
void write_identities(const IdentityBundle& ids, const std::string& path);
IdentityBundle read_identities(const std::string& path);

struct ClusterConfig {
    int32_t peers = 3;
    int32_t orderers = 3;
    uint64_t identity_seed = 42;
    net::SimConfig net;
    ordering::BlockCutPolicy cut;
    peer::EndorsementPolicy policy;
    net::ComputeModel peer_compute;
    net::ComputeModel orderer_compute;
    std::vector<std::string> zones;  // defaults to zone-<i>
};

/// Owns the simulation and every node of one deployment. Vehicles are
/// added after construction (each one consumes the next vehicle identity
/// from the bundle) and boot() starts everything.
class Cluster {
public:
    explicit Cluster(ClusterConfig cfg);
    Cluster(ClusterConfig cfg, IdentityBundle ids);

    Cluster(const Cluster&) = delete;
    Cluster& operator=(const Cluster&) = delete;

    vehicle::VehicleNode& add_vehicle(vehicle::VehicleConfig vcfg);

    /// Boots orderers then vehicles. Call after all add_vehicle calls.
    void boot();

    net::Simulation& sim() { return sim_; }
    const ClusterConfig& config() const { return cfg_; }
    const IdentityBundle& identities() const { return ids_; }
    peer::PeerNode& peer(size_t i) { return *peers_[i]; }
    ordering::OrdererNode& orderer(size_t i) { return *orderers_[i]; }
    vehicle::VehicleNode& vehicle(size_t i) { return *vehicles_[i]; }
    size_t vehicle_count() const { return vehicles_.size(); }

    /// Index of the current Raft leader among live orderers, or -1.
    int32_t leader() const;

    /// True when every live peer chain has the same height and tip hash.
    bool peers_converged() const;

private:
    ClusterConfig cfg_;
    IdentityBundle ids_;
    net::Simulation sim_;
    std::shared_ptr<peer::CertDirectory> directory_;
    std::vector<std::unique_ptr<peer::PeerNode>> peers_;
    std::vector<std::unique_ptr<ordering::OrdererNode>> orderers_;
    std::vector<std::unique_ptr<vehicle::VehicleNode>> vehicles_;
};

}  // namespace edgechain::cluster
