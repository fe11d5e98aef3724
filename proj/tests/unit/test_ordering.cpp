#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "edgechain/ordering.hpp"
#include "edgechain/peer.hpp"

using namespace edgechain;
using namespace edgechain::ordering;

namespace {

msg::LogEntry envelope(Transaction tx, TimestampMs at = 0) {
    msg::LogEntry e;
    e.kind = msg::EntryKind::Envelope;
    e.tx = std::move(tx);
    e.received_at = at;
    return e;
}

msg::LogEntry ttc() {
    msg::LogEntry e;
    e.kind = msg::EntryKind::TimeToCut;
    return e;
}

Transaction payload_tx(size_t payload_bytes, uint8_t tag) {
    Transaction tx;
    tx.contract = "situation";
    tx.operation = "report";
    tx.payload.assign(payload_bytes, tag);
    tx.created_at = tag;
    return tx;
}

}  // namespace

TEST_CASE("cutter flushes at the message-count limit") {
    BlockCutter cut(BlockCutPolicy{3, 512 * 1024, 250.0});
    CHECK(cut.feed(envelope(payload_tx(10, 1))).empty());
    CHECK(cut.feed(envelope(payload_tx(10, 2))).empty());
    auto done = cut.feed(envelope(payload_tx(10, 3)));
    REQUIRE(done.size() == 1);
    CHECK(done[0].size() == 3);
    CHECK(cut.pending_count() == 0);
}

TEST_CASE("cutter splits three 200 KiB payloads two then one") {
    BlockCutter cut({10, 512 * 1024, 250.0});
    CHECK(cut.feed(envelope(payload_tx(200 * 1024, 1))).empty());
    CHECK(cut.feed(envelope(payload_tx(200 * 1024, 2))).empty());
    auto done = cut.feed(envelope(payload_tx(200 * 1024, 3)));
    REQUIRE(done.size() == 1);  // first two spill, third starts a new batch
    CHECK(done[0].size() == 2);
    CHECK(cut.pending_count() == 1);
    auto rest = cut.feed(ttc());
    REQUIRE(rest.size() == 1);
    CHECK(rest[0].size() == 1);
    CHECK(rest[0][0].payload[0] == 3);
}

TEST_CASE("time-to-cut on an empty batch cuts nothing") {
    BlockCutter cut({10, 512 * 1024, 250.0});
    CHECK(cut.feed(ttc()).empty());
    CHECK(cut.feed(envelope(payload_tx(10, 1))).empty());
    CHECK(cut.feed(ttc()).size() == 1);
    CHECK(cut.feed(ttc()).empty());  // nothing left
}

TEST_CASE("an oversized transaction is admitted alone and flushed by the next cut") {
    BlockCutter cut({10, 1024, 250.0});
    CHECK(cut.feed(envelope(payload_tx(4096, 1))).empty());
    auto done = cut.feed(envelope(payload_tx(10, 2)));
    REQUIRE(done.size() == 1);
    CHECK(done[0].size() == 1);  // the giant went out on its own
    CHECK(cut.pending_count() == 1);
}

// ---------------------------------------------------------------------------
// Full ordering service + committing peers over the simulated network.

namespace {

constexpr TimestampMs kFarFuture = 86'400'000;

struct Env {
    CertificateAuthority ca;
    std::vector<crypto::KeyPair> peer_keys;
    std::vector<crypto::KeyPair> veh_keys;
    std::shared_ptr<peer::CertDirectory> dir = std::make_shared<peer::CertDirectory>();

    Env() : ca(crypto::keypair_from_seed(uint64_t{9000})) {
        for (uint64_t i = 0; i < 3; ++i) {
            peer_keys.push_back(crypto::keypair_from_seed(100 + i));
            veh_keys.push_back(crypto::keypair_from_seed(200 + i));
            add(peer_keys.back(), Role::Peer);
            add(veh_keys.back(), Role::Vehicle);
        }
    }
    void add(const crypto::KeyPair& kp, Role role) {
        Certificate c = ca.issue(kp.public_key, role, 0, kFarFuture);
        (*dir)[c.subject] = c;
    }
    Pseudonym veh_id(int i) const { return Pseudonym::of(veh_keys[i].public_key); }
};

// Valid endorsed transaction: an accident report into `zone`.
Transaction report_tx(const Env& env, int veh, const std::string& zone, TimestampMs created_at,
                      size_t image_len = 256) {
    Bytes image(image_len, static_cast<uint8_t>(created_at % 251));
    contracts::IncidentReport rep;
    rep.reporter = env.veh_id(veh);
    rep.gps = {48.1, 11.5};
    rep.kind = contracts::IncidentKind::Accident;
    rep.image_hash = crypto::sha256(image);
    rep.zone = zone;
    rep.reported_at = created_at;

    Transaction tx;
    tx.creator = rep.reporter;
    tx.contract = "situation";
    tx.operation = "report";
    tx.args = {rep.encode()};
    tx.payload = image;
    tx.created_at = created_at;
    Hash phash = tx.proposal_hash();

    WorldState empty;
    contracts::ExecResult exec = contracts::execute(
        {tx.contract, tx.operation, tx.args, tx.payload}, tx.creator, phash, empty);
    REQUIRE(exec.ok());
    tx.rw_set = exec.rw_set;

    Endorsement e;
    e.peer = Pseudonym::of(env.peer_keys[0].public_key);
    e.proposal_hash = phash;
    e.rw_set_hash = tx.rw_set.hash();
    Bytes payload = e.signing_payload();
    e.signature = crypto::sign(env.peer_keys[0].secret_key,
                               ByteView(payload.data(), payload.size()));
    tx.endorsements.push_back(std::move(e));
    tx.client_signature = crypto::sign(env.veh_keys[veh].secret_key,
                                       ByteView(phash.bytes.data(), 32));
    return tx;
}

struct Client : net::Node {
    std::vector<msg::SubmitResult> results;
    void on_message(const msg::Message& m, net::NodeAddress, size_t) override {
        if (const auto* r = std::get_if<msg::SubmitResult>(&m)) results.push_back(*r);
    }
};

struct Net {
    Env env;
    net::Simulation sim;
    std::vector<std::unique_ptr<OrdererNode>> ords;
    std::vector<std::unique_ptr<peer::PeerNode>> peers;
    Client client;

    explicit Net(uint64_t seed = 1, net::LinkModel link = net::LinkModel{5.0, 2.0, 0.0})
        : sim(net::SimConfig{link, seed, net::ClockMode::Virtual}) {
        for (int32_t i = 0; i < 3; ++i) {
            OrdererConfig oc;
            oc.index = i;
            ords.push_back(std::make_unique<OrdererNode>(oc));
            sim.add_node(net::NodeAddress::orderer(i), ords.back().get());
        }
        for (int32_t i = 0; i < 3; ++i) {
            peer::PeerConfig pc;
            pc.index = i;
            pc.zone = "zone-" + std::to_string(i);
            peers.push_back(std::make_unique<peer::PeerNode>(pc, env.peer_keys[i],
                                                             env.ca.public_key(), env.dir));
            sim.add_node(net::NodeAddress::peer(i), peers.back().get());
        }
        sim.add_node(net::NodeAddress::vehicle(0), &client);
        for (auto& o : ords) o->boot();
    }

    int leader(int exclude = -1) const {
        for (int i = 0; i < 3; ++i)
            if (i != exclude && !sim.is_crashed(net::NodeAddress::orderer(i)) &&
                ords[i]->is_leader())
                return i;
        return -1;
    }
    int wait_leader(int exclude = -1, TimestampMs deadline = 3000) {
        REQUIRE(sim.run_until([&] { return leader(exclude) >= 0; },
                              sim.now_ms() + deadline));
        return leader(exclude);
    }

    // One submit attempt; false on response timeout (lossy networks).
    bool submit_once(const Transaction& tx, int to, msg::SubmitResult& out,
                     TimestampMs wait = 1000) {
        size_t before = client.results.size();
        sim.send(client.address(), net::NodeAddress::orderer(to), msg::SubmitEnvelope{tx});
        if (!sim.run_until([&] { return client.results.size() > before; },
                           sim.now_ms() + wait))
            return false;
        out = client.results.back();
        return true;
    }

    void submit(const Transaction& tx) {
        int target = 0;
        for (int attempt = 0; attempt < 30; ++attempt) {
            msg::SubmitResult r;
            if (!submit_once(tx, target, r, 400)) continue;  // lost: try again
            if (r.status == msg::SubmitStatus::Accepted) return;
            if (r.status == msg::SubmitStatus::Redirect && r.leader_hint >= 0) {
                target = r.leader_hint;
            } else {
                sim.run_for(150);
                target = (target + 1) % 3;
            }
        }
        FAIL("submission never accepted");
    }

    size_t valid_txs(int p) const {
        size_t n = 0;
        for (const Block& b : peers[p]->chain())
            for (Validity v : b.validity)
                if (v == Validity::Valid) ++n;
        return n;
    }
    bool all_peers_have(size_t n) const {
        return valid_txs(0) >= n && valid_txs(1) >= n && valid_txs(2) >= n;
    }
};

std::vector<Hash> valid_hashes(const Chain& chain) {
    std::vector<Hash> out;
    for (const Block& b : chain)
        for (uint32_t i = 0; i < b.transactions.size(); ++i)
            if (b.validity[i] == Validity::Valid)
                out.push_back(b.transactions[i].proposal_hash());
    return out;
}

}  // namespace

TEST_CASE("three orderers elect exactly one leader and followers learn it") {
    Net net;
    int l = net.wait_leader();
    net.sim.run_for(150);  // a few heartbeat rounds
    int count = 0;
    for (int i = 0; i < 3; ++i)
        if (net.ords[i]->is_leader()) ++count;
    CHECK(count == 1);
    for (int i = 0; i < 3; ++i) {
        CHECK(net.ords[i]->core().current_term() == net.ords[l]->core().current_term());
        CHECK(net.ords[i]->core().leader_hint() == l);
    }
}

TEST_CASE("a follower redirects, the leader orders, every peer commits the block") {
    Net net;
    int l = net.wait_leader();
    int follower = (l + 1) % 3;

    Transaction tx = report_tx(net.env, 0, "z-main", 77);
    msg::SubmitResult r;
    REQUIRE(net.submit_once(tx, follower, r));
    CHECK(r.status == msg::SubmitStatus::Redirect);
    CHECK(r.leader_hint == l);
    CHECK(net.ords[follower]->stats().submits_redirected == 1);

    REQUIRE(net.submit_once(tx, r.leader_hint, r));
    CHECK(r.status == msg::SubmitStatus::Accepted);
    CHECK(r.proposal_hash == tx.proposal_hash());

    REQUIRE(net.sim.run_until([&] { return net.all_peers_have(1); },
                              net.sim.now_ms() + 2000));
    net.sim.run_for(300);  // let follower orderers catch up on commit

    for (int p = 0; p < 3; ++p) {
        REQUIRE(net.peers[p]->chain().size() == 1);
        CHECK(net.peers[p]->chain()[0].validity == std::vector<Validity>{Validity::Valid});
        CHECK(net.peers[p]->world().get(contracts::key_zone_head("z-main")).has_value());
        CHECK(net.peers[p]->stats().blocks_committed == 1);
    }
    CHECK(net.peers[0]->state_hash() == net.peers[1]->state_hash());
    CHECK(net.peers[0]->state_hash() == net.peers[2]->state_hash());

    // Every orderer derives the identical block from its committed log.
    for (int o = 0; o < 3; ++o) {
        REQUIRE(net.ords[o]->derived_chain().size() == 1);
        CHECK(hash_header(net.ords[o]->derived_chain()[0].header) ==
              hash_header(net.peers[0]->chain()[0].header));
    }
    CHECK(net.ords[l]->stats().submits_accepted == 1);
    CHECK(net.ords[l]->stats().blocks_cut == 1);
}

TEST_CASE("a burst commits exactly once, in submission order, identically everywhere") {
    Net net;
    net.wait_leader();

    std::vector<Transaction> txs;
    for (int i = 0; i < 12; ++i)
        txs.push_back(report_tx(net.env, i % 3, "zone-" + std::to_string(i), 100 + i));
    for (const Transaction& tx : txs) net.submit(tx);

    REQUIRE(net.sim.run_until([&] { return net.all_peers_have(12); },
                              net.sim.now_ms() + 4000));

    Bytes chain0 = encode_chain(net.peers[0]->chain());
    CHECK(chain0 == encode_chain(net.peers[1]->chain()));
    CHECK(chain0 == encode_chain(net.peers[2]->chain()));

    std::vector<Hash> want;
    for (const Transaction& tx : txs) want.push_back(tx.proposal_hash());
    CHECK(valid_hashes(net.peers[0]->chain()) == want);

    const Chain& chain = net.peers[0]->chain();
    CHECK(chain.size() >= 2);  // 12 txs cannot fit one 10-tx block
    for (const Block& b : chain) CHECK(b.transactions.size() <= 10);
    CHECK(net.peers[0]->stats().blocks_committed == chain.size());
}

TEST_CASE("message loss delays but does not break exactly-once delivery") {
    Net net(7, net::LinkModel{5.0, 2.0, 0.08});
    net.wait_leader(-1, 6000);

    std::vector<Transaction> txs;
    for (int i = 0; i < 5; ++i)
        txs.push_back(report_tx(net.env, i % 3, "lz-" + std::to_string(i), 500 + i));
    for (const Transaction& tx : txs) net.submit(tx);

    REQUIRE(net.sim.run_until([&] { return net.all_peers_have(5); },
                              net.sim.now_ms() + 10000));
    net.sim.run_for(1200);  // outstanding resends settle

    Bytes chain0 = encode_chain(net.peers[0]->chain());
    CHECK(chain0 == encode_chain(net.peers[1]->chain()));
    CHECK(chain0 == encode_chain(net.peers[2]->chain()));

    // Duplicated submissions may commit again as conflict-invalid, but each
    // proposal is valid exactly once.
    std::vector<Hash> got = valid_hashes(net.peers[0]->chain());
    std::sort(got.begin(), got.end());
    std::vector<Hash> want;
    for (const Transaction& tx : txs) want.push_back(tx.proposal_hash());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
    CHECK(net.sim.stats().dropped_loss > 0);
}

TEST_CASE("leader crash: a new leader takes over without losing commits") {
    Net net(3);
    int l1 = net.wait_leader();

    net.submit(report_tx(net.env, 0, "pre-a", 10));
    net.submit(report_tx(net.env, 1, "pre-b", 11));
    REQUIRE(net.sim.run_until([&] { return net.all_peers_have(2); },
                              net.sim.now_ms() + 3000));
    size_t committed_blocks = net.peers[0]->chain().size();
    Hash frozen_tip = hash_header(net.peers[0]->chain().back().header);

    net.sim.crash(net::NodeAddress::orderer(l1));
    int l2 = net.wait_leader(l1);
    CHECK(l2 != l1);

    net.submit(report_tx(net.env, 2, "post-a", 20));
    net.submit(report_tx(net.env, 0, "post-b", 21));
    REQUIRE(net.sim.run_until([&] { return net.all_peers_have(4); },
                              net.sim.now_ms() + 4000));

    Bytes chain0 = encode_chain(net.peers[0]->chain());
    CHECK(chain0 == encode_chain(net.peers[1]->chain()));
    CHECK(chain0 == encode_chain(net.peers[2]->chain()));
    // The pre-crash prefix is untouched.
    CHECK(hash_header(net.peers[0]->chain()[committed_blocks - 1].header) == frozen_tip);

    // The crashed orderer rejoins as a follower and re-derives the same chain.
    net.sim.restart(net::NodeAddress::orderer(l1));
    REQUIRE(net.sim.run_until(
        [&] {
            return net.ords[l1]->derived_chain().size() == net.peers[0]->chain().size();
        },
        net.sim.now_ms() + 3000));
    CHECK(!net.ords[l1]->is_leader());
    CHECK(hash_header(net.ords[l1]->derived_chain().back().header) ==
          hash_header(net.peers[0]->chain().back().header));
}
