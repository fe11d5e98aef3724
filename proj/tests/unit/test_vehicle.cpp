#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>

#include "edgechain/cluster.hpp"

using namespace edgechain;

namespace {

struct Recorder : vehicle::Metrics {
    struct Done {
        int vehicle;
        uint32_t request;
        bool ok;
        TimestampMs began, finished;
        uint32_t attempts;
    };
    std::vector<Done> dones;
    std::map<Hash, int> note_count;  // tx id -> deliveries seen upward
    std::vector<road::EdgeId> reroute_edges;

    void on_request_done(int vehicle, uint32_t request, bool ok, TimestampMs began,
                         TimestampMs finished, uint32_t attempts) override {
        dones.push_back({vehicle, request, ok, began, finished, attempts});
    }
    void on_notification(int, const msg::Notification& note, TimestampMs) override {
        ++note_count[note.tx_id];
    }
    void on_reroute(int, const std::vector<road::NodeId>&, const std::vector<road::NodeId>&,
                    road::EdgeId edge, TimestampMs) override {
        reroute_edges.push_back(edge);
    }
};

cluster::ClusterConfig base_config(uint64_t seed) {
    cluster::ClusterConfig cfg;
    cfg.net.seed = seed;
    cfg.net.link = {5.0, 2.0, 0.0};
    return cfg;
}

std::vector<const Transaction*> valid_txs(const Chain& chain) {
    std::vector<const Transaction*> out;
    for (const auto& b : chain)
        for (size_t i = 0; i < b.transactions.size(); ++i)
            if (b.validity[i] == Validity::Valid) out.push_back(&b.transactions[i]);
    return out;
}

contracts::ContractCall report_call(const Pseudonym& reporter, contracts::GeoPoint gps,
                                    const std::string& zone) {
    contracts::IncidentReport rep;
    rep.reporter = reporter;
    rep.gps = gps;
    rep.kind = contracts::IncidentKind::Accident;
    rep.image_hash = crypto::sha256(Bytes{});
    rep.zone = zone;
    rep.reported_at = 1;
    return {"situation", "report", {rep.encode()}, {}};
}

}  // namespace

TEST_CASE("single mode vehicle completes its workload end to end") {
    Recorder rec;
    cluster::Cluster c(base_config(11));
    vehicle::VehicleConfig vc;
    vc.mode = vehicle::SubmitMode::Single;
    vc.home_peer = 0;
    vc.zone = "alpha";
    vc.request_count = 5;
    vc.payload_bytes = 2048;
    vc.metrics = &rec;
    auto& v = c.add_vehicle(vc);
    c.boot();

    REQUIRE(c.sim().run_until([&] { return v.done(); }, c.sim().now_ms() + 60'000));
    CHECK(v.completed() == 5);
    CHECK(v.failed() == 0);

    // every request: one success, one attempt, measurable latency
    REQUIRE(rec.dones.size() == 5);
    for (const auto& d : rec.dones) {
        CHECK(d.ok);
        CHECK(d.attempts == 1);
        CHECK(d.finished > d.began);
    }

    // all peers converge on the same 5 valid transactions
    REQUIRE(c.sim().run_until(
        [&] {
            return c.peers_converged() && valid_txs(c.peer(0).chain()).size() == 5;
        },
        c.sim().now_ms() + 10'000));
    for (size_t p = 0; p < 3; ++p) {
        auto txs = valid_txs(c.peer(p).chain());
        REQUIRE(txs.size() == 5);
        for (const auto* tx : txs) {
            CHECK(tx->creator == v.id());
            CHECK(tx->endorsements.size() == 1);  // single mode: home peer only
        }
    }
    CHECK(c.peer(0).state_hash() == c.peer(1).state_hash());
    CHECK(c.peer(1).state_hash() == c.peer(2).state_hash());

    // registered at the home peer only
    CHECK(c.peer(0).connected().size() == 1);
    CHECK(c.peer(1).connected().empty());
    CHECK(c.peer(2).connected().empty());
}

TEST_CASE("multiple mode registers everywhere and gathers three endorsements") {
    cluster::Cluster c(base_config(12));
    vehicle::VehicleConfig vc;
    vc.mode = vehicle::SubmitMode::Multiple;
    vc.home_peer = 0;
    vc.zone = "alpha";
    vc.request_count = 4;
    vc.payload_bytes = 1024;
    vc.report_fraction = 0.5;  // alternate update / report
    auto& v = c.add_vehicle(vc);
    c.boot();

    REQUIRE(c.sim().run_until([&] { return v.done(); }, c.sim().now_ms() + 60'000));
    CHECK(v.completed() == 4);
    CHECK(v.failed() == 0);
    for (size_t p = 0; p < 3; ++p) {
        REQUIRE(c.peer(p).connected().size() == 1);
        CHECK(c.peer(p).connected()[0] == v.id());
    }

    REQUIRE(c.sim().run_until([&] { return valid_txs(c.peer(0).chain()).size() == 4; },
                              c.sim().now_ms() + 10'000));
    auto txs = valid_txs(c.peer(0).chain());
    size_t reports = 0, updates = 0;
    for (const auto* tx : txs) {
        REQUIRE(tx->endorsements.size() == 3);
        std::set<Pseudonym> who;
        for (const auto& e : tx->endorsements) who.insert(e.peer);
        CHECK(who.size() == 3);  // three distinct peers
        if (tx->operation == "report") ++reports;
        if (tx->operation == "update") ++updates;
    }
    CHECK(reports == 2);
    CHECK(updates == 2);
}

TEST_CASE("notifications reach subscribed vehicles exactly once despite three senders") {
    Recorder sender_rec, receiver_rec;
    cluster::Cluster c(base_config(13));

    vehicle::VehicleConfig sender;
    sender.mode = vehicle::SubmitMode::Single;
    sender.home_peer = 0;
    sender.zone = "alpha";
    sender.request_count = 4;
    sender.payload_bytes = 512;
    sender.report_fraction = 0.75;  // 3 reports + 1 update
    sender.metrics = &sender_rec;
    auto& v0 = c.add_vehicle(sender);

    vehicle::VehicleConfig receiver;
    receiver.mode = vehicle::SubmitMode::Multiple;  // subscribed at all three peers
    receiver.home_peer = 1;
    receiver.zone = "beta";
    receiver.request_count = 0;
    receiver.metrics = &receiver_rec;
    auto& v1 = c.add_vehicle(receiver);

    c.boot();
    REQUIRE(c.sim().run_until([&] { return v0.done() && v1.notifications_seen() >= 3; },
                              c.sim().now_ms() + 60'000));
    c.sim().run_for(2'000);  // let every duplicate arrive

    // only the 3 reports notify; the update is silent
    CHECK(v1.notifications_seen() == 3);
    REQUIRE(receiver_rec.note_count.size() == 3);
    for (const auto& [id, n] : receiver_rec.note_count) CHECK(n == 1);

    // the sender hears its own reports through its home peer, once each
    CHECK(v0.notifications_seen() == 3);
    for (const auto& [id, n] : sender_rec.note_count) CHECK(n == 1);
}

TEST_CASE("a dead peer is suspected after one endorse timeout and skipped afterwards") {
    Recorder rec;
    cluster::Cluster c(base_config(14));
    vehicle::VehicleConfig vc;
    vc.mode = vehicle::SubmitMode::Multiple;
    vc.home_peer = 0;
    vc.zone = "alpha";
    vc.request_count = 6;
    vc.payload_bytes = 1024;
    vc.metrics = &rec;
    auto& v = c.add_vehicle(vc);
    c.boot();

    REQUIRE(c.sim().run_until([&] { return v.completed() >= 2; }, c.sim().now_ms() + 60'000));
    c.sim().crash(net::NodeAddress::peer(2));

    REQUIRE(c.sim().run_until([&] { return v.done(); }, c.sim().now_ms() + 120'000));
    CHECK(v.completed() == 6);
    CHECK(v.failed() == 0);

    REQUIRE(c.sim().run_until([&] { return valid_txs(c.peer(0).chain()).size() == 6; },
                              c.sim().now_ms() + 10'000));
    auto txs = valid_txs(c.peer(0).chain());
    REQUIRE(txs.size() == 6);
    CHECK(txs[0]->endorsements.size() == 3);
    CHECK(txs[1]->endorsements.size() == 3);
    for (size_t i = 2; i < 6; ++i) CHECK(txs[i]->endorsements.size() == 2);

    // request 2 paid the endorse timeout; the rest skipped the suspect
    REQUIRE(rec.dones.size() == 6);
    CHECK(rec.dones[2].finished - rec.dones[2].began >= 1'500);
    for (size_t i = 3; i < 6; ++i)
        CHECK(rec.dones[i].finished - rec.dones[i].began < 1'500);

    // the restarted peer catches up from the delivery resend path
    c.sim().restart(net::NodeAddress::peer(2));
    REQUIRE(c.sim().run_until(
        [&] { return c.peer(2).chain().size() == c.peer(0).chain().size(); },
        c.sim().now_ms() + 10'000));
    CHECK(c.peer(2).state_hash() == c.peer(0).state_hash());
}

TEST_CASE("zone-head contention resolves by fresh-proposal retries") {
    Recorder rec;
    cluster::Cluster c(base_config(21));
    for (int i = 0; i < 2; ++i) {
        vehicle::VehicleConfig vc;
        vc.mode = vehicle::SubmitMode::Single;
        vc.home_peer = 0;
        vc.zone = "alpha";  // same zone: every report touches the same head key
        vc.request_count = 3;
        vc.payload_bytes = 512;
        vc.metrics = &rec;
        c.add_vehicle(vc);
    }
    c.boot();

    REQUIRE(c.sim().run_until([&] { return c.vehicle(0).done() && c.vehicle(1).done(); },
                              c.sim().now_ms() + 120'000));
    CHECK(c.vehicle(0).completed() == 3);
    CHECK(c.vehicle(1).completed() == 3);
    CHECK(c.vehicle(0).failed() == 0);
    CHECK(c.vehicle(1).failed() == 0);

    REQUIRE(c.sim().run_until([&] { return valid_txs(c.peer(0).chain()).size() == 6; },
                              c.sim().now_ms() + 10'000));
    CHECK(c.peers_converged());

    // at least one request needed a second snapshot (deterministic per seed)
    uint32_t max_attempts = 0;
    for (const auto& d : rec.dones) max_attempts = std::max(max_attempts, d.attempts);
    CHECK(max_attempts > 1);
}

TEST_CASE("zone query returns the committed reports for that zone") {
    cluster::Cluster c(base_config(31));
    vehicle::VehicleConfig writer;
    writer.mode = vehicle::SubmitMode::Single;
    writer.home_peer = 0;
    writer.zone = "alpha";
    writer.request_count = 2;
    writer.payload_bytes = 256;
    auto& v0 = c.add_vehicle(writer);

    vehicle::VehicleConfig reader;
    reader.mode = vehicle::SubmitMode::Single;
    reader.home_peer = 1;  // asks a different peer than the writer used
    reader.zone = "beta";
    reader.request_count = 0;
    auto& v1 = c.add_vehicle(reader);

    c.boot();
    REQUIRE(c.sim().run_until(
        [&] { return v0.done() && valid_txs(c.peer(1).chain()).size() == 2; },
        c.sim().now_ms() + 60'000));

    v1.start_zone_query("alpha");
    REQUIRE(c.sim().run_until([&] { return v1.queries_done() == 1; },
                              c.sim().now_ms() + 5'000));
    REQUIRE(v1.last_query_reports().size() == 2);
    for (const auto& rep : v1.last_query_reports()) {
        CHECK(rep.zone == "alpha");
        CHECK(rep.reporter == v0.id());
    }

    v1.start_zone_query("nowhere");
    REQUIRE(c.sim().run_until([&] { return v1.queries_done() == 2; },
                              c.sim().now_ms() + 5'000));
    CHECK(v1.last_query_reports().empty());
}

TEST_CASE("scripted calls run verbatim") {
    cluster::Cluster c(base_config(41));
    auto id0 = c.identities().vehicle_id(0);

    contracts::VehicleRecord rec;
    rec.pseudonym = id0;
    rec.owners = {id0};
    rec.gps = {48.5, 11.5};
    rec.connected_edge = "alpha";
    contracts::ContractCall update{"vehicle", "update", {rec.encode()}, {}};

    vehicle::VehicleConfig vc;
    vc.mode = vehicle::SubmitMode::Single;
    vc.home_peer = 0;
    vc.zone = "alpha";
    vc.scripted = {update, report_call(id0, {48.01, 11.0}, "alpha")};
    auto& v = c.add_vehicle(vc);
    c.boot();

    REQUIRE(c.sim().run_until([&] { return v.done(); }, c.sim().now_ms() + 60'000));
    CHECK(v.completed() == 2);
    REQUIRE(c.sim().run_until([&] { return valid_txs(c.peer(0).chain()).size() == 2; },
                              c.sim().now_ms() + 10'000));
    auto txs = valid_txs(c.peer(0).chain());
    CHECK(txs[0]->contract == "vehicle");
    CHECK(txs[0]->operation == "update");
    CHECK(txs[1]->contract == "situation");
    CHECK(txs[1]->operation == "report");

    auto stored = c.peer(0).world().get(contracts::key_vehicle(id0));
    REQUIRE(stored.has_value());
    auto decoded = contracts::VehicleRecord::decode(
        ByteView(stored->value.data(), stored->value.size()));
    CHECK(decoded.gps.lat == doctest::Approx(48.5));
}

TEST_CASE("incident notifications replan the route once, off-route reports do not") {
    Recorder rec;
    cluster::Cluster c(base_config(51));
    road::RoadGraph grid = road::make_grid(5, 4, {"north", "center", "south"});

    auto id0 = c.identities().vehicle_id(0);
    road::EdgeId on_route = road::EdgeId::of(2, 3);     // lies on 0 -> 19's first leg
    road::EdgeId off_route = road::EdgeId::of(15, 16);  // bottom row, far from any leg

    vehicle::VehicleConfig reporter;
    reporter.mode = vehicle::SubmitMode::Single;
    reporter.home_peer = 0;
    reporter.zone = "center";
    reporter.scripted = {report_call(id0, road::edge_midpoint(grid, on_route), "center"),
                         report_call(id0, road::edge_midpoint(grid, off_route), "center")};
    auto& v0 = c.add_vehicle(reporter);

    vehicle::VehicleConfig driver;
    driver.mode = vehicle::SubmitMode::Multiple;
    driver.home_peer = 1;
    driver.zone = "center";
    driver.request_count = 0;
    driver.graph = grid;
    driver.position = 0;
    driver.destination = 19;
    driver.metrics = &rec;
    auto& v1 = c.add_vehicle(driver);

    const std::vector<road::NodeId> initial{0, 1, 2, 3, 4, 9, 14, 19};
    CHECK(v1.route() == initial);
    REQUIRE(road::route_uses(v1.route(), on_route));
    REQUIRE(!road::route_uses(v1.route(), off_route));

    c.boot();
    REQUIRE(c.sim().run_until([&] { return v0.done() && v1.notifications_seen() >= 2; },
                              c.sim().now_ms() + 120'000));
    c.sim().run_for(2'000);

    CHECK(v1.reroutes() == 1);
    REQUIRE(rec.reroute_edges.size() == 1);
    CHECK(rec.reroute_edges[0] == on_route);
    CHECK(!road::route_uses(v1.route(), on_route));
    CHECK(v1.route().front() == 0);
    CHECK(v1.route().back() == 19);

    // the chosen detour must match the independent exhaustive search
    road::RoadGraph expect = grid;
    expect.set_penalized(on_route, true);
    CHECK(v1.route() == road::plan_route(expect, 0, 19));
    CHECK(v1.route() == road::plan_route_exhaustive(expect, 0, 19));

    // the off-route report was heard but changed nothing
    REQUIRE(v1.graph() != nullptr);
    CHECK(v1.graph()->penalized_edges().size() == 1);
    CHECK(!v1.graph()->penalized(off_route));
}
