#include "edgechain/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace edgechain::bench {

namespace {

double wall_seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Collects per-request lifecycles keyed by proposal hash. A retried
/// request re-begins under a fresh hash, so the hash seen in commit
/// evidence always has a begin mark.
struct BenchCollector : vehicle::Metrics {
    struct DoneMark {
        bool ok = false;
        TimestampMs began = 0, finished = 0;
    };
    std::map<Hash, TimestampMs> begin_by_hash;
    std::map<Hash, TimestampMs> note_by_hash;  // receiver side, first arrival
    std::vector<DoneMark> dones;
    std::map<std::pair<int, uint32_t>, Hash> last_hash;  // (vehicle, request)
    std::set<Hash> success_hashes;
    TimestampMs first_begin = -1;
    TimestampMs last_success = -1;
    int note_vehicle = -1;  // only this vehicle's notifications are recorded

    void on_request_begin(int vehicle, uint32_t request, const Hash& phash,
                          TimestampMs at) override {
        begin_by_hash[phash] = at;
        last_hash[{vehicle, request}] = phash;
        if (first_begin < 0) first_begin = at;
    }
    void on_request_done(int vehicle, uint32_t request, bool ok, TimestampMs began,
                         TimestampMs finished, uint32_t) override {
        dones.push_back({ok, began, finished});
        if (ok) {
            last_success = std::max(last_success, finished);
            success_hashes.insert(last_hash[{vehicle, request}]);
        }
    }
    void on_notification(int vehicle, const msg::Notification& note, TimestampMs at) override {
        if (vehicle != note_vehicle) return;
        note_by_hash.emplace(note.proposal_hash, at);  // keep the earliest
    }
};

cluster::ClusterConfig cluster_config(const BenchmarkConfig& cfg) {
    cluster::ClusterConfig c;
    c.peers = cfg.peers;
    c.orderers = cfg.orderers;
    c.identity_seed = cfg.identity_seed;
    c.net.seed = cfg.seed;
    c.net.link = cfg.link;
    c.net.clock = cfg.clock;
    return c;
}

size_t count_valid(const Chain& chain) {
    size_t n = 0;
    for (const auto& b : chain)
        for (auto v : b.validity) n += v == Validity::Valid;
    return n;
}

std::set<Hash> valid_proposal_hashes(const Chain& chain) {
    std::set<Hash> out;
    for (const auto& b : chain)
        for (size_t i = 0; i < b.transactions.size(); ++i)
            if (b.validity[i] == Validity::Valid)
                out.insert(b.transactions[i].proposal_hash());
    return out;
}

int fanout_of(vehicle::SubmitMode mode, int peers) {
    return mode == vehicle::SubmitMode::Multiple ? peers : 1;
}

std::string cell_name(vehicle::SubmitMode mode, int payload_kib) {
    return std::string(vehicle::submit_mode_name(mode)) + "/" +
           std::to_string(payload_kib) + "KiB";
}

// Deadline that stays generous even for the big real-clock cells.
TimestampMs run_deadline(const net::Simulation& sim, uint32_t total_requests) {
    return sim.now_ms() + 120'000 + static_cast<TimestampMs>(total_requests) * 8'000;
}

MetricsRow throughput_cell(const BenchmarkConfig& cfg, const cluster::IdentityBundle& ids,
                           vehicle::SubmitMode mode, int payload_kib) {
    auto t0 = std::chrono::steady_clock::now();
    BenchCollector collect;
    cluster::Cluster c(cluster_config(cfg), ids);
    for (int i = 0; i < cfg.vehicles; ++i) {
        vehicle::VehicleConfig vc;
        vc.mode = mode;
        vc.home_peer = i % cfg.peers;
        vc.zone = "zone-" + std::to_string(vc.home_peer);
        vc.request_count = cfg.requests_per_vehicle;
        vc.payload_bytes = static_cast<size_t>(payload_kib) * 1024;
        vc.report_fraction = cfg.report_fraction;
        vc.metrics = &collect;
        c.add_vehicle(vc);
    }
    c.boot();

    const uint32_t total = cfg.requests_per_vehicle * static_cast<uint32_t>(cfg.vehicles);
    auto all_done = [&] {
        for (size_t i = 0; i < c.vehicle_count(); ++i)
            if (!c.vehicle(i).done()) return false;
        return true;
    };
    if (!c.sim().run_until(all_done, run_deadline(c.sim(), total)))
        throw BenchAborted("cell " + cell_name(mode, payload_kib) + " stalled");

    uint32_t successes = 0, failures = 0;
    for (size_t i = 0; i < c.vehicle_count(); ++i) {
        successes += c.vehicle(i).completed();
        failures += c.vehicle(i).failed();
    }
    if (successes == 0)
        throw BenchAborted("cell " + cell_name(mode, payload_kib) + ": no request succeeded");
    if (failures * 100 > total)
        throw BenchAborted("cell " + cell_name(mode, payload_kib) + ": failure rate " +
                           std::to_string(failures) + "/" + std::to_string(total) +
                           " above 1%");

    // Settle, then cross-check the ledger against the client-side count.
    bool settled = c.sim().run_until(
        [&] {
            if (!c.peers_converged()) return false;
            return count_valid(c.peer(0).chain()) == successes;
        },
        c.sim().now_ms() + 30'000);
    if (cfg.link.loss_rate == 0.0 && !settled)
        throw BenchAborted("cell " + cell_name(mode, payload_kib) +
                           ": ledger disagrees with client accounting (" +
                           std::to_string(count_valid(c.peer(0).chain())) + " committed vs " +
                           std::to_string(successes) + " reported)");

    double span_s =
        static_cast<double>(collect.last_success - collect.first_begin) / 1000.0;
    if (span_s <= 0)
        throw BenchAborted("cell " + cell_name(mode, payload_kib) + ": empty time span");

    const int fanout = fanout_of(mode, cfg.peers);
    double handled = static_cast<double>(successes) * fanout;
    MetricsRow row;
    row.mode = vehicle::submit_mode_name(mode);
    row.payload_kib = payload_kib;
    row.tx_per_s = handled / span_s;
    row.kib_per_s = row.tx_per_s * payload_kib;
    row.s_per_tx = 1.0 / row.tx_per_s;
    row.failures = failures;
    row.successes = successes;
    row.wall_time_s = wall_seconds_since(t0);
    return row;
}

MetricsRow notify_cell(const BenchmarkConfig& cfg, const cluster::IdentityBundle& ids,
                       vehicle::SubmitMode mode, int payload_kib) {
    auto t0 = std::chrono::steady_clock::now();
    BenchCollector collect;
    collect.note_vehicle = 1;  // only the dedicated receiver counts
    cluster::Cluster c(cluster_config(cfg), ids);

    vehicle::VehicleConfig sender;
    sender.mode = mode;
    sender.home_peer = 0;
    sender.zone = "zone-0";
    sender.request_count = cfg.notify_requests;
    sender.payload_bytes = static_cast<size_t>(payload_kib) * 1024;
    sender.report_fraction = 1.0;  // only reports produce notifications
    sender.metrics = &collect;
    auto& a = c.add_vehicle(sender);

    vehicle::VehicleConfig receiver;
    receiver.mode = mode;  // single: home peer only; multiple: everywhere
    receiver.home_peer = 1 % cfg.peers;
    receiver.zone = "zone-1";
    receiver.request_count = 0;
    receiver.metrics = &collect;
    c.add_vehicle(receiver);

    c.boot();
    if (!c.sim().run_until([&] { return a.done(); }, run_deadline(c.sim(), cfg.notify_requests)))
        throw BenchAborted("notify cell " + cell_name(mode, payload_kib) + " stalled");
    c.sim().run_for(3'000);  // let the last notifications arrive

    if (a.completed() == 0)
        throw BenchAborted("notify cell " + cell_name(mode, payload_kib) +
                           ": no request succeeded");

    std::vector<double> latencies;
    uint32_t missing = 0;
    for (const Hash& h : collect.success_hashes) {
        auto note = collect.note_by_hash.find(h);
        if (note == collect.note_by_hash.end()) {
            ++missing;
            continue;
        }
        latencies.push_back(static_cast<double>(note->second - collect.begin_by_hash.at(h)));
    }
    if (latencies.empty())
        throw BenchAborted("notify cell " + cell_name(mode, payload_kib) +
                           ": receiver saw none of the reports");
    if (missing * 100 > collect.success_hashes.size())
        throw BenchAborted("notify cell " + cell_name(mode, payload_kib) + ": " +
                           std::to_string(missing) + " notifications never arrived");

    double mean_ms = std::accumulate(latencies.begin(), latencies.end(), 0.0) /
                     static_cast<double>(latencies.size());
    const int fanout = fanout_of(mode, cfg.peers);
    double span_s =
        static_cast<double>(collect.last_success - collect.first_begin) / 1000.0;

    MetricsRow row;
    row.mode = vehicle::submit_mode_name(mode);
    row.payload_kib = payload_kib;
    row.tx_per_s = span_s > 0 ? static_cast<double>(a.completed()) * fanout / span_s : 0;
    row.kib_per_s = row.tx_per_s * payload_kib;
    row.s_per_tx = mean_ms / fanout / 1000.0;
    row.failures = a.failed() + missing;
    row.successes = a.completed();
    row.wall_time_s = wall_seconds_since(t0);
    return row;
}

std::string utc_stamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::vector<MetricsRow> run_throughput_bench(const BenchmarkConfig& cfg) {
    cluster::IdentityBundle ids =
        cluster::gen_identities(cfg.identity_seed, cfg.peers, cfg.orderers,
                                std::max(cfg.vehicles, 3));
    std::vector<MetricsRow> rows;
    for (auto mode : cfg.modes)
        for (int kib : cfg.payload_kib) rows.push_back(throughput_cell(cfg, ids, mode, kib));
    return rows;
}

std::vector<MetricsRow> run_notify_bench(const BenchmarkConfig& cfg) {
    cluster::IdentityBundle ids =
        cluster::gen_identities(cfg.identity_seed, cfg.peers, cfg.orderers,
                                std::max(cfg.vehicles, 3));
    std::vector<MetricsRow> rows;
    for (auto mode : cfg.modes)
        for (int kib : cfg.payload_kib) rows.push_back(notify_cell(cfg, ids, mode, kib));
    return rows;
}

FaultReport run_fault_bench(const BenchmarkConfig& cfg, const std::string& out_dir) {
    if (cfg.peers < 2 || cfg.orderers < 3)
        throw BenchAborted("fault bench needs at least 2 peers and 3 orderers");
    const int payload_kib = cfg.payload_kib.empty() ? 16 : cfg.payload_kib.front();

    BenchCollector collect;
    cluster::Cluster c(cluster_config(cfg),
                       cluster::gen_identities(cfg.identity_seed, cfg.peers, cfg.orderers,
                                               std::max(cfg.vehicles, 3)));
    for (int i = 0; i < cfg.vehicles; ++i) {
        vehicle::VehicleConfig vc;
        vc.mode = vehicle::SubmitMode::Multiple;  // evidence survives the peer crash
        vc.home_peer = i % cfg.peers;
        vc.zone = "zone-" + std::to_string(vc.home_peer);
        vc.request_count = cfg.requests_per_vehicle;
        vc.payload_bytes = static_cast<size_t>(payload_kib) * 1024;
        vc.report_fraction = cfg.report_fraction;
        vc.metrics = &collect;
        c.add_vehicle(vc);
    }
    c.boot();

    FaultReport report;
    report.expected = cfg.requests_per_vehicle * static_cast<uint32_t>(cfg.vehicles);
    auto completed_total = [&] {
        uint32_t n = 0;
        for (size_t i = 0; i < c.vehicle_count(); ++i) n += c.vehicle(i).completed();
        return n;
    };

    // Phase 1: run to the halfway mark with everything healthy.
    const uint32_t half = report.expected / 2;
    if (!c.sim().run_until([&] { return completed_total() >= half; },
                           run_deadline(c.sim(), report.expected)))
        throw BenchAborted("fault bench never reached the halfway mark");

    // Kill the current Raft leader (worst case for ordering) plus one peer.
    report.crashed_orderer = c.leader();
    if (report.crashed_orderer < 0) report.crashed_orderer = 0;
    report.crashed_peer = cfg.peers - 1;
    report.crash_at_ms = c.sim().metric_now_ms();
    const uint32_t before_crash = completed_total();
    c.sim().crash(net::NodeAddress::orderer(report.crashed_orderer));
    c.sim().crash(net::NodeAddress::peer(report.crashed_peer));
    report.details.push_back("crashed orderer " + std::to_string(report.crashed_orderer) +
                             " (leader) and peer " + std::to_string(report.crashed_peer) +
                             " after " + std::to_string(before_crash) + "/" +
                             std::to_string(report.expected) + " requests");

    // Phase 2: the survivors must finish the workload.
    auto all_done = [&] {
        for (size_t i = 0; i < c.vehicle_count(); ++i)
            if (!c.vehicle(i).done()) return false;
        return true;
    };
    if (!c.sim().run_until(all_done, run_deadline(c.sim(), report.expected)))
        throw BenchAborted("fault bench stalled after the crash");
    c.sim().run_for(3'000);

    for (size_t i = 0; i < c.vehicle_count(); ++i) {
        report.successes += c.vehicle(i).completed();
        report.failures += c.vehicle(i).failed();
    }

    // Survivor agreement: same height, same tip, same world state.
    std::vector<int32_t> survivors;
    for (int32_t p = 0; p < cfg.peers; ++p)
        if (p != report.crashed_peer) survivors.push_back(p);
    report.survivors_converged = true;
    for (int32_t p : survivors) {
        const Chain& chain = c.peer(static_cast<size_t>(p)).chain();
        if (chain.size() != c.peer(static_cast<size_t>(survivors[0])).chain().size() ||
            c.peer(static_cast<size_t>(p)).state_hash() !=
                c.peer(static_cast<size_t>(survivors[0])).state_hash())
            report.survivors_converged = false;
        report.survivor_state_hashes.push_back(
            c.peer(static_cast<size_t>(p)).state_hash().hex());
    }
    report.survivor_height = c.peer(static_cast<size_t>(survivors[0])).chain().size();

    // Zero-loss check: every client-confirmed request is on the survivor chain.
    std::set<Hash> committed = valid_proposal_hashes(c.peer(static_cast<size_t>(survivors[0])).chain());
    for (const Hash& h : collect.success_hashes)
        report.lost_transactions += committed.count(h) == 0;

    // Throughput on both sides of the crash, handled-request accounting.
    const int fanout = fanout_of(vehicle::SubmitMode::Multiple, cfg.peers);
    double span_before_s =
        static_cast<double>(report.crash_at_ms - collect.first_begin) / 1000.0;
    TimestampMs last = collect.last_success;
    double span_after_s = static_cast<double>(last - report.crash_at_ms) / 1000.0;
    uint32_t after_crash = 0;
    for (const auto& d : collect.dones)
        after_crash += d.ok && d.finished > report.crash_at_ms;
    if (span_before_s > 0)
        report.tx_per_s_before = static_cast<double>(before_crash) * fanout / span_before_s;
    if (span_after_s > 0)
        report.tx_per_s_after = static_cast<double>(after_crash) * fanout / span_after_s;
    report.details.push_back("throughput before crash " + fixed6(report.tx_per_s_before) +
                             " tx/s, after " + fixed6(report.tx_per_s_after) + " tx/s");

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        for (int32_t p : survivors) {
            auto path = std::filesystem::path(out_dir) /
                        ("fault-peer" + std::to_string(p) + ".bin");
            write_chain_file(path.string(), c.peer(static_cast<size_t>(p)).chain());
            report.details.push_back("wrote " + path.string());
        }
    }
    return report;
}

std::string rows_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "mode,payload_kib,tx_per_s,kib_per_s,s_per_tx,failures\n";
    for (const auto& r : rows) {
        out += r.mode + "," + std::to_string(r.payload_kib) + "," + fixed6(r.tx_per_s) + "," +
               fixed6(r.kib_per_s) + "," + fixed6(r.s_per_tx) + "," +
               std::to_string(r.failures) + "\n";
    }
    return out;
}

EmittedFiles emit_tables(const std::vector<MetricsRow>& rows, const std::string& out_dir,
                         const std::string& label) {
    if (rows.empty()) throw BenchAborted("refusing to emit empty tables");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::string stem = "benchmark-" + label + "-" + utc_stamp();

    EmittedFiles files;
    files.csv = (fs::path(out_dir) / (stem + ".csv")).string();
    {
        std::ofstream out(files.csv, std::ios::trunc);
        if (!out) throw BenchAborted("cannot write " + files.csv);
        out << rows_to_csv(rows);
    }

    nlohmann::ordered_json j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"mode", r.mode},
                     {"payload_kib", r.payload_kib},
                     {"tx_per_s", r.tx_per_s},
                     {"kib_per_s", r.kib_per_s},
                     {"s_per_tx", r.s_per_tx},
                     {"failures", r.failures},
                     {"successes", r.successes},
                     {"wall_time_s", r.wall_time_s}});
    }
    files.json = (fs::path(out_dir) / (stem + ".json")).string();
    {
        std::ofstream out(files.json, std::ios::trunc);
        out << j.dump(2) << "\n";
    }

    // Ratio table only when a payload size was measured in both modes.
    std::map<int, std::pair<double, double>> by_size;  // kib -> (single, multiple)
    for (const auto& r : rows) {
        if (r.mode == "single") by_size[r.payload_kib].first = r.tx_per_s;
        if (r.mode == "multiple") by_size[r.payload_kib].second = r.tx_per_s;
    }
    std::string ratio_csv = "payload_kib,single_tx_per_s,multiple_tx_per_s,ratio\n";
    size_t pairs = 0;
    for (const auto& [kib, pair] : by_size) {
        if (pair.first <= 0 || pair.second <= 0) continue;
        ++pairs;
        ratio_csv += std::to_string(kib) + "," + fixed6(pair.first) + "," +
                     fixed6(pair.second) + "," + fixed6(pair.second / pair.first) + "\n";
    }
    if (pairs > 0) {
        files.ratios = (fs::path(out_dir) / (stem + "-ratios.csv")).string();
        std::ofstream out(files.ratios, std::ios::trunc);
        out << ratio_csv;
    }
    return files;
}

}  // namespace edgechain::bench
