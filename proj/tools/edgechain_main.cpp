// Command-line front end: identity generation, benchmarks, the guidance
// scenario, and offline ledger inspection. Exit codes: 0 success, 1 run or
// assertion failure, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "edgechain/bench.hpp"
#include "edgechain/cluster.hpp"
#include "edgechain/fleet.hpp"
#include "edgechain/inspect.hpp"
#include "edgechain/log.hpp"

using namespace edgechain;
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Options {
    std::string config;
    std::string out = "./out";
    uint64_t seed = 1;
    std::string clock = "virtual";
    std::vector<int> payload_kib;
    uint32_t requests = 0;
    int vehicles = 0;
    std::string mode = "both";
};

/// Which global flags the user actually passed; flags beat the config file.
struct Given {
    bool out = false, seed = false, clock = false, payload = false;
    bool requests = false, vehicles = false, mode = false;
};

std::optional<json> load_config(const std::string& path) {
    if (path.empty()) return std::nullopt;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    return json::parse(in);
}

std::vector<vehicle::SubmitMode> modes_from(const std::string& name) {
    if (name == "single") return {vehicle::SubmitMode::Single};
    if (name == "multiple") return {vehicle::SubmitMode::Multiple};
    return {vehicle::SubmitMode::Single, vehicle::SubmitMode::Multiple};
}

bench::BenchmarkConfig make_bench_config(const Options& opt, const Given& given,
                                         const std::optional<json>& file) {
    bench::BenchmarkConfig cfg;
    if (file) {
        const json& j = *file;
        cfg.seed = j.value("seed", cfg.seed);
        cfg.identity_seed = j.value("identity_seed", cfg.identity_seed);
        cfg.requests_per_vehicle = j.value("requests", cfg.requests_per_vehicle);
        cfg.notify_requests = j.value("notify_requests", cfg.notify_requests);
        cfg.vehicles = j.value("vehicles", cfg.vehicles);
        cfg.peers = j.value("peers", cfg.peers);
        cfg.orderers = j.value("orderers", cfg.orderers);
        cfg.report_fraction = j.value("report_fraction", cfg.report_fraction);
        if (j.contains("payload_kib")) cfg.payload_kib = j["payload_kib"].get<std::vector<int>>();
        if (j.contains("mode")) cfg.modes = modes_from(j["mode"].get<std::string>());
        if (j.value("clock", "virtual") == "real") cfg.clock = net::ClockMode::Real;
        if (j.contains("link")) {
            const json& l = j["link"];
            cfg.link.base_latency_ms = l.value("base_latency_ms", cfg.link.base_latency_ms);
            cfg.link.jitter_ms = l.value("jitter_ms", cfg.link.jitter_ms);
            cfg.link.loss_rate = l.value("loss_rate", cfg.link.loss_rate);
        }
    }
    if (given.seed) cfg.seed = opt.seed;
    if (given.clock) cfg.clock = opt.clock == "real" ? net::ClockMode::Real : net::ClockMode::Virtual;
    if (given.payload) cfg.payload_kib = opt.payload_kib;
    if (given.requests) {
        cfg.requests_per_vehicle = opt.requests;
        cfg.notify_requests = opt.requests;
    }
    if (given.vehicles) cfg.vehicles = opt.vehicles;
    if (given.mode) cfg.modes = modes_from(opt.mode);
    return cfg;
}

std::string resolve_out(const Options& opt, const Given& given, const std::optional<json>& file) {
    if (!given.out && file && file->contains("out")) return (*file)["out"].get<std::string>();
    return opt.out;
}

int cmd_gen_identities(const Options& opt, const Given& given, int peers, int orderers) {
    int vehicles = given.vehicles ? opt.vehicles : 16;
    auto ids = cluster::gen_identities(opt.seed, peers, orderers, vehicles);
    fs::create_directories(opt.out);
    std::string path = (fs::path(opt.out) / "identities.json").string();
    cluster::write_identities(ids, path);
    log::info("wrote " + path);
    std::cout << path << "\n";
    return 0;
}

int cmd_run_bench(const Options& opt, const Given& given, bool notify) {
    auto file = load_config(opt.config);
    bench::BenchmarkConfig cfg = make_bench_config(opt, given, file);
    std::string out = resolve_out(opt, given, file);
    auto rows = notify ? bench::run_notify_bench(cfg) : bench::run_throughput_bench(cfg);
    auto files = bench::emit_tables(rows, out, notify ? "notify" : "throughput");
    log::info("wrote " + files.csv);
    log::info("wrote " + files.json);
    if (!files.ratios.empty()) log::info("wrote " + files.ratios);
    std::cout << bench::rows_to_csv(rows);
    return 0;
}

int cmd_run_fault_bench(const Options& opt, const Given& given) {
    auto file = load_config(opt.config);
    bench::BenchmarkConfig cfg = make_bench_config(opt, given, file);
    std::string out = resolve_out(opt, given, file);
    fs::create_directories(out);
    bench::FaultReport rep = bench::run_fault_bench(cfg, out);

    bool claim_holds = rep.survivors_converged && rep.lost_transactions == 0 &&
                       rep.successes == rep.expected;
    ordered_json j{{"expected", rep.expected},
                   {"successes", rep.successes},
                   {"failures", rep.failures},
                   {"crashed_orderer", rep.crashed_orderer},
                   {"crashed_peer", rep.crashed_peer},
                   {"crash_at_ms", rep.crash_at_ms},
                   {"survivors_converged", rep.survivors_converged},
                   {"survivor_height", rep.survivor_height},
                   {"survivor_state_hashes", rep.survivor_state_hashes},
                   {"lost_transactions", rep.lost_transactions},
                   {"tx_per_s_before", rep.tx_per_s_before},
                   {"tx_per_s_after", rep.tx_per_s_after},
                   {"claim_holds", claim_holds},
                   {"details", rep.details}};
    std::cout << j.dump(2) << "\n";
    return claim_holds ? 0 : 1;
}

int cmd_run_guidance(const Options& opt, const Given& given) {
    fleet::ScenarioConfig cfg =
        opt.config.empty() ? fleet::default_scenario() : fleet::scenario_from_json(opt.config);
    if (given.seed) cfg.seed = opt.seed;
    fleet::ScenarioResult r = fleet::run_adaptive_guidance(cfg, opt.out);
    for (const std::string& line : r.log) std::cout << line << "\n";
    log::info("wrote " + r.events_path);
    log::info("wrote " + r.chain_path);
    return 0;
}

int cmd_inspect(const std::string& kind, const std::string& file) {
    Chain chain = read_chain_file(file);
    if (kind == "chain")
        std::cout << chain_to_json(chain) << "\n";
    else if (kind == "state")
        std::cout << state_to_json(replay_chain(chain)) << "\n";
    else
        std::cout << node_summary_json(chain) << "\n";
    return 0;
}

int cmd_validate(const std::string& file) {
    Chain chain;
    try {
        chain = read_chain_file(file);
    } catch (const std::exception& e) {
        std::cout << "unreadable: " << e.what() << "\n";
        return 1;
    }
    if (auto bad = validate_chain(chain)) {
        std::cout << "invalid at block " << *bad << "\n";
        return 1;
    }
    std::cout << "ok height=" << chain.size()
              << " state=" << replay_chain(chain).state_hash().hex() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulated vehicular blockchain: benchmarks, scenarios, ledger tools"};
    app.fallthrough();
    app.require_subcommand(1);

    Options opt;
    auto* o_config = app.add_option("--config", opt.config, "JSON config file (flags win)");
    auto* o_out = app.add_option("--out", opt.out, "output directory (default ./out)");
    auto* o_seed = app.add_option("--seed", opt.seed, "simulation seed");
    auto* o_clock = app.add_option("--clock", opt.clock, "virtual|real")
                        ->check(CLI::IsMember({"virtual", "real"}));
    auto* o_payload = app.add_option("--payload-kib", opt.payload_kib, "payload sizes in KiB")
                          ->delimiter(',');
    auto* o_requests = app.add_option("--requests", opt.requests, "requests per vehicle");
    auto* o_vehicles = app.add_option("--vehicles", opt.vehicles, "number of vehicles");
    auto* o_mode = app.add_option("--mode", opt.mode, "single|multiple|both")
                       ->check(CLI::IsMember({"single", "multiple", "both"}));

    int gen_peers = 3, gen_orderers = 3;
    auto* gen = app.add_subcommand("gen-identities", "write an identity bundle file");
    gen->add_option("--peers", gen_peers, "edge server count");
    gen->add_option("--orderers", gen_orderers, "ordering node count");

    auto* runb = app.add_subcommand("run-bench", "throughput benchmark (tables as CSV/JSON)");
    auto* runn = app.add_subcommand("run-notify-bench", "notification latency benchmark");
    auto* runf = app.add_subcommand("run-fault-bench", "mid-run crash of leader and one peer");
    auto* rung = app.add_subcommand("run-adaptive-guidance", "incident report and reroute scenario");

    std::string inspect_kind, inspect_file;
    auto* insp = app.add_subcommand("inspect", "dump an exported ledger file");
    insp->add_option("kind", inspect_kind, "chain|state|node")
        ->required()
        ->check(CLI::IsMember({"chain", "state", "node"}));
    insp->add_option("file", inspect_file, "ledger file")->required();

    std::string validate_file;
    auto* val = app.add_subcommand("validate-chain", "check hash linkage of a ledger file");
    val->add_option("file", validate_file, "ledger file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Given given;
    given.out = o_out->count() > 0;
    given.seed = o_seed->count() > 0;
    given.clock = o_clock->count() > 0;
    given.payload = o_payload->count() > 0;
    given.requests = o_requests->count() > 0;
    given.vehicles = o_vehicles->count() > 0;
    given.mode = o_mode->count() > 0;
    (void)o_config;

    try {
        if (gen->parsed()) return cmd_gen_identities(opt, given, gen_peers, gen_orderers);
        if (runb->parsed()) return cmd_run_bench(opt, given, false);
        if (runn->parsed()) return cmd_run_bench(opt, given, true);
        if (runf->parsed()) return cmd_run_fault_bench(opt, given);
        if (rung->parsed()) return cmd_run_guidance(opt, given);
        if (insp->parsed()) return cmd_inspect(inspect_kind, inspect_file);
        if (val->parsed()) return cmd_validate(validate_file);
    } catch (const fleet::ScenarioAssertionFailed& e) {
        log::error(std::string("scenario failed: ") + e.what());
        return 1;
    } catch (const std::exception& e) {
        log::error(e.what());
        return 1;
    }
    return 2;  // unreachable with require_subcommand(1)
}
