// Python bindings for the main operations: identities, ledger files,
// route planning, benchmarks, and the guidance scenario.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "edgechain/bench.hpp"
#include "edgechain/cluster.hpp"
#include "edgechain/fleet.hpp"
#include "edgechain/inspect.hpp"

namespace py = pybind11;
using namespace edgechain;

namespace {

bench::BenchmarkConfig bench_config(const std::vector<int>& payload_kib, uint32_t requests,
                                    int vehicles, uint64_t seed, const std::string& mode,
                                    const std::string& clock, double report_fraction) {
    bench::BenchmarkConfig cfg;
    if (!payload_kib.empty()) cfg.payload_kib = payload_kib;
    if (requests > 0) {
        cfg.requests_per_vehicle = requests;
        cfg.notify_requests = requests;
    }
    cfg.vehicles = vehicles;
    cfg.seed = seed;
    cfg.report_fraction = report_fraction;
    if (mode == "single")
        cfg.modes = {vehicle::SubmitMode::Single};
    else if (mode == "multiple")
        cfg.modes = {vehicle::SubmitMode::Multiple};
    cfg.clock = clock == "real" ? net::ClockMode::Real : net::ClockMode::Virtual;
    return cfg;
}

py::list rows_to_py(const std::vector<bench::MetricsRow>& rows) {
    py::list out;
    for (const auto& r : rows) {
        py::dict d;
        d["mode"] = r.mode;
        d["payload_kib"] = r.payload_kib;
        d["tx_per_s"] = r.tx_per_s;
        d["kib_per_s"] = r.kib_per_s;
        d["s_per_tx"] = r.s_per_tx;
        d["failures"] = r.failures;
        d["successes"] = r.successes;
        d["wall_time_s"] = r.wall_time_s;
        out.append(d);
    }
    return out;
}

road::RoadGraph grid_with_penalties(int width, int height,
                                    const std::vector<std::pair<int, int>>& penalized) {
    road::RoadGraph g = road::make_grid(width, height, {"default"});
    for (auto [a, b] : penalized) g.set_penalized(road::EdgeId::of(a, b), true);
    return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "simulated vehicular blockchain core";

    py::register_exception<fleet::ScenarioAssertionFailed>(m, "ScenarioAssertionFailed");
    py::register_exception<bench::BenchAborted>(m, "BenchAborted");

    m.def(
        "gen_identities_file",
        [](const std::string& path, uint64_t seed, int peers, int orderers, int vehicles) {
            cluster::write_identities(cluster::gen_identities(seed, peers, orderers, vehicles),
                                      path);
            return path;
        },
        py::arg("path"), py::arg("seed") = 42, py::arg("peers") = 3, py::arg("orderers") = 3,
        py::arg("vehicles") = 16);

    m.def(
        "validate_chain_file",
        [](const std::string& path) -> py::object {
            auto bad = validate_chain(read_chain_file(path));
            if (bad) return py::int_(*bad);
            return py::none();
        },
        py::arg("path"), "First broken block index, or None when the chain is intact");

    m.def(
        "chain_json", [](const std::string& path) { return chain_to_json(read_chain_file(path)); },
        py::arg("path"));
    m.def(
        "state_json",
        [](const std::string& path) { return state_to_json(replay_chain(read_chain_file(path))); },
        py::arg("path"));
    m.def(
        "node_summary_json",
        [](const std::string& path) { return node_summary_json(read_chain_file(path)); },
        py::arg("path"));

    m.def(
        "plan_route",
        [](int width, int height, const std::vector<std::pair<int, int>>& penalized, int start,
           int destination) {
            return road::plan_route(grid_with_penalties(width, height, penalized), start,
                                    destination);
        },
        py::arg("width"), py::arg("height"), py::arg("penalized"), py::arg("start"),
        py::arg("destination"));

    m.def(
        "run_throughput_bench",
        [](const std::vector<int>& payload_kib, uint32_t requests, int vehicles, uint64_t seed,
           const std::string& mode, const std::string& clock, double report_fraction) {
            return rows_to_py(bench::run_throughput_bench(bench_config(
                payload_kib, requests, vehicles, seed, mode, clock, report_fraction)));
        },
        py::arg("payload_kib") = std::vector<int>{}, py::arg("requests") = 0,
        py::arg("vehicles") = 3, py::arg("seed") = 1, py::arg("mode") = "both",
        py::arg("clock") = "virtual", py::arg("report_fraction") = 1.0);

    m.def(
        "run_notify_bench",
        [](const std::vector<int>& payload_kib, uint32_t requests, int vehicles, uint64_t seed,
           const std::string& mode, const std::string& clock, double report_fraction) {
            return rows_to_py(bench::run_notify_bench(bench_config(
                payload_kib, requests, vehicles, seed, mode, clock, report_fraction)));
        },
        py::arg("payload_kib") = std::vector<int>{}, py::arg("requests") = 0,
        py::arg("vehicles") = 3, py::arg("seed") = 1, py::arg("mode") = "both",
        py::arg("clock") = "virtual", py::arg("report_fraction") = 1.0);

    m.def(
        "run_fault_bench",
        [](const std::vector<int>& payload_kib, uint32_t requests, int vehicles, uint64_t seed,
           const std::string& out_dir) {
            auto rep = bench::run_fault_bench(
                bench_config(payload_kib, requests, vehicles, seed, "both", "virtual", 1.0),
                out_dir);
            py::dict d;
            d["expected"] = rep.expected;
            d["successes"] = rep.successes;
            d["failures"] = rep.failures;
            d["crashed_orderer"] = rep.crashed_orderer;
            d["crashed_peer"] = rep.crashed_peer;
            d["crash_at_ms"] = rep.crash_at_ms;
            d["survivors_converged"] = rep.survivors_converged;
            d["survivor_height"] = rep.survivor_height;
            d["survivor_state_hashes"] = rep.survivor_state_hashes;
            d["lost_transactions"] = rep.lost_transactions;
            d["tx_per_s_before"] = rep.tx_per_s_before;
            d["tx_per_s_after"] = rep.tx_per_s_after;
            d["details"] = rep.details;
            return d;
        },
        py::arg("payload_kib") = std::vector<int>{16}, py::arg("requests") = 20,
        py::arg("vehicles") = 3, py::arg("seed") = 1, py::arg("out_dir") = "");

    m.def(
        "run_adaptive_guidance",
        [](const std::string& out_dir, const std::string& config_path, uint64_t seed) {
            fleet::ScenarioConfig cfg = config_path.empty()
                                            ? fleet::default_scenario()
                                            : fleet::scenario_from_json(config_path);
            if (seed != 0) cfg.seed = seed;
            fleet::ScenarioResult r = fleet::run_adaptive_guidance(cfg, out_dir);
            py::dict d;
            d["log"] = r.log;
            d["events_path"] = r.events_path;
            d["chain_path"] = r.chain_path;
            d["incident_edge"] = py::make_tuple(r.incident_edge.a, r.incident_edge.b);
            d["old_route"] = r.old_route;
            d["new_route"] = r.new_route;
            d["notify_latency_ms"] = r.notify_latency_ms;
            d["chain_height"] = r.chain_height;
            return d;
        },
        py::arg("out_dir"), py::arg("config_path") = "", py::arg("seed") = 0);
}
