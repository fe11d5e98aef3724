#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "edgechain/cluster.hpp"

namespace edgechain::bench {

/// Shared knobs for all benchmark kinds. A "cell" is one (mode, payload)
/// combination run on a fresh deployment with identical identities.
struct BenchmarkConfig {
    std::vector<int> payload_kib = {16, 32, 64, 100};
    uint32_t requests_per_vehicle = 100;
    uint32_t notify_requests = 50;  // lighter load for the latency benchmark
    int vehicles = 3;
    int peers = 3;
    int orderers = 3;
    std::vector<vehicle::SubmitMode> modes = {vehicle::SubmitMode::Single,
                                              vehicle::SubmitMode::Multiple};
    net::ClockMode clock = net::ClockMode::Virtual;
    uint64_t seed = 1;
    uint64_t identity_seed = 42;
    net::LinkModel link{5.0, 2.0, 0.0};
    double report_fraction = 1.0;
};

/// One table row. For throughput runs s_per_tx is the inverse of tx_per_s;
/// for notification runs it is the measured report-to-notify latency per
/// handled request. Handled-request accounting: a request submitted in
/// multiple mode counts once per peer that served it (the fan-out), in
/// single mode once.
struct MetricsRow {
    std::string mode;
    int payload_kib = 0;
    double tx_per_s = 0;
    double kib_per_s = 0;
    double s_per_tx = 0;
    uint32_t failures = 0;
    uint32_t successes = 0;  // client-confirmed commits (before fan-out)
    double wall_time_s = 0;
};

struct BenchAborted : std::runtime_error {
    explicit BenchAborted(const std::string& why)
        : std::runtime_error("benchmark aborted: " + why) {}
};

std::vector<MetricsRow> run_throughput_bench(const BenchmarkConfig& cfg);
std::vector<MetricsRow> run_notify_bench(const BenchmarkConfig& cfg);

/// Mid-run crash of the Raft leader plus one peer; the run must finish on
/// the survivors with nothing lost. The caller judges the outcome from the
/// report; out_dir (optional, "" disables) receives the survivor chains.
struct FaultReport {
    uint32_t expected = 0;  // requests scheduled across all vehicles
    uint32_t successes = 0;
    uint32_t failures = 0;
    int32_t crashed_orderer = -1;
    int32_t crashed_peer = -1;
    TimestampMs crash_at_ms = 0;
    bool survivors_converged = false;
    size_t survivor_height = 0;
    std::vector<std::string> survivor_state_hashes;  // hex, one per survivor
    size_t lost_transactions = 0;  // successes missing from the survivor ledger
    double tx_per_s_before = 0;
    double tx_per_s_after = 0;
    std::vector<std::string> details;
};

FaultReport run_fault_bench(const BenchmarkConfig& cfg, const std::string& out_dir);

/// Exact CSV text for a set of rows (header + fixed 6-decimal columns).
std::string rows_to_csv(const std::vector<MetricsRow>& rows);

struct EmittedFiles {
    std::string csv;
    std::string json;
    std::string ratios;  // empty unless both modes are present
};

/// Writes <out_dir>/benchmark-<label>-<utc timestamp>.{csv,json} and, when
/// both modes are present, a single/multiple ratio table. Refuses empty input.
EmittedFiles emit_tables(const std::vector<MetricsRow>& rows, const std::string& out_dir,
                         const std::string& label);

}  // namespace edgechain::bench
