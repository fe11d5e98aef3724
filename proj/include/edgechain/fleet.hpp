#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "edgechain/cluster.hpp"

namespace edgechain::fleet {

/// One fleet participant. Companies are organizational labels used only in
/// telemetry and never written to the ledger (that is asserted at the end
/// of every scenario run).
struct ParticipantPlan {
    std::string company;
    int32_t home_peer = 0;
    road::NodeId start = -1;        // drivers only
    road::NodeId destination = -1;  // drivers only
};

/// A reporter from one company posts an incident lying on another company's
/// planned route; the affected driver must learn of it through the shared
/// ledger and replan, while an unaffected observer must not.
struct ScenarioConfig {
    uint64_t seed = 7;
    int grid_width = 5;
    int grid_height = 4;
    std::vector<std::string> zones = {"north", "center", "south"};
    ParticipantPlan reporter{"red", 1, -1, -1};
    ParticipantPlan driver{"green", 2, 0, 19};
    ParticipantPlan observer{"blue", 0, 15, 19};
    int incident_leg = -1;  // index into the driver's planned legs; -1 = middle
};

ScenarioConfig default_scenario();
ScenarioConfig scenario_from_json(const std::string& path);

struct ScenarioAssertionFailed : std::runtime_error {
    std::string step;
    ScenarioAssertionFailed(std::string step_, const std::string& detail)
        : std::runtime_error("scenario assertion failed at '" + step_ + "': " + detail),
          step(std::move(step_)) {}
};

struct ScenarioResult {
    std::vector<std::string> log;  // one line per verified step
    std::string events_path;       // JSONL telemetry
    std::string chain_path;        // exported ledger of peer 0
    road::EdgeId incident_edge;
    std::vector<road::NodeId> old_route;
    std::vector<road::NodeId> new_route;
    double notify_latency_ms = 0;  // reporter submit -> driver notified
    size_t chain_height = 0;
};

/// Runs the scenario to completion inside a virtual-clock simulation,
/// checking every claim as it goes; throws ScenarioAssertionFailed on the
/// first broken one. Artifacts are written under out_dir (created if needed).
ScenarioResult run_adaptive_guidance(const ScenarioConfig& cfg, const std::string& out_dir);

}  // namespace edgechain::fleet
