#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgechain/contracts.hpp"
#include "edgechain/identity.hpp"
#include "edgechain/netsim.hpp"
#include "edgechain/roadgraph.hpp"

namespace edgechain::vehicle {

enum class SubmitMode : uint8_t { Single = 0, Multiple = 1 };

const char* submit_mode_name(SubmitMode m);
std::optional<SubmitMode> submit_mode_from(const std::string& name);

/// Single collector for everything measurable; the bench owns one instance
/// and every vehicle feeds it, so no aggregation races exist by design.
struct Metrics {
    virtual ~Metrics() = default;
    virtual void on_request_begin(int /*vehicle*/, uint32_t /*request*/,
                                  const Hash& /*proposal_hash*/, TimestampMs /*at_ms*/) {}
    virtual void on_request_done(int /*vehicle*/, uint32_t /*request*/, bool /*ok*/,
                                 TimestampMs /*began_ms*/, TimestampMs /*finished_ms*/,
                                 uint32_t /*attempts*/) {}
    virtual void on_notification(int /*vehicle*/, const msg::Notification& /*note*/,
                                 TimestampMs /*at_ms*/) {}
    virtual void on_reroute(int /*vehicle*/, const std::vector<road::NodeId>& /*old_route*/,
                            const std::vector<road::NodeId>& /*new_route*/,
                            road::EdgeId /*edge*/, TimestampMs /*at_ms*/) {}
};

struct VehicleConfig {
    int32_t index = 0;
    std::string company;  // organizational label; never written to the ledger
    int32_t home_peer = 0;
    int32_t peer_count = 3;
    int32_t orderer_count = 3;
    SubmitMode mode = SubmitMode::Single;
    std::string zone;  // zone this vehicle reports into

    // Workload: request_count requests, sequential (next starts when the
    // previous one resolved). report_fraction picks situation reports vs
    // vehicle updates, evenly interleaved.
    uint32_t request_count = 0;
    size_t payload_bytes = 16 * 1024;
    double report_fraction = 1.0;
    std::vector<contracts::ContractCall> scripted;  // overrides the generator

    double endorse_timeout_ms = 1500.0;
    double commit_timeout_ms = 5000.0;
    double submit_backoff_ms = 100.0;
    double register_retry_ms = 500.0;
    uint32_t max_attempts = 3;    // fresh proposals per request
    uint32_t max_resubmits = 2;   // same-envelope resubmissions per attempt
    // Client-side pause drawn uniformly from [0, think_ms_max) before each
    // request. Decouples the submit phase from the ordering batch timer so
    // throughput reflects service cost, not timer resonance.
    double think_ms_max = 40.0;

    // Routing: set all three to enable the reroute hook.
    std::optional<road::RoadGraph> graph;
    road::NodeId position = -1;
    road::NodeId destination = -1;
    std::optional<contracts::GeoPoint> report_gps;  // default: own position

    Metrics* metrics = nullptr;  // not owned; may be null
};

/// A virtual vehicle: registers with its peer(s), runs the request workload
/// through endorse -> order -> commit, consumes notifications (dedup by
/// transaction id), and replans its route around reported incidents.
class VehicleNode : public net::Node {
public:
    VehicleNode(VehicleConfig cfg, crypto::KeyPair keys, Certificate cert);

    /// Starts registration (and then the workload); call once after add_node.
    void boot();

    void on_message(const msg::Message& m, net::NodeAddress from, size_t bytes) override;
    void on_timer(int timer_id) override;
    void on_restart() override;

    /// Read-only query to the home peer; answered without ordering.
    void start_zone_query(const std::string& zone);

    Pseudonym id() const { return id_; }
    const std::string& company() const { return cfg_.company; }
    bool registered() const;
    bool done() const { return started_ && req_idx_ >= effective_count(); }
    uint32_t completed() const { return completed_; }
    uint32_t failed() const { return failed_; }
    uint32_t reroutes() const { return reroutes_; }
    const std::vector<road::NodeId>& route() const { return route_; }
    const road::RoadGraph* graph() const { return graph_ ? &*graph_ : nullptr; }
    size_t notifications_seen() const { return seen_notes_.size(); }
    uint32_t queries_done() const { return queries_done_; }
    const std::vector<contracts::IncidentReport>& last_query_reports() const {
        return last_query_reports_;
    }

private:
    static constexpr int TIMER_REGISTER = 1;
    static constexpr int TIMER_ENDORSE = 2;
    static constexpr int TIMER_COMMIT = 3;
    static constexpr int TIMER_RETRY = 4;
    static constexpr int TIMER_KICK = 5;

    enum class Phase { Idle, Endorse, Commit };

    uint32_t effective_count() const {
        return cfg_.scripted.empty() ? cfg_.request_count
                                     : static_cast<uint32_t>(cfg_.scripted.size());
    }
    std::vector<int32_t> targets() const;
    void send_registrations();
    void schedule_next();
    void begin_request();
    contracts::ContractCall build_call(uint32_t request);
    Bytes make_payload(uint32_t request) const;
    void send_proposal();
    void maybe_finish_endorse();
    void assemble_and_submit();
    void submit_envelope();
    void finish_request(bool ok);
    void handle_response(const msg::ProposalResponse& r, int32_t peer);
    void handle_confirm(const msg::CommitConfirm& cc);
    void handle_notification(const msg::Notification& note);
    void cancel(uint64_t& token);

    VehicleConfig cfg_;
    crypto::KeyPair keys_;
    Certificate cert_;
    Pseudonym id_;

    std::set<int32_t> registered_;
    bool started_ = false;

    Phase phase_ = Phase::Idle;
    uint32_t req_idx_ = 0;
    uint32_t completed_ = 0;
    uint32_t failed_ = 0;
    uint32_t attempts_ = 0;
    uint32_t resubmits_ = 0;
    contracts::ContractCall call_;
    msg::Proposal proposal_;
    Hash phash_;
    TimestampMs t_req_start_ = 0;
    std::map<int32_t, msg::ProposalResponse> responses_;
    std::set<int32_t> suspects_;  // peers that failed to answer an endorse round
    Transaction envelope_;
    int32_t leader_guess_ = 0;

    uint64_t reg_token_ = 0, endorse_token_ = 0, commit_token_ = 0, retry_token_ = 0,
             kick_token_ = 0;

    std::set<Hash> seen_notes_;  // tx ids, exactly-once delivery upward
    std::optional<road::RoadGraph> graph_;
    std::vector<road::NodeId> route_;
    uint32_t reroutes_ = 0;

    std::map<Hash, std::string> query_pending_;
    uint32_t queries_done_ = 0;
    std::vector<contracts::IncidentReport> last_query_reports_;
};

}  // namespace edgechain::vehicle
