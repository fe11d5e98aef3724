#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgechain/crypto.hpp"
#include "edgechain/messages.hpp"

namespace edgechain::net {

enum class NodeKind : uint8_t { Vehicle = 0, Peer = 1, Orderer = 2 };

const char* node_kind_name(NodeKind k);

struct NodeAddress {
    NodeKind kind = NodeKind::Vehicle;
    int32_t index = 0;

    auto operator<=>(const NodeAddress&) const = default;

    std::string str() const;

    static NodeAddress vehicle(int32_t i) { return {NodeKind::Vehicle, i}; }
    static NodeAddress peer(int32_t i) { return {NodeKind::Peer, i}; }
    static NodeAddress orderer(int32_t i) { return {NodeKind::Orderer, i}; }
};

struct LinkModel {
    double base_latency_ms = 5.0;
    double jitter_ms = 2.0;
    double loss_rate = 0.0;
};

enum class ClockMode : uint8_t { Virtual = 0, Real = 1 };

struct SimConfig {
    LinkModel link;
    uint64_t seed = 1;
    ClockMode clock = ClockMode::Virtual;
};

struct UnknownAddress : std::runtime_error {
    explicit UnknownAddress(const std::string& addr)
        : std::runtime_error("unknown node address: " + addr) {}
};

struct DeadlineExceeded : std::runtime_error {
    explicit DeadlineExceeded(const std::string& what)
        : std::runtime_error("deadline exceeded waiting for: " + what) {}
};

class Simulation;

/// A node is an actor: all its state changes happen inside on_message /
/// on_timer, driven by the single-threaded scheduler.
class Node {
public:
    virtual ~Node() = default;

    virtual void on_message(const msg::Message& m, NodeAddress from, size_t wire_bytes) = 0;
    virtual void on_timer(int timer_id) { (void)timer_id; }
    /// Called when the simulation restarts this node after a crash;
    /// volatile state must be re-initialized here.
    virtual void on_restart() {}

    Simulation& sim() const { return *sim_; }
    NodeAddress address() const { return self_; }

private:
    friend class Simulation;
    Simulation* sim_ = nullptr;
    NodeAddress self_{};
};

/// Deterministic discrete-event scheduler. Virtual mode jumps the clock
/// between events; real mode paces the identical event order against the
/// wall clock, so both modes produce the same trace for the same seed.
class Simulation {
public:
    explicit Simulation(SimConfig cfg);

    void add_node(NodeAddress addr, Node* node);
    bool node_exists(NodeAddress addr) const { return nodes_.count(addr) > 0; }

    int64_t now_us() const { return now_us_; }
    TimestampMs now_ms() const { return now_us_ / 1000; }
    /// Timestamp for metrics: virtual time in virtual mode, wall-anchored
    /// elapsed time in real mode.
    TimestampMs metric_now_ms() const;

    void send(NodeAddress from, NodeAddress to, msg::Message m);
    void multicast(NodeAddress from, const std::vector<NodeAddress>& targets,
                   const msg::Message& m);

    /// Arms a one-shot timer; returns a token usable with cancel_timer.
    /// Timers die silently if the node crashes before they fire.
    uint64_t set_timer(NodeAddress who, double delay_ms, int timer_id);
    void cancel_timer(uint64_t token);

    void crash(NodeAddress addr);
    void restart(NodeAddress addr);
    bool is_crashed(NodeAddress addr) const;

    /// Cuts every link between the two groups until heal().
    void partition(const std::vector<NodeAddress>& side_a,
                   const std::vector<NodeAddress>& side_b);
    void heal();

    /// Processes events in (time, insertion) order until cond holds or the
    /// deadline passes; returns whether cond held. Clock lands on the
    /// deadline when the condition was not met.
    bool run_until(const std::function<bool()>& cond, TimestampMs deadline_ms);
    TimestampMs require_until(const std::function<bool()>& cond, TimestampMs deadline_ms,
                              const std::string& what);
    void run_for(TimestampMs duration_ms);

    Hash trace_hash() const { return trace_.digest(); }

    struct Stats {
        uint64_t sent = 0;
        uint64_t delivered = 0;
        uint64_t dropped_loss = 0;
        uint64_t dropped_partition = 0;
        uint64_t dropped_crashed = 0;
        uint64_t timers_fired = 0;
    };
    const Stats& stats() const { return stats_; }

    /// Uniform [0,1) from the simulation RNG; hand-rolled so traces do not
    /// depend on library distribution internals.
    double uniform();
    uint64_t rand_u64() { return rng_(); }

    ClockMode clock_mode() const { return cfg_.clock; }

private:
    struct Event {
        int64_t at_us = 0;
        uint64_t seq = 0;
        uint8_t kind = 0;  // 0 message, 1 timer
        NodeAddress from{};
        NodeAddress to{};
        std::shared_ptr<const msg::Message> payload;
        size_t bytes = 0;
        int timer_id = 0;
        uint64_t token = 0;
        uint64_t epoch = 0;
    };

    struct EventAfter {
        bool operator()(const Event& a, const Event& b) const {
            if (a.at_us != b.at_us) return a.at_us > b.at_us;
            return a.seq > b.seq;
        }
    };

    struct Entry {
        Node* node = nullptr;
        bool crashed = false;
        uint64_t epoch = 0;
    };

    void send_sized(NodeAddress from, NodeAddress to, std::shared_ptr<const msg::Message> m,
                    size_t bytes);
    bool partitioned(NodeAddress a, NodeAddress b) const;
    void dispatch(const Event& ev);
    void trace_record(uint8_t kind, const Event& ev, uint8_t detail);
    Entry& entry(NodeAddress addr);
    const Entry& entry(NodeAddress addr) const;

    SimConfig cfg_;
    std::mt19937_64 rng_;
    std::map<NodeAddress, Entry> nodes_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    int64_t now_us_ = 0;
    uint64_t next_seq_ = 0;
    uint64_t next_token_ = 1;
    std::set<uint64_t> cancelled_;
    std::set<std::pair<NodeAddress, NodeAddress>> cut_links_;
    crypto::Sha256Stream trace_;
    Stats stats_;
    std::optional<std::chrono::steady_clock::time_point> anchor_;
};

/// Service-time model for a node's CPU: fixed cost per handled message plus
/// a per-KiB cost of its wire encoding. This is what makes throughput and
/// latency depend on payload size.
struct ComputeModel {
    double base_ms = 1.0;
    double per_kib_ms = 0.5;

    double service_ms(size_t bytes) const {
        return base_ms + per_kib_ms * (static_cast<double>(bytes) / 1024.0);
    }
};

/// One-at-a-time work queue for a node: arrivals wait for the server,
/// higher priority (smaller number) is served first, FIFO within a class.
/// The owning node receives on_timer(timer_id) when the item in service
/// completes and must call complete() there.
class WorkQueue {
public:
    WorkQueue(ComputeModel model, int timer_id) : model_(model), timer_id_(timer_id) {}

    struct Item {
        msg::Message work;
        NodeAddress from{};
        size_t bytes = 0;
    };

    void push(Node& owner, int priority, msg::Message work, NodeAddress from, size_t bytes);
    Item complete(Node& owner);

    /// Drops queued and in-service work (crash/restart).
    void reset();

    size_t depth() const { return waiting_.size() + (in_service_ ? 1 : 0); }
    bool idle() const { return !in_service_; }

private:
    void start_next(Node& owner);

    ComputeModel model_;
    int timer_id_;
    std::map<std::pair<int, uint64_t>, Item> waiting_;
    std::optional<Item> in_service_;
    uint64_t next_seq_ = 0;
};

}  // namespace edgechain::net
