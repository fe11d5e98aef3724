#include "edgechain/netsim.hpp"

#include <cmath>
#include <thread>

#include "edgechain/codec.hpp"

namespace edgechain::net {

const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Vehicle: return "vehicle";
        case NodeKind::Peer: return "peer";
        case NodeKind::Orderer: return "orderer";
    }
    return "unknown";
}

std::string NodeAddress::str() const {
    return std::string(node_kind_name(kind)) + "-" + std::to_string(index);
}

Simulation::Simulation(SimConfig cfg) : cfg_(cfg), rng_(cfg.seed) {}

void Simulation::add_node(NodeAddress addr, Node* node) {
    node->sim_ = this;
    node->self_ = addr;
    nodes_[addr] = Entry{node, false, 0};
}

Simulation::Entry& Simulation::entry(NodeAddress addr) {
    auto it = nodes_.find(addr);
    if (it == nodes_.end()) throw UnknownAddress(addr.str());
    return it->second;
}

const Simulation::Entry& Simulation::entry(NodeAddress addr) const {
    auto it = nodes_.find(addr);
    if (it == nodes_.end()) throw UnknownAddress(addr.str());
    return it->second;
}

TimestampMs Simulation::metric_now_ms() const {
    if (cfg_.clock == ClockMode::Real && anchor_) {
        auto elapsed = std::chrono::steady_clock::now() - *anchor_;
        return std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    }
    return now_ms();
}

double Simulation::uniform() {
    return static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
}

bool Simulation::partitioned(NodeAddress a, NodeAddress b) const {
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    return cut_links_.count(key) > 0;
}

void Simulation::trace_record(uint8_t kind, const Event& ev, uint8_t detail) {
    Writer w;
    w.u8(kind);
    w.u64(static_cast<uint64_t>(ev.at_us));
    w.u8(static_cast<uint8_t>(ev.from.kind));
    w.u32(static_cast<uint32_t>(ev.from.index));
    w.u8(static_cast<uint8_t>(ev.to.kind));
    w.u32(static_cast<uint32_t>(ev.to.index));
    w.u8(detail);  // message tag, timer id low byte, or drop reason
    w.u64(ev.bytes);
    trace_.update(ByteView(w.data().data(), w.data().size()));
}

void Simulation::send(NodeAddress from, NodeAddress to, msg::Message m) {
    size_t bytes = msg::wire_size(m);
    send_sized(from, to, std::make_shared<const msg::Message>(std::move(m)), bytes);
}

void Simulation::multicast(NodeAddress from, const std::vector<NodeAddress>& targets,
                           const msg::Message& m) {
    size_t bytes = msg::wire_size(m);
    auto shared = std::make_shared<const msg::Message>(m);
    for (NodeAddress to : targets) send_sized(from, to, shared, bytes);
}

void Simulation::send_sized(NodeAddress from, NodeAddress to,
                            std::shared_ptr<const msg::Message> m, size_t bytes) {
    Entry& src = entry(from);
    entry(to);  // existence check up front
    ++stats_.sent;

    Event ev;
    ev.at_us = now_us_;
    ev.from = from;
    ev.to = to;
    ev.bytes = bytes;

    uint8_t tag = static_cast<uint8_t>(m->index());
    if (src.crashed) {
        ++stats_.dropped_crashed;
        trace_record(2, ev, 3);
        return;
    }
    if (partitioned(from, to)) {
        ++stats_.dropped_partition;
        trace_record(2, ev, 1);
        return;
    }
    // Latency is sampled before the loss draw so loss does not shift later
    // samples' positions in the stream... it still consumes one draw; both
    // orders are deterministic, this one keeps latency first for readability.
    double latency_ms = cfg_.link.base_latency_ms +
                        cfg_.link.jitter_ms * (2.0 * uniform() - 1.0);
    if (latency_ms < 0.0) latency_ms = 0.0;
    if (cfg_.link.loss_rate > 0.0 && uniform() < cfg_.link.loss_rate) {
        ++stats_.dropped_loss;
        trace_record(2, ev, 0);
        return;
    }

    ev.at_us = now_us_ + static_cast<int64_t>(std::llround(latency_ms * 1000.0));
    ev.seq = next_seq_++;
    ev.kind = 0;
    ev.payload = std::move(m);
    ev.timer_id = tag;
    queue_.push(std::move(ev));
}

uint64_t Simulation::set_timer(NodeAddress who, double delay_ms, int timer_id) {
    Entry& e = entry(who);
    if (delay_ms < 0.0) delay_ms = 0.0;
    Event ev;
    ev.at_us = now_us_ + static_cast<int64_t>(std::llround(delay_ms * 1000.0));
    ev.seq = next_seq_++;
    ev.kind = 1;
    ev.from = who;
    ev.to = who;
    ev.timer_id = timer_id;
    ev.token = next_token_++;
    ev.epoch = e.epoch;
    uint64_t token = ev.token;
    queue_.push(std::move(ev));
    return token;
}

void Simulation::cancel_timer(uint64_t token) {
    if (token != 0) cancelled_.insert(token);
}

void Simulation::crash(NodeAddress addr) {
    Entry& e = entry(addr);
    if (e.crashed) return;
    e.crashed = true;
    ++e.epoch;  // kills every timer armed before the crash
}

void Simulation::restart(NodeAddress addr) {
    Entry& e = entry(addr);
    if (!e.crashed) return;
    e.crashed = false;
    e.node->on_restart();
}

bool Simulation::is_crashed(NodeAddress addr) const { return entry(addr).crashed; }

void Simulation::partition(const std::vector<NodeAddress>& side_a,
                           const std::vector<NodeAddress>& side_b) {
    for (NodeAddress a : side_a)
        for (NodeAddress b : side_b) {
            if (a == b) continue;
            cut_links_.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
        }
}

void Simulation::heal() { cut_links_.clear(); }

void Simulation::dispatch(const Event& ev) {
    Entry& dst = entry(ev.to);
    if (ev.kind == 1) {
        if (cancelled_.erase(ev.token) > 0) return;
        if (dst.crashed || dst.epoch != ev.epoch) return;
        ++stats_.timers_fired;
        trace_record(1, ev, static_cast<uint8_t>(ev.timer_id));
        dst.node->on_timer(ev.timer_id);
        return;
    }
    if (dst.crashed) {
        ++stats_.dropped_crashed;
        trace_record(2, ev, 2);
        return;
    }
    ++stats_.delivered;
    trace_record(0, ev, static_cast<uint8_t>(ev.payload->index()));
    dst.node->on_message(*ev.payload, ev.from, ev.bytes);
}

bool Simulation::run_until(const std::function<bool()>& cond, TimestampMs deadline_ms) {
    const int64_t deadline_us = deadline_ms * 1000;
    if (cfg_.clock == ClockMode::Real && !anchor_)
        anchor_ = std::chrono::steady_clock::now() -
                  std::chrono::microseconds(now_us_);

    if (cond()) return true;
    while (!queue_.empty() && queue_.top().at_us <= deadline_us) {
        Event ev = queue_.top();
        queue_.pop();
        if (cfg_.clock == ClockMode::Real)
            std::this_thread::sleep_until(*anchor_ + std::chrono::microseconds(ev.at_us));
        now_us_ = std::max(now_us_, ev.at_us);
        dispatch(ev);
        if (cond()) return true;
    }
    now_us_ = std::max(now_us_, deadline_us);
    return cond();
}

TimestampMs Simulation::require_until(const std::function<bool()>& cond,
                                      TimestampMs deadline_ms, const std::string& what) {
    TimestampMs start = now_ms();
    if (!run_until(cond, deadline_ms)) throw DeadlineExceeded(what);
    return now_ms() - start;
}

void Simulation::run_for(TimestampMs duration_ms) {
    run_until([] { return false; }, now_ms() + duration_ms);
}

void WorkQueue::push(Node& owner, int priority, msg::Message work, NodeAddress from,
                     size_t bytes) {
    waiting_.emplace(std::make_pair(priority, next_seq_++),
                     Item{std::move(work), from, bytes});
    if (!in_service_) start_next(owner);
}

void WorkQueue::start_next(Node& owner) {
    auto it = waiting_.begin();
    in_service_ = std::move(it->second);
    waiting_.erase(it);
    owner.sim().set_timer(owner.address(), model_.service_ms(in_service_->bytes), timer_id_);
}

WorkQueue::Item WorkQueue::complete(Node& owner) {
    Item done = std::move(*in_service_);
    in_service_.reset();
    if (!waiting_.empty()) start_next(owner);
    return done;
}

void WorkQueue::reset() {
    waiting_.clear();
    in_service_.reset();
    next_seq_ = 0;
}

}  // namespace edgechain::net
