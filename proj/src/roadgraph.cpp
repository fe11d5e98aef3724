#include "edgechain/roadgraph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

namespace edgechain::road {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Uniform grids keep sums exact, but user weights need slack.
constexpr double kEps = 1e-9;
}  // namespace

NodeId RoadGraph::add_node(contracts::GeoPoint at, std::string zone) {
    nodes_.push_back(NodeInfo{at, std::move(zone), {}});
    return static_cast<NodeId>(nodes_.size() - 1);
}

void RoadGraph::add_edge(NodeId a, NodeId b, double weight) {
    if (a == b) throw std::invalid_argument("self-loop edge");
    if (weight <= 0.0) throw std::invalid_argument("edge weight must be positive");
    EdgeId e = EdgeId::of(a, b);
    if (base_weight_.emplace(e, weight).second) {
        auto insert_sorted = [](std::vector<NodeId>& v, NodeId n) {
            v.insert(std::lower_bound(v.begin(), v.end(), n), n);
        };
        insert_sorted(nodes_.at(a).adj, b);
        insert_sorted(nodes_.at(b).adj, a);
    }
}

double RoadGraph::weight(EdgeId e) const {
    double base = base_weight_.at(e);
    return penalized_.count(e) ? base * penalty_factor : base;
}

void RoadGraph::set_penalized(EdgeId e, bool on) {
    if (!has_edge(e)) throw std::invalid_argument("unknown edge");
    if (on)
        penalized_.insert(e);
    else
        penalized_.erase(e);
}

RoadGraph make_grid(int width, int height, const std::vector<std::string>& zones,
                    contracts::GeoPoint origin, double spacing) {
    if (width < 1 || height < 1 || zones.empty())
        throw std::invalid_argument("grid needs positive dimensions and at least one zone");
    RoadGraph g;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            size_t stripe = static_cast<size_t>(x) * zones.size() / static_cast<size_t>(width);
            g.add_node({origin.lat + y * spacing, origin.lon + x * spacing}, zones[stripe]);
        }
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            NodeId n = y * width + x;
            if (x + 1 < width) g.add_edge(n, n + 1);
            if (y + 1 < height) g.add_edge(n, n + width);
        }
    }
    return g;
}

std::vector<NodeId> plan_route(const RoadGraph& g, NodeId from, NodeId to) {
    if (from < 0 || to < 0 || static_cast<size_t>(from) >= g.node_count() ||
        static_cast<size_t>(to) >= g.node_count())
        throw std::invalid_argument("node out of range");
    if (from == to) return {};

    // Distance-to-target from every node, then a greedy forward walk that
    // always takes the smallest-id neighbour still on a shortest path: that
    // yields the lexicographically smallest minimum-weight node sequence.
    std::vector<double> dist(g.node_count(), kInf);
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[static_cast<size_t>(to)] = 0.0;
    heap.push({0.0, to});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[static_cast<size_t>(u)]) continue;
        for (NodeId v : g.neighbors(u)) {
            double nd = d + g.weight(EdgeId::of(u, v));
            if (nd < dist[static_cast<size_t>(v)]) {
                dist[static_cast<size_t>(v)] = nd;
                heap.push({nd, v});
            }
        }
    }
    if (dist[static_cast<size_t>(from)] == kInf) throw Unreachable(from, to);

    std::vector<NodeId> path{from};
    NodeId u = from;
    while (u != to) {
        NodeId next = -1;
        for (NodeId v : g.neighbors(u)) {  // sorted: first hit is smallest id
            double w = g.weight(EdgeId::of(u, v));
            if (std::abs(w + dist[static_cast<size_t>(v)] - dist[static_cast<size_t>(u)]) <=
                kEps) {
                next = v;
                break;
            }
        }
        if (next < 0) throw Unreachable(from, to);  // cannot happen
        path.push_back(next);
        u = next;
    }
    return path;
}

std::vector<NodeId> plan_route_exhaustive(const RoadGraph& g, NodeId from, NodeId to) {
    if (from == to) return {};
    std::vector<NodeId> best;
    double best_cost = kInf;
    std::vector<NodeId> cur{from};
    std::vector<bool> used(g.node_count(), false);
    used[static_cast<size_t>(from)] = true;

    auto consider = [&](double cost) {
        if (cost < best_cost - kEps || (cost <= best_cost + kEps && (best.empty() || cur < best))) {
            best = cur;
            best_cost = std::min(best_cost, cost);
        }
    };
    std::function<void(NodeId, double)> dfs = [&](NodeId u, double cost) {
        if (cost > best_cost + kEps) return;  // prune: weights positive
        if (u == to) {
            consider(cost);
            return;
        }
        for (NodeId v : g.neighbors(u)) {
            if (used[static_cast<size_t>(v)]) continue;
            used[static_cast<size_t>(v)] = true;
            cur.push_back(v);
            dfs(v, cost + g.weight(EdgeId::of(u, v)));
            cur.pop_back();
            used[static_cast<size_t>(v)] = false;
        }
    };
    dfs(from, 0.0);
    if (best.empty()) throw Unreachable(from, to);
    return best;
}

EdgeId nearest_edge(const RoadGraph& g, contracts::GeoPoint p) {
    if (g.edges().empty()) throw std::invalid_argument("graph has no edges");
    EdgeId best{};
    double best_d = kInf;
    for (const auto& [e, w] : g.edges()) {
        (void)w;
        const contracts::GeoPoint& a = g.position(e.a);
        const contracts::GeoPoint& b = g.position(e.b);
        double vx = b.lat - a.lat, vy = b.lon - a.lon;
        double wx = p.lat - a.lat, wy = p.lon - a.lon;
        double len2 = vx * vx + vy * vy;
        double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
        double dx = wx - t * vx, dy = wy - t * vy;
        double d = dx * dx + dy * dy;
        if (d < best_d) {  // strict: ties keep the smaller edge id
            best_d = d;
            best = e;
        }
    }
    return best;
}

contracts::GeoPoint edge_midpoint(const RoadGraph& g, EdgeId e) {
    const contracts::GeoPoint& a = g.position(e.a);
    const contracts::GeoPoint& b = g.position(e.b);
    return {(a.lat + b.lat) / 2.0, (a.lon + b.lon) / 2.0};
}

bool route_uses(const std::vector<NodeId>& route, EdgeId e) {
    for (size_t i = 0; i + 1 < route.size(); ++i)
        if (EdgeId::of(route[i], route[i + 1]) == e) return true;
    return false;
}

}  // namespace edgechain::road
