#pragma once

#include <compare>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgechain/contracts.hpp"

namespace edgechain::road {

using NodeId = int32_t;

/// Undirected edge, stored normalized (a < b).
struct EdgeId {
    NodeId a = 0;
    NodeId b = 0;

    static EdgeId of(NodeId x, NodeId y) { return x < y ? EdgeId{x, y} : EdgeId{y, x}; }

    bool operator==(const EdgeId&) const = default;
    auto operator<=>(const EdgeId&) const = default;
};

struct Unreachable : std::runtime_error {
    Unreachable(NodeId from, NodeId to)
        : std::runtime_error("no route from node " + std::to_string(from) + " to node " +
                             std::to_string(to)) {}
};

/// Weighted road map with per-edge incident penalties. Penalized edges stay
/// usable at `penalty_factor` times their base weight, so routing degrades
/// instead of partitioning the map.
class RoadGraph {
public:
    double penalty_factor = 10.0;

    NodeId add_node(contracts::GeoPoint at, std::string zone);
    void add_edge(NodeId a, NodeId b, double weight = 1.0);

    size_t node_count() const { return nodes_.size(); }
    const contracts::GeoPoint& position(NodeId n) const { return nodes_.at(n).pos; }
    const std::string& zone_of(NodeId n) const { return nodes_.at(n).zone; }
    const std::vector<NodeId>& neighbors(NodeId n) const { return nodes_.at(n).adj; }

    bool has_edge(EdgeId e) const { return base_weight_.count(e) > 0; }
    /// Base weight times the penalty factor if penalized.
    double weight(EdgeId e) const;

    void set_penalized(EdgeId e, bool on);
    bool penalized(EdgeId e) const { return penalized_.count(e) > 0; }
    const std::set<EdgeId>& penalized_edges() const { return penalized_; }
    const std::map<EdgeId, double>& edges() const { return base_weight_; }

private:
    struct NodeInfo {
        contracts::GeoPoint pos;
        std::string zone;
        std::vector<NodeId> adj;  // kept sorted
    };
    std::vector<NodeInfo> nodes_;
    std::map<EdgeId, double> base_weight_;
    std::set<EdgeId> penalized_;
};

/// width x height 4-neighbour grid, unit weights, nodes numbered row-major
/// (id = y * width + x). Zones tile the grid into vertical stripes named
/// left to right.
RoadGraph make_grid(int width, int height, const std::vector<std::string>& zones,
                    contracts::GeoPoint origin = {48.0, 11.0}, double spacing = 0.01);

/// Minimum-weight path from `from` to `to`, inclusive of both endpoints;
/// ties broken by lexicographically smallest node sequence. Empty when
/// from == to. Throws Unreachable.
std::vector<NodeId> plan_route(const RoadGraph& g, NodeId from, NodeId to);

/// Reference implementation by exhaustive enumeration of simple paths; only
/// viable on small graphs. Same contract as plan_route.
std::vector<NodeId> plan_route_exhaustive(const RoadGraph& g, NodeId from, NodeId to);

/// Edge closest to the point (Euclidean point-to-segment distance in
/// coordinate space); ties go to the smaller edge id.
EdgeId nearest_edge(const RoadGraph& g, contracts::GeoPoint p);

/// Midpoint of an edge, for staging incidents "on" it.
contracts::GeoPoint edge_midpoint(const RoadGraph& g, EdgeId e);

bool route_uses(const std::vector<NodeId>& route, EdgeId e);

}  // namespace edgechain::road
