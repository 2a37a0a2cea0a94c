#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "cavsim/flow.hpp"
#include "cavsim/network.hpp"

namespace cavsim {

struct Route {
    std::vector<NodeId> nodes;
    std::vector<EdgeId> edges;
    double planned_cost = 0.0; // s

    bool empty() const { return nodes.empty(); }
};

using EdgeWeights = std::map<EdgeId, double>;

/// Dynamic edge weight: the base weight until the predicted time to
/// critical density drops below T_thres, then a penalty growing linearly as
/// the margin shrinks.
double dynamic_weight(const WeightPolicy& policy, const Edge& edge,
                      const RatePrediction& prediction);

double base_weight(const WeightPolicy& policy, const Edge& edge);

/// Deterministic Dijkstra. Ties in total weight are broken by the
/// lexicographically smallest node-id sequence. Empty when unreachable.
std::optional<Route> shortest_path(const NetworkGraph& graph,
                                   const EdgeWeights& weights,
                                   NodeId origin, NodeId destination);

/// Edges whose predicted time to critical density is strictly below T_thres.
std::set<EdgeId> flag_edges(const std::map<EdgeId, RatePrediction>& predictions,
                            double T_thres);

struct ActiveCav {
    CavId id = 0;
    NodeId at_node = kInvalidNode; // next node on the CAV's path
    NodeId destination = kInvalidNode;
    Route current_route;           // remaining route from at_node
};

struct ReplanResult {
    std::map<CavId, Route> routes;
    std::set<EdgeId> flagged;
    int route_changes = 0;
    std::vector<CavId> no_route; // kept their previous route
    std::map<EdgeId, RatePrediction> predictions;
};

/// One full re-routing pass: predict t_c per edge, recompute dynamic weights,
/// and run a shortest-path query for every active CAV from its next node.
ReplanResult replan_all(const NetworkGraph& graph,
                        const std::map<EdgeId, EdgeTrafficState>& states,
                        const WeightPolicy& policy,
                        const std::vector<ActiveCav>& active_cavs);

/// Static free-flow weights (the baseline controller's weights, also the
/// dynamic weights when nothing is flagged).
EdgeWeights free_flow_weights(const NetworkGraph& graph, const WeightPolicy& policy);

} // namespace cavsim
