#include "cavsim/routing.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace cavsim {

double base_weight(const WeightPolicy& policy, const Edge& edge) {
    return policy.w_base_mode == WBaseMode::FreeFlowTravelTime
               ? edge.free_flow_travel_time()
               : 1.0;
}

double dynamic_weight(const WeightPolicy& policy, const Edge& edge,
                      const RatePrediction& prediction) {
    const double w_base = base_weight(policy, edge);
    const double remaining = prediction.t_c_remaining;
    if (remaining > policy.T_thres) return w_base;
    return w_base + policy.gamma_w * (policy.T_thres - remaining);
}

namespace {

std::vector<NodeId> walk_back(const std::map<NodeId, NodeId>& prev, NodeId origin,
                              NodeId tail) {
    std::vector<NodeId> seq{tail};
    while (tail != origin) {
        tail = prev.at(tail);
        seq.push_back(tail);
    }
    std::reverse(seq.begin(), seq.end());
    return seq;
}

} // namespace

std::optional<Route> shortest_path(const NetworkGraph& graph,
                                   const EdgeWeights& weights,
                                   NodeId origin, NodeId destination) {
    if (origin == destination)
        throw std::invalid_argument("shortest_path: origin equals destination");
    if (!graph.has_node(origin) || !graph.has_node(destination))
        throw std::out_of_range("shortest_path: unknown origin or destination");

    std::map<NodeId, double> dist;
    std::map<NodeId, NodeId> prev;
    std::map<NodeId, EdgeId> prev_edge;
    dist[origin] = 0.0;

    using QItem = std::pair<double, NodeId>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> queue;
    queue.emplace(0.0, origin);
    std::set<NodeId> settled;

    while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (settled.count(u)) continue;
        settled.insert(u);
        for (const auto& [eid, v] : graph.neighbors(u)) {
            auto wit = weights.find(eid);
            if (wit == weights.end())
                throw std::invalid_argument("shortest_path: missing weight for edge " +
                                            std::to_string(eid));
            if (!(wit->second >= 0.0) || std::isinf(wit->second))
                throw std::invalid_argument("shortest_path: weight must be finite and >= 0");
            const double nd = d + wit->second;
            auto dit = dist.find(v);
            bool better = dit == dist.end() || nd < dit->second;
            if (!better && dit != dist.end() && nd == dit->second && prev.count(v)) {
                // Equal cost: keep the lexicographically smaller node sequence.
                auto candidate = walk_back(prev, origin, u);
                candidate.push_back(v);
                const auto incumbent = walk_back(prev, origin, v);
                better = candidate < incumbent;
            }
            if (better) {
                dist[v] = nd;
                prev[v] = u;
                prev_edge[v] = eid;
                queue.emplace(nd, v);
            }
        }
    }

    if (!dist.count(destination)) return std::nullopt;

    Route route;
    route.planned_cost = dist[destination];
    route.nodes = walk_back(prev, origin, destination);
    for (std::size_t i = 1; i < route.nodes.size(); ++i)
        route.edges.push_back(prev_edge.at(route.nodes[i]));
    return route;
}

std::set<EdgeId> flag_edges(const std::map<EdgeId, RatePrediction>& predictions,
                            double T_thres) {
    std::set<EdgeId> flagged;
    for (const auto& [eid, pred] : predictions)
        if (pred.t_c_remaining < T_thres) flagged.insert(eid);
    return flagged;
}

EdgeWeights free_flow_weights(const NetworkGraph& graph, const WeightPolicy& policy) {
    EdgeWeights w;
    for (const Edge& e : graph.edges) w[e.id] = base_weight(policy, e);
    return w;
}

ReplanResult replan_all(const NetworkGraph& graph,
                        const std::map<EdgeId, EdgeTrafficState>& states,
                        const WeightPolicy& policy,
                        const std::vector<ActiveCav>& active_cavs) {
    ReplanResult result;

    // Steps of the re-routing pass: predict, weight, update graph weights,
    // then one shortest-path query per CAV.
    EdgeWeights weights;
    for (const Edge& e : graph.edges) {
        RatePrediction pred; // no state recorded yet -> uncongested
        auto it = states.find(e.id);
        if (it != states.end()) pred = predict_time_to_critical(it->second, e.fd);
        result.predictions[e.id] = pred;
        weights[e.id] = dynamic_weight(policy, e, pred);
    }
    result.flagged = flag_edges(result.predictions, policy.T_thres);

    for (const ActiveCav& cav : active_cavs) {
        if (cav.at_node == cav.destination) {
            result.routes[cav.id] = cav.current_route;
            continue;
        }
        auto route = shortest_path(graph, weights, cav.at_node, cav.destination);
        if (!route) {
            result.routes[cav.id] = cav.current_route;
            result.no_route.push_back(cav.id);
            continue;
        }
        if (route->nodes != cav.current_route.nodes) ++result.route_changes;
        result.routes[cav.id] = std::move(*route);
    }
    return result;
}

} // namespace cavsim
