#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "cavsim/routing.hpp"
#include "oracles.hpp"

using namespace cavsim;

namespace {

NetworkGraph make_graph(const std::vector<std::tuple<EdgeId, NodeId, NodeId>>& edges) {
    NetworkGraph g;
    for (const auto& [id, from, to] : edges) {
        Edge e;
        e.id = id;
        e.from = from;
        e.to = to;
        e.length = 100.0;
        e.free_flow_speed = 10.0;
        e.fd = {0.5, 0.05, 0.2};
        g.edges.push_back(e);
        g.nodes.push_back(from);
        g.nodes.push_back(to);
    }
    std::sort(g.edges.begin(), g.edges.end(),
              [](const Edge& a, const Edge& b) { return a.id < b.id; });
    std::sort(g.nodes.begin(), g.nodes.end());
    g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());
    for (NodeId n : g.nodes) g.adjacency[n] = {};
    for (const Edge& e : g.edges) g.adjacency[e.from].emplace_back(e.id, e.to);
    for (auto& [n, adj] : g.adjacency) std::sort(adj.begin(), adj.end());
    return g;
}

RatePrediction pred(double remaining) {
    RatePrediction p;
    p.t_c_remaining = remaining;
    return p;
}

} // namespace

TEST_CASE("dynamic_weight follows the threshold law") {
    WeightPolicy policy;
    policy.w_base_mode = WBaseMode::ConstantOne;
    policy.T_thres = 2.0;
    policy.gamma_w = 0.5;
    Edge e;
    e.length = 100;
    e.free_flow_speed = 10;

    CHECK(dynamic_weight(policy, e, pred(kInfiniteTime)) == 1.0);
    CHECK(dynamic_weight(policy, e, pred(1.0)) == doctest::Approx(1.5));
    CHECK(dynamic_weight(policy, e, pred(0.0)) ==
          doctest::Approx(1.0 + 0.5 * 2.0)); // maximum penalty at k >= k_c

    // continuity at T_thres and monotone non-increasing in remaining time
    CHECK(dynamic_weight(policy, e, pred(2.0)) ==
          doctest::Approx(dynamic_weight(policy, e, pred(2.0 + 1e-12))));
    double prev = kInfiniteTime;
    for (double r : {0.0, 0.5, 1.0, 1.9, 2.0, 2.5, 10.0}) {
        const double w = dynamic_weight(policy, e, pred(r));
        if (std::isfinite(prev)) CHECK(w <= prev);
        prev = w;
    }

    policy.w_base_mode = WBaseMode::FreeFlowTravelTime;
    CHECK(dynamic_weight(policy, e, pred(kInfiniteTime)) == doctest::Approx(10.0));
}

TEST_CASE("shortest_path hand cases") {
    // two parallel edges
    auto g = make_graph({{1, 1, 2}, {2, 1, 2}});
    EdgeWeights w{{1, 3.0}, {2, 5.0}};
    auto r = shortest_path(g, w, 1, 2);
    REQUIRE(r);
    CHECK(r->planned_cost == 3.0);
    CHECK(r->edges == std::vector<EdgeId>{1});

    // triangle
    auto tri = make_graph({{1, 1, 2}, {2, 2, 3}, {3, 1, 3}});
    EdgeWeights tw{{1, 1.0}, {2, 1.0}, {3, 3.0}};
    auto tr = shortest_path(tri, tw, 1, 3);
    REQUIRE(tr);
    CHECK(tr->planned_cost == 2.0);
    CHECK(tr->nodes == std::vector<NodeId>{1, 2, 3});

    // unreachable
    auto dis = make_graph({{1, 1, 2}, {2, 3, 4}});
    CHECK(!shortest_path(dis, EdgeWeights{{1, 1.0}, {2, 1.0}}, 1, 4));
}

TEST_CASE("shortest_path ties break to the lexicographically smallest nodes") {
    // 1->2->4 and 1->3->4 have equal cost
    auto g = make_graph({{1, 1, 2}, {2, 1, 3}, {3, 2, 4}, {4, 3, 4}});
    EdgeWeights w{{1, 1.0}, {2, 1.0}, {3, 1.0}, {4, 1.0}};
    auto r = shortest_path(g, w, 1, 4);
    REQUIRE(r);
    CHECK(r->nodes == std::vector<NodeId>{1, 2, 4});
}

TEST_CASE("shortest_path equals brute force and bellman-ford on random graphs") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> dn(2, 8);
        const int n = dn(rng);
        std::uniform_int_distribution<int> dm(1, 20), dnode(1, n);
        std::uniform_real_distribution<double> dw(0.1, 10.0);
        const int m = dm(rng);
        std::vector<std::tuple<EdgeId, NodeId, NodeId>> edges;
        EdgeWeights w;
        for (int i = 0; i < m; ++i) {
            NodeId a = dnode(rng), b = dnode(rng);
            if (a == b) continue;
            edges.emplace_back(i + 1, a, b);
            w[i + 1] = dw(rng);
        }
        if (edges.empty()) continue;
        auto g = make_graph(edges);
        NodeId o = g.nodes[std::uniform_int_distribution<std::size_t>(
            0, g.nodes.size() - 1)(rng)];
        NodeId d = g.nodes[std::uniform_int_distribution<std::size_t>(
            0, g.nodes.size() - 1)(rng)];
        if (o == d) continue;

        auto dij = shortest_path(g, w, o, d);
        auto brute = oracles::brute_force_cost(g, w, o, d);
        auto bf = oracles::bellman_ford_cost(g, w, o, d);
        CHECK(dij.has_value() == brute.has_value());
        CHECK(dij.has_value() == bf.has_value());
        if (dij) {
            CHECK(dij->planned_cost == doctest::Approx(*brute).epsilon(1e-12));
            CHECK(dij->planned_cost == doctest::Approx(*bf).epsilon(1e-12));
        }
    }
}

TEST_CASE("shortest_path is invariant under uniform weight scaling") {
    auto g = make_graph({{1, 1, 2}, {2, 2, 4}, {3, 1, 3}, {4, 3, 4}, {5, 2, 3}});
    EdgeWeights w{{1, 2.0}, {2, 7.0}, {3, 4.0}, {4, 3.0}, {5, 0.5}};
    auto r1 = shortest_path(g, w, 1, 4);
    EdgeWeights scaled;
    for (auto& [k, v] : w) scaled[k] = 13.7 * v;
    auto r2 = shortest_path(g, scaled, 1, 4);
    REQUIRE(r1);
    REQUIRE(r2);
    CHECK(r1->nodes == r2->nodes);
    CHECK(r2->planned_cost == doctest::Approx(13.7 * r1->planned_cost));
}

TEST_CASE("flag_edges uses a strict threshold") {
    std::map<EdgeId, RatePrediction> preds;
    preds[1] = pred(kInfiniteTime);
    preds[2] = pred(0.5);
    preds[3] = pred(2.0); // exactly T_thres: not flagged
    auto flagged = flag_edges(preds, 2.0);
    CHECK(flagged == std::set<EdgeId>{2});

    std::map<EdgeId, RatePrediction> calm{{1, pred(kInfiniteTime)},
                                          {2, pred(kInfiniteTime)}};
    CHECK(flag_edges(calm, 2.0).empty());
}

TEST_CASE("replan_all") {
    // diamond: 1->2->4 short, 1->3->4 long
    auto g = make_graph({{1, 1, 2}, {2, 2, 4}, {3, 1, 3}, {4, 3, 4}});
    // shorter edges on the top path
    for (Edge& e : g.edges)
        e.length = (e.id == 1 || e.id == 2) ? 100.0 : 120.0;

    WeightPolicy policy;
    policy.T_thres = 2.0;
    policy.gamma_w = 5.0;

    std::map<EdgeId, EdgeTrafficState> states;
    for (const Edge& e : g.edges) {
        EdgeTrafficState st;
        st.edge = e.id;
        states[e.id] = st;
    }

    ActiveCav cav;
    cav.id = 1;
    cav.at_node = 1;
    cav.destination = 4;

    SUBCASE("no flagged edge reproduces the free-flow route") {
        auto result = replan_all(g, states, policy, {cav});
        CHECK(result.flagged.empty());
        CHECK(result.routes.at(1).nodes == std::vector<NodeId>{1, 2, 4});
        CHECK(result.routes.at(1).planned_cost == doctest::Approx(20.0));
    }

    SUBCASE("a congesting edge on the shortest path triggers a switch") {
        states[2].k = 0.049; // close to k_c = 0.05
        states[2].rate = 0.001; // 1 s to critical, below T_thres
        auto result = replan_all(g, states, policy, {cav});
        CHECK(result.flagged == std::set<EdgeId>{2});
        // penalty 5.0 * (2 - 1) = 5 s makes the top path cost 25 > 24
        CHECK(result.routes.at(1).nodes == std::vector<NodeId>{1, 3, 4});
        CHECK(result.route_changes == 1);
    }

    SUBCASE("one edge from the destination the route never changes") {
        states[2].k = 0.049;
        states[2].rate = 0.001;
        ActiveCav last;
        last.id = 2;
        last.at_node = 2;
        last.destination = 4;
        last.current_route.nodes = {2, 4};
        last.current_route.edges = {2};
        auto result = replan_all(g, states, policy, {last});
        CHECK(result.routes.at(2).nodes == std::vector<NodeId>{2, 4});
    }

    SUBCASE("gamma_w = 0 reproduces static baseline routes") {
        states[2].k = 0.049;
        states[2].rate = 0.001;
        policy.gamma_w = 0.0;
        auto result = replan_all(g, states, policy, {cav});
        CHECK(result.routes.at(1).nodes == std::vector<NodeId>{1, 2, 4});
        auto ff = shortest_path(g, free_flow_weights(g, policy), 1, 4);
        CHECK(result.routes.at(1).planned_cost == doctest::Approx(ff->planned_cost));
    }
}
