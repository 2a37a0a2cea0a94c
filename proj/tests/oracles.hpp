#pragma once

// Test-only reference implementations, independent of the library's solvers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "cavsim/network.hpp"
#include "cavsim/routing.hpp"

namespace oracles {

// Exhaustive enumeration of simple paths; returns the minimum total weight.
inline std::optional<double> brute_force_cost(const cavsim::NetworkGraph& g,
                                              const cavsim::EdgeWeights& w,
                                              cavsim::NodeId origin,
                                              cavsim::NodeId destination) {
    std::optional<double> best;
    std::vector<cavsim::NodeId> visited{origin};
    std::function<void(cavsim::NodeId, double)> dfs = [&](cavsim::NodeId u, double cost) {
        if (u == destination) {
            if (!best || cost < *best) best = cost;
            return;
        }
        for (const auto& [eid, v] : g.neighbors(u)) {
            if (std::find(visited.begin(), visited.end(), v) != visited.end()) continue;
            visited.push_back(v);
            dfs(v, cost + w.at(eid));
            visited.pop_back();
        }
    };
    dfs(origin, 0.0);
    return best;
}

inline std::optional<double> bellman_ford_cost(const cavsim::NetworkGraph& g,
                                               const cavsim::EdgeWeights& w,
                                               cavsim::NodeId origin,
                                               cavsim::NodeId destination) {
    std::map<cavsim::NodeId, double> dist;
    dist[origin] = 0.0;
    for (std::size_t i = 0; i + 1 < g.nodes.size(); ++i)
        for (const cavsim::Edge& e : g.edges) {
            auto it = dist.find(e.from);
            if (it == dist.end()) continue;
            const double nd = it->second + w.at(e.id);
            auto jt = dist.find(e.to);
            if (jt == dist.end() || nd < jt->second) dist[e.to] = nd;
        }
    auto it = dist.find(destination);
    if (it == dist.end()) return std::nullopt;
    return it->second;
}

// Discretized minimum-energy oracle: piecewise-constant control on an h grid
// with exact double-integrator updates, terminal position fixed, terminal
// speed free, optionally one interior position equality. Solved via the KKT
// system of the equality-constrained quadratic program (at most 2 constraints,
// eliminated in closed form).
struct QpSolution {
    std::vector<double> u;
    std::vector<double> p; // N+1 samples
    std::vector<double> v;
    double energy = 0.0;
};

inline QpSolution qp_min_energy(double p0, double v0, double target_dist, int n_steps,
                                double h, std::optional<std::pair<int, double>> interior =
                                               std::nullopt) {
    const int N = n_steps;
    // Position at index m as a linear functional of the controls:
    // p_m = p0 + v0 m h + sum_{k<m} u_k h^2 (m - k - 1/2).
    auto row = [&](int m) {
        std::vector<double> a(N, 0.0);
        for (int k = 0; k < m; ++k) a[k] = h * h * (m - k - 0.5);
        return a;
    };
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    A.push_back(row(N));
    b.push_back(target_dist - v0 * N * h);
    if (interior) {
        A.push_back(row(interior->first));
        b.push_back(interior->second - p0 - v0 * interior->first * h);
    }
    const int m = static_cast<int>(A.size());
    // lambda = (A A^T)^{-1} b (the 1/h factors cancel in u = A^T lambda / h
    // against the h in the Gram matrix; fold them together).
    double G[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < N; ++k) G[i][j] += A[i][k] * A[j][k];
    double lam[2] = {0, 0};
    if (m == 1) {
        lam[0] = b[0] / G[0][0];
    } else {
        const double det = G[0][0] * G[1][1] - G[0][1] * G[1][0];
        lam[0] = (b[0] * G[1][1] - G[0][1] * b[1]) / det;
        lam[1] = (G[0][0] * b[1] - b[0] * G[1][0]) / det;
    }
    QpSolution sol;
    sol.u.assign(N, 0.0);
    for (int k = 0; k < N; ++k)
        for (int i = 0; i < m; ++i) sol.u[k] += A[i][k] * lam[i];
    sol.p.assign(N + 1, p0);
    sol.v.assign(N + 1, v0);
    for (int k = 0; k < N; ++k) {
        sol.p[k + 1] = sol.p[k] + sol.v[k] * h + 0.5 * sol.u[k] * h * h;
        sol.v[k + 1] = sol.v[k] + sol.u[k] * h;
        sol.energy += 0.5 * sol.u[k] * sol.u[k] * h;
    }
    return sol;
}

} // namespace oracles
