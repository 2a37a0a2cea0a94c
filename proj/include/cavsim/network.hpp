#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cavsim/fd.hpp"
#include "cavsim/types.hpp"

namespace cavsim {

struct Edge {
    EdgeId id = kInvalidEdge;
    NodeId from = kInvalidNode;
    NodeId to = kInvalidNode;
    double length = 0.0;          // m
    double free_flow_speed = 0.0; // m/s
    FdParams fd;

    double free_flow_travel_time() const { return length / free_flow_speed; }
};

/// One conflict point between two approaches of a signal-free intersection.
/// Distances are measured from each approach's control-zone entry.
struct ConflictPoint {
    EdgeId approach_a = kInvalidEdge;
    EdgeId approach_b = kInvalidEdge;
    double dist_a = 0.0; // m
    double dist_b = 0.0; // m
};

struct ControlZoneSpec {
    NodeId node = kInvalidNode;
    double zone_length = 0.0; // m, per approach
    std::vector<ConflictPoint> conflicts;
};

struct VehicleLimits {
    double u_min = -3.0; // m/s^2
    double u_max = 3.0;  // m/s^2
    double v_min = 1.0;  // m/s
    double v_max = 15.0; // m/s
};

struct DemandEntry {
    NodeId origin = kInvalidNode;
    NodeId destination = kInvalidNode;
    double entry_time = 0.0; // s
    std::optional<VehicleLimits> limits; // overrides the global limits
};

struct SafetyParams {
    double gamma_s = 2.0; // standstill distance m
    double phi = 0.5;     // reaction time s
    double t_h = 1.5;     // conflict-point headway s
};

struct UncertaintyBounds {
    double e_max = 0.0; // s
    double f_max = 0.0; // m
    double g_max = 0.0; // m/s
};

struct SolverConfig {
    double w_time = 1.0;        // final-time weight in the constrained fallback
    double dt = 0.1;            // exit-time search increment s
    double sample_step = 0.1;   // constraint sampling step s
};

struct CoordinationConfig {
    VehicleLimits limits;
    SafetyParams safety;
    UncertaintyBounds uncertainty;
    SolverConfig solver;
};

enum class WBaseMode { FreeFlowTravelTime, ConstantOne };

struct WeightPolicy {
    WBaseMode w_base_mode = WBaseMode::FreeFlowTravelTime;
    double T_thres = 2.0;  // s
    double gamma_w = 0.5;  // weight per second of predicted margin shortfall
};

struct RdConfig {
    double replan_period = 10.0;       // s; <= 0 disables periodic replanning
    double tc_change_threshold = 5.0;  // s
    double rate_window = 10.0;         // s, density-rate estimation window
};

struct RoutingConfig {
    WeightPolicy policy;
    RdConfig rd;
};

struct SimConfig {
    double step = 0.1;          // s
    double horizon = 3600.0;    // s
    double sensor_period = 1.0; // s
    double noise_eps_max = 0.0; // veh/m, uniform density measurement noise
    std::uint64_t seed = 0;
};

struct NetworkGraph {
    std::vector<Edge> edges;       // sorted by id
    std::vector<NodeId> nodes;     // sorted
    // node -> outgoing (edge, head) pairs, sorted by edge id
    std::map<NodeId, std::vector<std::pair<EdgeId, NodeId>>> adjacency;

    const Edge& edge(EdgeId id) const;
    bool has_node(NodeId id) const;
    const std::vector<std::pair<EdgeId, NodeId>>& neighbors(NodeId node) const;
};

struct Scenario {
    NetworkGraph graph;
    std::vector<ControlZoneSpec> zones; // sorted by node
    std::vector<DemandEntry> demand;    // sorted by (entry_time, origin, destination)
    RoutingConfig routing;
    CoordinationConfig coordination;
    SimConfig sim;

    const ControlZoneSpec* zone_at(NodeId node) const;
};

class ScenarioParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ScenarioValidationError : public std::runtime_error {
public:
    explicit ScenarioValidationError(std::vector<std::string> problems);
    std::vector<std::string> problems;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
std::string serialize_scenario(const Scenario& s);

/// Stable content hash of the serialized scenario, used to pair runs in
/// `compare` and to stamp metrics output.
std::string scenario_hash(const Scenario& s);

} // namespace cavsim
