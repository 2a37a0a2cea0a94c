#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "cavsim/coordination.hpp"
#include "cavsim/network.hpp"
#include "cavsim/routing.hpp"

namespace cavsim {

enum class ControllerKind { Baseline, Proposed };

struct VehicleRecord {
    CavId id = 0;
    double entry_time = 0.0;
    double exit_time = -1.0;
    double free_flow_tt = 0.0; // free-flow cost of the entry-time shortest route
    double zone_energy = 0.0;  // 0.5 * integral u^2 inside control zones
    double distance = 0.0;
    std::vector<EdgeId> route_history;
    bool completed = false;

    double travel_time() const { return exit_time - entry_time; }
    double delay() const { return travel_time() - free_flow_tt; }
};

struct EdgeFlowSample {
    double t = 0.0;
    EdgeId edge = kInvalidEdge;
    double k = 0.0;
    double q = 0.0;
};

struct MetricsReport {
    double ttt = 0.0;
    double total_delay = 0.0;
    double total_energy = 0.0;
    double time_above_critical = 0.0; // edge-seconds with k > k_c
    int spawned = 0;
    int completed = 0;
    int active = 0;
    int incomplete = 0;
    std::string scenario_hash;
    std::uint64_t seed = 0;
    std::vector<VehicleRecord> vehicles;
    std::vector<EdgeFlowSample> edge_series;
};

/// Stable JSON serialization of a report (scenario hash, seed, aggregates and
/// per-vehicle rows; the per-edge series goes to edges.csv instead).
std::string metrics_to_json(const MetricsReport& report);

struct SimEvent {
    double t = 0.0;
    std::string type;
    std::string detail;
};

struct TrajectoryRow {
    CavId cav = 0;
    double t = 0.0, p = 0.0, v = 0.0, u = 0.0;
};

/// Thrown when the runtime safety audit detects a constraint violation.
/// This is a bug trap, not a recoverable condition.
class SafetyAuditError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Deterministic time-stepped world. Mesoscopic fundamental-diagram movement
/// on links, committed trajectories inside control zones.
class World {
public:
    World(const Scenario& scenario, ControllerKind controller, const SimConfig& config,
          bool audit = false, bool dump_trajectories = false);

    void step();
    /// True per-edge densities (vehicle count over length), as the sensors see
    /// them before noise.
    std::map<EdgeId, double> sense_densities() const;

    double time() const { return t_; }
    bool done() const;
    MetricsReport report() const;
    const std::vector<SimEvent>& events() const { return events_; }
    const std::vector<TrajectoryRow>& trajectory_rows() const { return traj_rows_; }
    const std::map<EdgeId, EdgeTrafficState>& edge_states() const { return edge_states_; }

private:
    enum class Phase { Pending, OnLink, Queued, InZone, Done };

    struct Vehicle {
        CavId id = 0;
        DemandEntry demand;
        VehicleLimits limits;
        Phase phase = Phase::Pending;
        Route route;           // full remaining route incl. current edge
        std::size_t route_idx = 0;
        double pos = 0.0;      // m along current edge
        Trajectory zone_traj;
        VehicleRecord rec;

        EdgeId current_edge() const { return route.edges[route_idx]; }
    };

    struct ZoneCommitment {
        CavId cav = 0;
        EdgeId approach = kInvalidEdge;
        Trajectory traj;
    };

    void sense_and_control();
    void spawn_due();
    void move_vehicles();
    void update_densities();
    void record_metrics_samples();
    void audit_zones() const;
    bool try_enter_zone(Vehicle& veh, const ControlZoneSpec& zone, double t_entry);
    void cross_node(Vehicle& veh, double at_time);
    std::vector<ZoneNeighbor> zone_neighbors(const ControlZoneSpec& zone,
                                             EdgeId approach) const;
    Route route_for_entry(NodeId origin, NodeId destination) const;
    double edge_density(EdgeId e) const;
    double zone_boundary(const Edge& e, const ControlZoneSpec& zone) const;

    Scenario scenario_;
    ControllerKind controller_;
    SimConfig config_;
    bool audit_ = false;
    bool dump_traj_ = false;

    double t_ = 0.0;
    std::vector<Vehicle> vehicles_; // sorted by id == demand order
    std::size_t next_pending_ = 0;
    std::map<EdgeId, EdgeTrafficState> edge_states_;
    std::map<EdgeId, int> edge_counts_;
    std::map<NodeId, std::vector<ZoneCommitment>> zone_commitments_;
    EdgeWeights current_weights_;
    EdgeWeights free_flow_tt_weights_; // always seconds, for delay accounting
    std::map<EdgeId, double> tc_at_last_plan_;
    double last_replan_ = 0.0;
    double next_sensor_ = 0.0;
    std::mt19937_64 rng_;
    TightenedConstraints tightened_;
    std::vector<SimEvent> events_;
    std::vector<TrajectoryRow> traj_rows_;
    std::vector<EdgeFlowSample> edge_series_;
    double time_above_critical_ = 0.0;
};

struct SimOutputs {
    MetricsReport metrics;
    std::string edges_csv;
    std::string events_csv;
    std::string trajectories_csv;
};

MetricsReport run(const Scenario& scenario, ControllerKind controller,
                  const SimConfig& config);

SimOutputs run_with_outputs(const Scenario& scenario, ControllerKind controller,
                            const SimConfig& config, bool audit = false,
                            bool dump_trajectories = false);

} // namespace cavsim
