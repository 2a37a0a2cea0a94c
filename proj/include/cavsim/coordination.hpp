#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cavsim/network.hpp"
#include "cavsim/trajectory.hpp"

namespace cavsim {

/// Kinematic state of a CAV at its control-zone entry.
struct CavZoneState {
    CavId id = 0;
    double p = 0.0;  // m along the zone path
    double v = 0.0;  // m/s
    double t0 = 0.0; // entry time s
};

struct ExitTimeWindow {
    double t_lo = 0.0; // earliest feasible exit, s
    double t_hi = 0.0; // latest feasible exit, s
};

/// A CAV with a committed trajectory that constrains the one being planned.
struct ZoneNeighbor {
    CavId id = 0;
    Trajectory traj;
    bool same_approach = false;
    // Conflict points shared with the planning CAV: (own distance, their
    // distance) from the respective zone entries.
    std::vector<std::pair<double, double>> conflicts;
};

/// Safety and speed box after worst-case inflation by the uncertainty
/// bounds. Zero bounds return the inputs unchanged.
struct TightenedConstraints {
    SafetyParams safety;
    VehicleLimits limits;
};

TightenedConstraints tightened_constraints(const SafetyParams& safety,
                                           const VehicleLimits& limits,
                                           const UncertaintyBounds& bounds);

/// Closed-form feasible exit-time interval: accelerate-then-cruise gives the
/// earliest exit, decelerate-then-cruise the latest.
ExitTimeWindow exit_time_window(const CavZoneState& state, const VehicleLimits& limits,
                                double zone_length);

/// Minimum-energy trajectory with fixed exit position and free exit speed
/// (control hits zero at t_f, linear in time). Empty when the resulting
/// trajectory violates the control or speed limits.
std::optional<Trajectory> unconstrained_trajectory(const CavZoneState& state,
                                                   double t_f, double zone_length,
                                                   const VehicleLimits& limits);

/// Same cubic without the limit check, for callers that handle violations
/// themselves.
Trajectory unconstrained_trajectory_unchecked(const CavZoneState& state, double t_f,
                                              double zone_length);

/// Grid search over the exit-time window for the smallest exit time whose
/// unconstrained trajectory clears every rear-end and conflict-point
/// constraint against the committed neighbors. Empty when the window is
/// exhausted (the iterative search's failure signal).
std::optional<double> schedule_exit_time(const CavZoneState& state,
                                         const ExitTimeWindow& window,
                                         const std::vector<ZoneNeighbor>& neighbors,
                                         double zone_length,
                                         const SafetyParams& safety,
                                         const VehicleLimits& limits,
                                         const SolverConfig& config);

/// Imposed conflict-point crossing for the constrained fallback.
struct ConflictCrossing {
    double p_n = 0.0; // m, conflict-point distance from zone entry
    double t_c = 0.0; // s, required crossing time
};

struct FallbackResult {
    Trajectory traj;
    bool used_last_resort = false; // root-finder failed, decel-and-cruise profile
    bool projected = false;        // solved trajectory was clamped into bounds
};

/// Energy-plus-weighted-final-time optimal trajectory through a fixed
/// conflict-point crossing: continuous two-branch linear control with a
/// slope change at the crossing time. Always returns a trajectory; failures
/// degrade to a flagged feasible profile.
FallbackResult constrained_fallback(const CavZoneState& state,
                                    const std::vector<ConflictCrossing>& crossings,
                                    double zone_length,
                                    const SafetyParams& safety,
                                    const VehicleLimits& limits,
                                    const SolverConfig& config);

/// Pointwise audit used by tests and the simulation runtime: speed/control
/// bounds on the trajectory plus rear-end and conflict-headway constraints
/// against the given neighbors.
bool check_zone_constraints(const Trajectory& traj,
                            const std::vector<ZoneNeighbor>& neighbors,
                            double zone_length, const SafetyParams& safety,
                            const VehicleLimits& limits, double sample_step,
                            double bound_slack = 1e-6);

} // namespace cavsim
