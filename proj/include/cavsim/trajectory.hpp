#pragma once

#include <optional>
#include <vector>

#include "cavsim/types.hpp"

namespace cavsim {

/// One polynomial piece of a planned control-zone trajectory. Control is
/// linear in time, so position is cubic. Coefficients are local to t_start.
struct TrajectorySegment {
    double t_start = 0.0;
    double t_end = 0.0;
    double p0 = 0.0;   // m at t_start
    double v0 = 0.0;   // m/s at t_start
    double u0 = 0.0;   // m/s^2 at t_start
    double jerk = 0.0; // m/s^3, slope of the control

    double position(double t) const;
    double speed(double t) const;
    double control(double t) const;
    double energy() const; // 0.5 * integral of u^2 over the segment
};

/// Piecewise-cubic position trajectory through a control zone. Position and
/// speed are continuous across segment boundaries. Queries before t0 hold the
/// initial state; queries after t_f extrapolate at the exit speed, which is
/// what rear-end checks against an already-exited predecessor need.
struct Trajectory {
    std::vector<TrajectorySegment> segments;

    bool empty() const { return segments.empty(); }
    double t0() const { return segments.front().t_start; }
    double t_f() const { return segments.back().t_end; }

    double position(double t) const;
    double speed(double t) const;
    double control(double t) const;
    double energy() const;

    /// Earliest time at which the trajectory reaches position x. Requires
    /// speed > 0 throughout (guaranteed by v_min > 0). Empty if x is never
    /// reached before t_f.
    std::optional<double> time_at_position(double x) const;
};

} // namespace cavsim
