#pragma once

#include <deque>
#include <optional>

#include "cavsim/fd.hpp"
#include "cavsim/types.hpp"

namespace cavsim {

struct DensitySample {
    double t = 0.0; // s
    double k = 0.0; // veh/m
};

/// Live density state of one edge: current value plus a bounded history of
/// sensor samples used for rate estimation.
struct EdgeTrafficState {
    EdgeId edge = kInvalidEdge;
    double k = 0.0;
    std::deque<DensitySample> history;
    double rate = 0.0; // veh/m per s, positive = density increasing
    std::size_t history_capacity = 64;

    void push_sample(double t, double k_measured);
};

struct RatePrediction {
    double t_c_remaining = kInfiniteTime; // s until k reaches k_c; 0 if already there
    double r_used = 0.0;
    double k_at_prediction = 0.0;
};

struct RateBounds {
    double r_min = 0.0;
    double r_max = 0.0;
};

struct TcBounds {
    double t_c_lo = 0.0;
    double t_c_hi = 0.0;
};

/// Two-point density-change rate over the most recent samples spanning at
/// least `window` seconds. Positive means density is increasing. Empty when
/// the history is too short.
std::optional<double> estimate_rate(const std::deque<DensitySample>& history,
                                    double window);

/// Remaining time until the edge reaches critical density under constant-rate
/// extrapolation. Zero when already at or above k_c, infinite when the
/// density is not increasing.
RatePrediction predict_time_to_critical(const EdgeTrafficState& state,
                                        const FdParams& fd);

/// Magnitude of the crossing-time prediction error induced by a density
/// measurement error epsilon at rate r. Empty when r == 0.
std::optional<double> prediction_error_magnitude(double epsilon, double r);

/// Interval that must contain the true crossing time when the rate stays
/// inside [r_min, r_max]. Upper bound is infinite for nonpositive r_min.
TcBounds t_c_bounds(double k0, double k_c, double t0, const RateBounds& bounds);

} // namespace cavsim
