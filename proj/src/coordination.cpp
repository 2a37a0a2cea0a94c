#include "cavsim/coordination.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cavsim {

TightenedConstraints tightened_constraints(const SafetyParams& safety,
                                           const VehicleLimits& limits,
                                           const UncertaintyBounds& bounds) {
    TightenedConstraints out{safety, limits};
    // Worst-case interval inflation of the affine constraints: position
    // deviations widen the rear-end gap on both sides, time deviations widen
    // the conflict headway on both sides, speed deviations shrink the box.
    out.safety.gamma_s = safety.gamma_s + safety.phi * bounds.g_max + 2.0 * bounds.f_max;
    out.safety.t_h = safety.t_h + 2.0 * bounds.e_max;
    out.limits.v_min = limits.v_min + bounds.g_max;
    out.limits.v_max = limits.v_max - bounds.g_max;
    if (out.limits.v_min > out.limits.v_max)
        throw std::invalid_argument("uncertainty bounds leave an empty speed box");
    return out;
}

ExitTimeWindow exit_time_window(const CavZoneState& state, const VehicleLimits& limits,
                                double zone_length) {
    if (zone_length <= 0.0) throw std::invalid_argument("zone_length must be > 0");
    const double dist = zone_length - state.p;

    auto traversal = [dist](double v0, double u, double v_lim) {
        // Ramp to v_lim at rate u, then cruise. Degenerate ramp when already
        // at the limit.
        const double t_ramp = (v_lim - v0) / u;
        if (t_ramp <= 0.0) return dist / v0; // already at or past the limit
        const double d_ramp = (v_lim * v_lim - v0 * v0) / (2.0 * u);
        if (d_ramp >= dist) {
            // Entire distance covered during the ramp: v0 t + u t^2 / 2 = dist.
            const double disc = v0 * v0 + 2.0 * u * dist;
            return (-v0 + std::sqrt(std::max(disc, 0.0))) / u;
        }
        return t_ramp + (dist - d_ramp) / v_lim;
    };

    ExitTimeWindow w;
    w.t_lo = state.t0 + traversal(state.v, limits.u_max, limits.v_max);
    w.t_hi = state.t0 + traversal(state.v, limits.u_min, limits.v_min);
    return w;
}

Trajectory unconstrained_trajectory_unchecked(const CavZoneState& state, double t_f,
                                              double zone_length) {
    const double T = t_f - state.t0;
    if (T <= 0.0) throw std::invalid_argument("t_f must exceed the entry time");
    const double dist = zone_length - state.p;
    // Linear control u(s) = a (s - T): meets p(T) = L with u(T) = 0.
    const double a = 3.0 * (state.v * T - dist) / (T * T * T);
    Trajectory traj;
    traj.segments.push_back({state.t0, t_f, state.p, state.v, -a * T, a});
    return traj;
}

std::optional<Trajectory> unconstrained_trajectory(const CavZoneState& state,
                                                   double t_f, double zone_length,
                                                   const VehicleLimits& limits) {
    Trajectory traj = unconstrained_trajectory_unchecked(state, t_f, zone_length);
    const TrajectorySegment& seg = traj.segments.front();
    // u is linear with its zero at t_f, and v is monotone on the segment, so
    // endpoint checks cover the whole piece.
    const double u_entry = seg.control(seg.t_start);
    if (u_entry < limits.u_min - 1e-12 || u_entry > limits.u_max + 1e-12)
        return std::nullopt;
    const double v_exit = seg.speed(seg.t_end);
    for (double v : {seg.v0, v_exit})
        if (v < limits.v_min - 1e-12 || v > limits.v_max + 1e-12) return std::nullopt;
    return traj;
}

bool check_zone_constraints(const Trajectory& traj,
                            const std::vector<ZoneNeighbor>& neighbors,
                            double zone_length, const SafetyParams& safety,
                            const VehicleLimits& limits, double sample_step,
                            double bound_slack) {
    const double t0 = traj.t0();
    const double tf = traj.t_f();
    for (double t = t0; t <= tf + 1e-9; t += sample_step) {
        const double tc = std::min(t, tf);
        const double v = traj.speed(tc);
        const double u = traj.control(tc);
        if (v < limits.v_min - bound_slack || v > limits.v_max + bound_slack) return false;
        if (u < limits.u_min - bound_slack || u > limits.u_max + bound_slack) return false;
    }

    for (const ZoneNeighbor& nb : neighbors) {
        if (nb.same_approach) {
            const bool neighbor_ahead = nb.traj.position(t0) >= traj.position(t0);
            for (double t = std::max(t0, nb.traj.t0()); t <= tf + 1e-9; t += sample_step) {
                const double tc = std::min(t, tf);
                if (traj.position(tc) > zone_length + 1e-9) break;
                if (neighbor_ahead) {
                    const double gap = nb.traj.position(tc) - traj.position(tc);
                    if (gap < safety.gamma_s + safety.phi * traj.speed(tc) - bound_slack)
                        return false;
                } else {
                    const double gap = traj.position(tc) - nb.traj.position(tc);
                    if (gap < safety.gamma_s + safety.phi * nb.traj.speed(tc) - bound_slack)
                        return false;
                }
            }
        }
        for (const auto& [own_dist, their_dist] : nb.conflicts) {
            const auto t_own = traj.time_at_position(own_dist);
            const auto t_nb = nb.traj.time_at_position(their_dist);
            if (!t_own || !t_nb) return false;
            if (std::abs(*t_own - *t_nb) < safety.t_h - bound_slack) return false;
        }
    }
    return true;
}

std::optional<double> schedule_exit_time(const CavZoneState& state,
                                         const ExitTimeWindow& window,
                                         const std::vector<ZoneNeighbor>& neighbors,
                                         double zone_length,
                                         const SafetyParams& safety,
                                         const VehicleLimits& limits,
                                         const SolverConfig& config) {
    for (double t_f = window.t_lo; t_f <= window.t_hi + 1e-9; t_f += config.dt) {
        auto traj = unconstrained_trajectory(state, t_f, zone_length, limits);
        if (!traj) continue;
        if (check_zone_constraints(*traj, neighbors, zone_length, safety, limits,
                                   config.sample_step))
            return t_f;
    }
    return std::nullopt;
}

namespace {

struct BranchSolution {
    bool ok = false;
    double b1 = 0.0, a1 = 0.0; // branch-1 control intercept and slope
    double v_s = 0.0, u_s = 0.0; // state at the crossing
    double a2 = 0.0;             // branch-2 control slope
};

// Solve the two-branch coefficients for a given horizon T (local time from
// entry), crossing at local time s with position p_n, exit position L.
BranchSolution solve_branches(double v0, double p_rel_n, double dist_total,
                              double s, double T) {
    BranchSolution sol;
    const double R = T - s;
    if (R <= 1e-9 || s <= 1e-9) return sol;
    // p1(s) = p_n and the exit condition with u(T) = 0 folded in.
    const double a11 = s * s / 2.0, a12 = s * s * s / 6.0;
    const double b1rhs = p_rel_n - v0 * s;
    const double a21 = s * R + R * R / 3.0;
    const double a22 = s * s * R / 2.0 + s * R * R / 3.0;
    const double b2rhs = (dist_total - p_rel_n) - v0 * R;
    const double det = a11 * a22 - a12 * a21;
    if (std::abs(det) < 1e-14) return sol;
    sol.b1 = (b1rhs * a22 - a12 * b2rhs) / det;
    sol.a1 = (a11 * b2rhs - b1rhs * a21) / det;
    sol.v_s = v0 + sol.b1 * s + sol.a1 * s * s / 2.0;
    sol.u_s = sol.b1 + sol.a1 * s;
    sol.a2 = -sol.u_s / R;
    sol.ok = true;
    return sol;
}

// Free-final-time stationarity residual: the Hamiltonian at exit plus the
// time weight, reduced using u(T) = 0.
double free_time_residual(const BranchSolution& sol, double R, double w_time) {
    const double v_exit = sol.v_s + sol.u_s * R / 2.0;
    return sol.a2 * v_exit + w_time;
}

Trajectory build_two_branch(const CavZoneState& state, double s, double T,
                            const BranchSolution& sol, double p_n) {
    Trajectory traj;
    traj.segments.push_back(
        {state.t0, state.t0 + s, state.p, state.v, sol.b1, sol.a1});
    traj.segments.push_back(
        {state.t0 + s, state.t0 + T, p_n, sol.v_s, sol.u_s, sol.a2});
    return traj;
}

Trajectory decel_and_cruise(const CavZoneState& state, double zone_length,
                            const VehicleLimits& limits) {
    Trajectory traj;
    const double dist = zone_length - state.p;
    const double t_ramp = std::max(0.0, (limits.v_min - state.v) / limits.u_min);
    double p_ramp = state.p, t_at = state.t0;
    if (t_ramp > 0.0) {
        p_ramp += state.v * t_ramp + limits.u_min * t_ramp * t_ramp / 2.0;
        traj.segments.push_back(
            {state.t0, state.t0 + t_ramp, state.p, state.v, limits.u_min, 0.0});
        t_at += t_ramp;
    }
    const double rest = zone_length - p_ramp;
    const double v_cruise = t_ramp > 0.0 ? limits.v_min : state.v;
    traj.segments.push_back({t_at, t_at + rest / v_cruise, p_ramp, v_cruise, 0.0, 0.0});
    (void)dist;
    return traj;
}

// Clamp the control of a solved trajectory into bounds by forward
// simulation on a fine grid, preserving the dynamics.
Trajectory project_into_bounds(const Trajectory& traj, const CavZoneState& state,
                               double zone_length, const VehicleLimits& limits,
                               double step) {
    Trajectory out;
    double t = state.t0, p = state.p, v = state.v;
    const double t_cap = traj.t_f() + 4.0 * (zone_length / limits.v_min);
    while (p < zone_length && t < t_cap) {
        double u = std::clamp(traj.control(std::min(t, traj.t_f())), limits.u_min,
                              limits.u_max);
        // Keep the speed box by overriding the control when it would exit.
        if (v + u * step < limits.v_min) u = (limits.v_min - v) / step;
        if (v + u * step > limits.v_max) u = (limits.v_max - v) / step;
        u = std::clamp(u, limits.u_min, limits.u_max);
        out.segments.push_back({t, t + step, p, v, u, 0.0});
        p += v * step + u * step * step / 2.0;
        v += u * step;
        t += step;
    }
    if (out.empty()) out.segments.push_back({t, t + step, p, v, 0.0, 0.0});
    return out;
}

} // namespace

FallbackResult constrained_fallback(const CavZoneState& state,
                                    const std::vector<ConflictCrossing>& crossings,
                                    double zone_length,
                                    const SafetyParams& safety,
                                    const VehicleLimits& limits,
                                    const SolverConfig& config) {
    (void)safety;
    FallbackResult result;
    if (crossings.empty())
        throw std::invalid_argument("constrained_fallback requires at least one crossing");

    // Most binding crossing: the one whose imposed arrival lags the nominal
    // constant-speed arrival the most.
    const ConflictCrossing* binding = &crossings.front();
    double worst = -kInfiniteTime;
    for (const ConflictCrossing& c : crossings) {
        const double slack = c.t_c - (state.t0 + (c.p_n - state.p) / state.v);
        if (slack > worst) {
            worst = slack;
            binding = &c;
        }
    }

    const double s = binding->t_c - state.t0;
    const double p_rel_n = binding->p_n - state.p;
    const double dist = zone_length - state.p;
    if (s <= 0.0 || p_rel_n <= 0.0 || p_rel_n >= dist) {
        result.traj = decel_and_cruise(state, zone_length, limits);
        result.used_last_resort = true;
        return result;
    }

    // Scan the horizon for a sign change of the free-time residual, then
    // bisect. The residual is smooth in T away from T = s.
    const double T_min = s + config.dt;
    const double T_max = s + 4.0 * (dist - p_rel_n) / limits.v_min + 1.0;
    double prev_T = 0.0, prev_g = 0.0;
    bool have_prev = false, bracketed = false;
    double lo = 0.0, hi = 0.0;
    for (double T = T_min; T <= T_max; T += config.dt) {
        const auto sol = solve_branches(state.v, p_rel_n, dist, s, T);
        if (!sol.ok) continue;
        const double g = free_time_residual(sol, T - s, config.w_time);
        if (have_prev && prev_g * g <= 0.0) {
            lo = prev_T;
            hi = T;
            bracketed = true;
            break;
        }
        prev_T = T;
        prev_g = g;
        have_prev = true;
    }

    if (!bracketed) {
        result.traj = decel_and_cruise(state, zone_length, limits);
        result.used_last_resort = true;
        return result;
    }

    for (int i = 0; i < 80 && hi - lo > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        const auto sol = solve_branches(state.v, p_rel_n, dist, s, mid);
        const double g = sol.ok ? free_time_residual(sol, mid - s, config.w_time)
                                : prev_g;
        const auto sol_lo = solve_branches(state.v, p_rel_n, dist, s, lo);
        const double g_lo = free_time_residual(sol_lo, lo - s, config.w_time);
        if (g_lo * g <= 0.0) hi = mid; else lo = mid;
    }
    const double T_star = 0.5 * (lo + hi);
    const auto sol = solve_branches(state.v, p_rel_n, dist, s, T_star);
    result.traj = build_two_branch(state, s, T_star, sol, binding->p_n);

    if (!check_zone_constraints(result.traj, {}, zone_length, SafetyParams{}, limits,
                                config.sample_step)) {
        result.traj = project_into_bounds(result.traj, state, zone_length, limits,
                                          config.sample_step);
        result.projected = true;
    }
    return result;
}

} // namespace cavsim
