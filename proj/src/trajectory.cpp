#include "cavsim/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cavsim {

double TrajectorySegment::position(double t) const {
    const double s = t - t_start;
    return p0 + v0 * s + u0 * s * s / 2.0 + jerk * s * s * s / 6.0;
}

double TrajectorySegment::speed(double t) const {
    const double s = t - t_start;
    return v0 + u0 * s + jerk * s * s / 2.0;
}

double TrajectorySegment::control(double t) const {
    return u0 + jerk * (t - t_start);
}

double TrajectorySegment::energy() const {
    const double T = t_end - t_start;
    return 0.5 * (u0 * u0 * T + u0 * jerk * T * T + jerk * jerk * T * T * T / 3.0);
}

namespace {

const TrajectorySegment& segment_at(const std::vector<TrajectorySegment>& segs, double t) {
    for (const auto& s : segs)
        if (t <= s.t_end) return s;
    return segs.back();
}

} // namespace

double Trajectory::position(double t) const {
    if (empty()) throw std::logic_error("empty trajectory");
    if (t <= t0()) return segments.front().p0;
    if (t >= t_f()) {
        const auto& last = segments.back();
        return last.position(last.t_end) + last.speed(last.t_end) * (t - last.t_end);
    }
    return segment_at(segments, t).position(t);
}

double Trajectory::speed(double t) const {
    if (empty()) throw std::logic_error("empty trajectory");
    if (t <= t0()) return segments.front().v0;
    if (t >= t_f()) return segments.back().speed(t_f());
    return segment_at(segments, t).speed(t);
}

double Trajectory::control(double t) const {
    if (empty()) throw std::logic_error("empty trajectory");
    if (t < t0() || t > t_f()) return 0.0;
    return segment_at(segments, t).control(t);
}

double Trajectory::energy() const {
    double e = 0.0;
    for (const auto& s : segments) e += s.energy();
    return e;
}

std::optional<double> Trajectory::time_at_position(double x) const {
    if (empty()) throw std::logic_error("empty trajectory");
    if (x <= position(t0())) return t0();
    if (x > position(t_f()) + 1e-12) return std::nullopt;
    for (const auto& s : segments) {
        if (x > s.position(s.t_end) + 1e-12) continue;
        // Monotone within the segment (speed stays positive); bisect.
        double lo = s.t_start, hi = s.t_end;
        for (int i = 0; i < 100 && hi - lo > 1e-10; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (s.position(mid) < x) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    }
    return t_f();
}

} // namespace cavsim
