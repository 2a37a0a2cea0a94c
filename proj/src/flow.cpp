#include "cavsim/flow.hpp"

#include <cmath>
#include <stdexcept>

namespace cavsim {

void EdgeTrafficState::push_sample(double t, double k_measured) {
    if (!history.empty() && t <= history.back().t)
        throw std::invalid_argument("density samples must have strictly increasing timestamps");
    history.push_back({t, k_measured});
    while (history.size() > history_capacity) history.pop_front();
}

std::optional<double> estimate_rate(const std::deque<DensitySample>& history,
                                    double window) {
    if (history.size() < 2) return std::nullopt;
    const DensitySample& latest = history.back();
    // Oldest sample that is at least `window` old; fall back to the span we
    // have if the buffer is shorter than the window.
    const DensitySample* earlier = nullptr;
    for (auto it = history.rbegin() + 1; it != history.rend(); ++it) {
        earlier = &*it;
        if (latest.t - it->t >= window) break;
    }
    const double dt = latest.t - earlier->t;
    if (dt < window) return std::nullopt;
    return (latest.k - earlier->k) / dt;
}

RatePrediction predict_time_to_critical(const EdgeTrafficState& state,
                                        const FdParams& fd) {
    RatePrediction out;
    out.r_used = state.rate;
    out.k_at_prediction = state.k;
    if (state.k >= fd.k_c) {
        out.t_c_remaining = 0.0;
    } else if (state.rate <= 0.0) {
        out.t_c_remaining = kInfiniteTime;
    } else {
        out.t_c_remaining = (fd.k_c - state.k) / state.rate;
    }
    return out;
}

std::optional<double> prediction_error_magnitude(double epsilon, double r) {
    if (r == 0.0) return std::nullopt;
    return std::abs(epsilon) / std::abs(r);
}

TcBounds t_c_bounds(double k0, double k_c, double t0, const RateBounds& bounds) {
    if (k0 >= k_c) throw std::invalid_argument("t_c_bounds requires k0 < k_c");
    if (bounds.r_min > bounds.r_max)
        throw std::invalid_argument("t_c_bounds requires r_min <= r_max");
    TcBounds out;
    out.t_c_lo = bounds.r_max > 0.0 ? t0 + (k_c - k0) / bounds.r_max : kInfiniteTime;
    out.t_c_hi = bounds.r_min > 0.0 ? t0 + (k_c - k0) / bounds.r_min : kInfiniteTime;
    return out;
}

} // namespace cavsim
