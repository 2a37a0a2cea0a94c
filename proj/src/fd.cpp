#include "cavsim/fd.hpp"

#include <string>

namespace cavsim {

DensityRangeError::DensityRangeError(double k_, double kj_)
    : std::domain_error("density " + std::to_string(k_) + " outside [0, " +
                        std::to_string(kj_) + "]"),
      k(k_), k_j(kj_) {}

double fd_flow(const FdParams& fd, double k) {
    if (k < 0.0 || k > fd.k_j) throw DensityRangeError(k, fd.k_j);
    if (k <= fd.k_c) return fd.q_c * k / fd.k_c;
    return fd.q_c * (1.0 - (k - fd.k_c) / (fd.k_j - fd.k_c));
}

double fd_speed(const FdParams& fd, double k) {
    if (k < 0.0 || k > fd.k_j) throw DensityRangeError(k, fd.k_j);
    if (k <= fd.k_c) return fd.q_c / fd.k_c; // left branch: v = q/k is constant
    return fd_flow(fd, k) / k;
}

double fd_travel_time(const FdParams& fd, double k, double length) {
    const double v = fd_speed(fd, k);
    if (v <= 0.0) return kInfiniteTime;
    return length / v;
}

} // namespace cavsim
