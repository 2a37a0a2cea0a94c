#pragma once

#include <stdexcept>

#include "cavsim/types.hpp"

namespace cavsim {

/// Triangular fundamental diagram parameters of one edge.
/// Units: q_c veh/s, k_c and k_j veh/m.
struct FdParams {
    double q_c = 0.0;
    double k_c = 0.0;
    double k_j = 0.0;

    double free_flow_speed() const { return q_c / k_c; }
    bool valid() const { return q_c > 0.0 && k_c > 0.0 && k_c < k_j; }
};

/// Flow at density k on the triangular diagram. Rising branch up to k_c,
/// falling branch down to zero at k_j.
double fd_flow(const FdParams& fd, double k);

/// Mean speed at density k. Constant q_c/k_c on the uncongested branch
/// (including k = 0), decreasing to zero at jam density.
double fd_speed(const FdParams& fd, double k);

/// Travel time over `length` meters at density k. kInfiniteTime at k = k_j.
double fd_travel_time(const FdParams& fd, double k, double length);

class DensityRangeError : public std::domain_error {
public:
    DensityRangeError(double k, double k_j);
    double k;
    double k_j;
};

} // namespace cavsim
