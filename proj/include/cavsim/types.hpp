#pragma once

#include <cstdint>
#include <limits>

namespace cavsim {

using NodeId = std::int32_t;
using EdgeId = std::int32_t;
using CavId = std::int64_t;

constexpr NodeId kInvalidNode = -1;
constexpr EdgeId kInvalidEdge = -1;

/// Sentinel for "never" / unbounded travel time. Always compare with
/// std::isinf, never rely on arithmetic overflow to produce it.
constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

} // namespace cavsim
