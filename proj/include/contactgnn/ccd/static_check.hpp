#pragma once

// Discrete (single-instant) triangle-triangle intersection. Used for the
// end-of-step-only checker that continuous detection is compared against.

#include "contactgnn/ccd/detect.hpp"

namespace contactgnn::ccd {

using TriangleCoords = std::array<Vec3, 3>;

/// Closed-set intersection test; touching counts as intersecting.
bool triangles_intersect(const TriangleCoords& a, const TriangleCoords& b);

/// Pairs whose triangles intersect at the end of the step only.
std::vector<CandidatePair> static_end_time_check(const Trajectory& traj, const ContactTopology& topo);

/// Pairs whose triangles intersect at instant s.
std::vector<CandidatePair> static_check_at(const Trajectory& traj, const ContactTopology& topo, double s);

}  // namespace contactgnn::ccd
