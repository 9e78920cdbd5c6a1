#pragma once

// Sufficient conditions evaluated at a coplanarity instant, and the penalty
// responses evaluated at the end of the step.

#include "contactgnn/common.hpp"

namespace contactgnn::ccd {

enum class EdgeTest {
    /// Parametric segment intersection; collinear pairs never collide.
    Modified,
    /// Mutual straddle test with inclusive signs. Accepts every collinear pair,
    /// overlapping or not. Kept for the collinear-edge regression.
    Unmodified,
};

struct Barycentric {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0;
    bool valid = false;
};

/// Barycentric coordinates of the projection of `p` onto the plane of
/// (a, b, c). Invalid when the face area is at or below `area_tol`.
Barycentric barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                        double area_tol);

/// True when the vertex lies inside the face: every barycentric coordinate is
/// at least -containment_tol. Degenerate faces never contain anything.
bool vf_sufficiency(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                    double containment_tol, double area_tol);

/// True when two (coplanar) segments intersect with both segment parameters
/// inside [-containment_tol, 1 + containment_tol].
bool ee_sufficiency(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1,
                    double containment_tol, EdgeTest mode = EdgeTest::Modified);

struct Response {
    double value = 0.0;
    bool degenerate = false;
};

/// |(p - a) . n| with n the unit normal of (a, b, c).
Response vf_response(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                     double area_tol);

/// Distance between the two edge midpoints.
double ee_response(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1);

/// Gradients of vf_response with respect to (a, b, c, p). Zero on degenerate
/// faces and when p lies exactly in the plane.
std::array<Vec3, 4> vf_response_gradient(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                         double area_tol);
/// Gradients of ee_response with respect to (a0, a1, b0, b1).
std::array<Vec3, 4> ee_response_gradient(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                         const Vec3& b1);

}  // namespace contactgnn::ccd
