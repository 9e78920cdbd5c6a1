#pragma once

#include "contactgnn/common.hpp"

namespace contactgnn::ccd {

/// p(s) = c3 s^3 + c2 s^2 + c1 s + c0
struct Cubic {
    double c3 = 0.0;
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;

    double operator()(double s) const { return ((c3 * s + c2) * s + c1) * s + c0; }
    double derivative(double s) const { return (3.0 * c3 * s + 2.0 * c2) * s + c1; }
    double max_abs_coeff() const;
};

/// Scalar triple product det[q1-q0, q2-q0, q3-q0] with q_i(s) = p_i + s w_i,
/// expanded exactly in s. For a vertex-face set pass the face corners as
/// p0..p2 and the vertex as p3; for an edge-edge set pass (a0, a1, b0, b1).
Cubic coplanarity_cubic(const std::array<Vec3, 4>& p, const std::array<Vec3, 4>& w);

struct RootOptions {
    double root_tol = 1e-10;
    double degeneracy_tol = 1e-12;
    int newton_iters = 32;
    /// Absolute magnitude (in coefficient units, with s measured in units of
    /// the interval length) at or below which the polynomial is treated as
    /// identically zero. 0 means only an exact zero polynomial qualifies.
    double zero_threshold = 0.0;
};

struct Roots {
    static constexpr int kCapacity = 6;
    std::array<double, kCapacity> t{};
    int count = 0;
    /// The polynomial vanishes identically: every instant is coplanar.
    bool always = false;

    const double* begin() const { return t.data(); }
    const double* end() const { return t.data() + count; }
    bool empty() const { return count == 0; }
    void push(double s) {
        if (count < kCapacity) t[count++] = s;
    }
};

/// Tolerance scale for |p(root)|: max|coeff| * max(1, dt)^3.
double residual_scale(const Cubic& p, double dt);

/// Real roots of p in the closed interval [0, dt], ascending, each
/// satisfying |p(root)| <= root_tol * residual_scale(p, dt). Brackets come
/// from the analytic critical points; each bracket is refined by a fixed
/// number of safeguarded Newton steps. Tangential (double) roots are
/// reported once.
Roots cubic_roots_in_interval(const Cubic& p, double dt, const RootOptions& options = {});

}  // namespace contactgnn::ccd
