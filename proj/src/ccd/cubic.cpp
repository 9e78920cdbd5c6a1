#include "contactgnn/ccd/cubic.hpp"

#include <algorithm>
#include <cmath>

namespace contactgnn::ccd {

double Cubic::max_abs_coeff() const {
    return std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
}

Cubic coplanarity_cubic(const std::array<Vec3, 4>& p, const std::array<Vec3, 4>& w) {
    // A(s) . (B(s) x C(s)), each of A, B, C linear in s.
    const Vec3 a0 = p[1] - p[0], av = w[1] - w[0];
    const Vec3 b0 = p[2] - p[0], bv = w[2] - w[0];
    const Vec3 c0 = p[3] - p[0], cv = w[3] - w[0];

    const Vec3 b0c0 = b0.cross(c0);
    const Vec3 bvc0 = bv.cross(c0);
    const Vec3 b0cv = b0.cross(cv);
    const Vec3 bvcv = bv.cross(cv);

    Cubic out;
    out.c0 = a0.dot(b0c0);
    out.c1 = av.dot(b0c0) + a0.dot(bvc0) + a0.dot(b0cv);
    out.c2 = av.dot(bvc0) + av.dot(b0cv) + a0.dot(bvcv);
    out.c3 = av.dot(bvcv);
    return out;
}

double residual_scale(const Cubic& p, double dt) {
    const double m = std::max(1.0, dt);
    return p.max_abs_coeff() * m * m * m;
}

namespace {

// Polynomial in normalized time tau = s / dt, evaluated on [0, 1].
struct Normalized {
    double d3, d2, d1, d0;
    double operator()(double x) const { return ((d3 * x + d2) * x + d1) * x + d0; }
    double deriv(double x) const { return (3.0 * d3 * x + 2.0 * d2) * x + d1; }
};

// Real roots of a x^2 + b x + c in (0, 1), with small leading terms demoted.
int critical_points(double a, double b, double c, double tol, std::array<double, 2>& out) {
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
    int n = 0;
    if (scale == 0.0) return 0;
    auto keep = [&](double x) {
        if (x > 0.0 && x < 1.0) out[n++] = x;
    };
    if (std::abs(a) <= tol * scale) {
        if (std::abs(b) <= tol * scale) return 0;
        keep(-c / b);
        return n;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return 0;
    if (disc == 0.0) {
        keep(-b / (2.0 * a));
        return n;
    }
    // Stable quadratic formula.
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double x1 = q / a;
    double x2 = (q != 0.0) ? c / q : x1;
    if (x1 > x2) std::swap(x1, x2);
    keep(x1);
    keep(x2);
    return n;
}

// Newton on a bracket with strict sign change. A step that leaves the
// bracket or fails to halve it is replaced by bisection. Fixed iteration count.
double refine(const Normalized& f, double lo, double hi, double flo, int iters) {
    if (flo > 0.0) {
        // Orient so that f(lo) < 0 < f(hi).
        const Normalized g{-f.d3, -f.d2, -f.d1, -f.d0};
        return refine(g, lo, hi, -flo, iters);
    }
    double x = 0.5 * (lo + hi);
    double step_old = hi - lo;
    double step = step_old;
    double best = x, fbest = std::abs(f(x));
    for (int it = 0; it < iters; ++it) {
        const double fx = f(x);
        if (fx == 0.0) return x;
        if (std::abs(fx) < fbest) {
            best = x;
            fbest = std::abs(fx);
        }
        if (fx < 0.0)
            lo = x;
        else
            hi = x;
        const double df = f.deriv(x);
        const double newton = (df != 0.0) ? x - fx / df : lo - 1.0;
        if (newton == x) return x;
        if (!(newton > lo && newton < hi) || std::abs(2.0 * fx) > std::abs(step_old * df)) {
            step_old = step;
            step = 0.5 * (hi - lo);
            x = lo + step;
        } else {
            step_old = step;
            step = newton - x;
            x = newton;
        }
    }
    return std::abs(f(x)) < fbest ? x : best;
}

}  // namespace

Roots cubic_roots_in_interval(const Cubic& p, double dt, const RootOptions& options) {
    Roots roots;
    if (!(dt > 0.0)) throw Error("bad_interval", "root interval length must be positive");

    const Normalized f{p.c3 * dt * dt * dt, p.c2 * dt * dt, p.c1 * dt, p.c0};
    const double fmax = std::max({std::abs(f.d3), std::abs(f.d2), std::abs(f.d1), std::abs(f.d0)});
    if (fmax <= options.zero_threshold) {
        roots.always = true;
        return roots;
    }
    // Acceptance threshold on |p| in the caller's units; p(s) == f(s/dt).
    const double accept = options.root_tol * residual_scale(p, dt);

    // Derivative 3 d3 x^2 + 2 d2 x + d1, leading terms demoted when negligible.
    double a = 3.0 * f.d3, b = 2.0 * f.d2, c = f.d1;
    if (std::abs(f.d3) <= options.degeneracy_tol * fmax) a = 0.0;
    if (a == 0.0 && std::abs(f.d2) <= options.degeneracy_tol * fmax) b = 0.0;
    std::array<double, 2> crit{};
    const int ncrit = critical_points(a, b, c, options.degeneracy_tol, crit);

    std::array<double, 4> knots{};
    int nk = 0;
    knots[nk++] = 0.0;
    for (int i = 0; i < ncrit; ++i) knots[nk++] = crit[i];
    knots[nk++] = 1.0;

    std::array<double, 4> vals{};
    for (int i = 0; i < nk; ++i) vals[i] = f(knots[i]);

    auto changes_sign = [&](int i) {
        return (vals[i] < 0.0 && vals[i + 1] > 0.0) || (vals[i] > 0.0 && vals[i + 1] < 0.0);
    };
    std::array<double, Roots::kCapacity> cand{};
    int nc = 0;
    for (int i = 0; i < nk; ++i) {
        if (vals[i] == 0.0) {
            cand[nc++] = knots[i];
            continue;
        }
        if (std::abs(vals[i]) > accept) continue;
        // Interior critical points count only as tangential contacts; when a
        // neighbouring bracket changes sign the roots are isolated there.
        const bool endpoint = i == 0 || i == nk - 1;
        const bool crossing = (i > 0 && changes_sign(i - 1)) || (i + 1 < nk && changes_sign(i));
        if (endpoint || !crossing) cand[nc++] = knots[i];
    }
    for (int i = 0; i + 1 < nk; ++i)
        if (changes_sign(i)) cand[nc++] = refine(f, knots[i], knots[i + 1], vals[i], options.newton_iters);
    std::sort(cand.begin(), cand.begin() + nc);

    // Merge candidates closer than 10 root_tol (normalized time).
    const double merge = 10.0 * options.root_tol;
    for (int i = 0; i < nc; ++i) {
        const double s = cand[i] * dt;
        if (roots.count > 0 && cand[i] - roots.t[roots.count - 1] / dt <= merge) continue;
        roots.push(std::clamp(s, 0.0, dt));
    }
    return roots;
}

}  // namespace contactgnn::ccd
