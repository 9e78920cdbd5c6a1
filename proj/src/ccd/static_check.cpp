#include "contactgnn/ccd/static_check.hpp"

#include <algorithm>
#include <cmath>

namespace contactgnn::ccd {

namespace {

constexpr double kRel = 1e-12;

struct P2 {
    double x, y;
};

double orient(P2 a, P2 b, P2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

bool on_segment(P2 a, P2 b, P2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

bool segments_cross_2d(P2 a, P2 b, P2 c, P2 d, double eps) {
    const double o1 = orient(a, b, c), o2 = orient(a, b, d);
    const double o3 = orient(c, d, a), o4 = orient(c, d, b);
    auto sgn = [eps](double v) { return v > eps ? 1 : (v < -eps ? -1 : 0); };
    const int s1 = sgn(o1), s2 = sgn(o2), s3 = sgn(o3), s4 = sgn(o4);
    if (s1 * s2 < 0 && s3 * s4 < 0) return true;
    if (s1 == 0 && on_segment(a, b, c)) return true;
    if (s2 == 0 && on_segment(a, b, d)) return true;
    if (s3 == 0 && on_segment(c, d, a)) return true;
    if (s4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

bool inside_2d(P2 p, P2 a, P2 b, P2 c, double eps) {
    const double d1 = orient(a, b, p), d2 = orient(b, c, p), d3 = orient(c, a, p);
    const bool neg = d1 < -eps || d2 < -eps || d3 < -eps;
    const bool pos = d1 > eps || d2 > eps || d3 > eps;
    return !(neg && pos);
}

struct Projector {
    int ax, ay;
    explicit Projector(const Vec3& n) {
        const Vec3 m = n.cwiseAbs();
        if (m.x() >= m.y() && m.x() >= m.z()) {
            ax = 1;
            ay = 2;
        } else if (m.y() >= m.z()) {
            ax = 2;
            ay = 0;
        } else {
            ax = 0;
            ay = 1;
        }
    }
    P2 operator()(const Vec3& v) const { return {v[ax], v[ay]}; }
};

double length_scale(const TriangleCoords& a, const TriangleCoords& b) {
    double l = 0.0;
    for (const auto* t : {&a, &b})
        for (int i = 0; i < 3; ++i) l = std::max(l, ((*t)[i] - (*t)[(i + 1) % 3]).norm());
    return l;
}

bool coplanar_overlap(const TriangleCoords& a, const TriangleCoords& b, const Vec3& n, double L) {
    const Projector pr(n);
    std::array<P2, 3> pa, pb;
    for (int i = 0; i < 3; ++i) {
        pa[i] = pr(a[i]);
        pb[i] = pr(b[i]);
    }
    const double eps = kRel * L * L;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (segments_cross_2d(pa[i], pa[(i + 1) % 3], pb[j], pb[(j + 1) % 3], eps)) return true;
    return inside_2d(pa[0], pb[0], pb[1], pb[2], eps) || inside_2d(pb[0], pa[0], pa[1], pa[2], eps);
}

// Segment pq against triangle t (not coplanar with it).
bool segment_hits(const Vec3& p, const Vec3& q, const TriangleCoords& t, const Vec3& n, double eps_d,
                  double L) {
    const double d0 = n.dot(p - t[0]);
    const double d1 = n.dot(q - t[0]);
    if ((d0 > eps_d && d1 > eps_d) || (d0 < -eps_d && d1 < -eps_d)) return false;
    Vec3 x;
    if (std::abs(d0) <= eps_d && std::abs(d1) <= eps_d) {
        // Segment lies in the plane of t.
        const Projector pr(n);
        const double eps = kRel * L * L;
        const P2 a = pr(p), b = pr(q);
        if (inside_2d(a, pr(t[0]), pr(t[1]), pr(t[2]), eps)) return true;
        for (int j = 0; j < 3; ++j)
            if (segments_cross_2d(a, b, pr(t[j]), pr(t[(j + 1) % 3]), eps)) return true;
        return false;
    }
    if (std::abs(d0) <= eps_d)
        x = p;
    else if (std::abs(d1) <= eps_d)
        x = q;
    else
        x = p + (d0 / (d0 - d1)) * (q - p);
    const Vec3 c0 = (t[1] - t[0]).cross(x - t[0]);
    const Vec3 c1 = (t[2] - t[1]).cross(x - t[1]);
    const Vec3 c2 = (t[0] - t[2]).cross(x - t[2]);
    const double tol = kRel * n.squaredNorm();
    return c0.dot(n) >= -tol && c1.dot(n) >= -tol && c2.dot(n) >= -tol;
}

}  // namespace

bool triangles_intersect(const TriangleCoords& a, const TriangleCoords& b) {
    const double L = length_scale(a, b);
    const Vec3 na = (a[1] - a[0]).cross(a[2] - a[0]);
    const Vec3 nb = (b[1] - b[0]).cross(b[2] - b[0]);
    const double eps_a = kRel * na.norm() * L;
    const double eps_b = kRel * nb.norm() * L;

    std::array<double, 3> db{}, da{};
    for (int i = 0; i < 3; ++i) {
        db[i] = na.dot(b[i] - a[0]);
        da[i] = nb.dot(a[i] - b[0]);
    }
    auto same_side = [](const std::array<double, 3>& d, double eps) {
        return (d[0] > eps && d[1] > eps && d[2] > eps) || (d[0] < -eps && d[1] < -eps && d[2] < -eps);
    };
    if (same_side(db, eps_a) || same_side(da, eps_b)) return false;

    const bool coplanar = std::all_of(db.begin(), db.end(), [&](double d) { return std::abs(d) <= eps_a; });
    if (coplanar) return coplanar_overlap(a, b, na, L);

    for (int i = 0; i < 3; ++i) {
        if (segment_hits(a[i], a[(i + 1) % 3], b, nb, eps_b, L)) return true;
        if (segment_hits(b[i], b[(i + 1) % 3], a, na, eps_a, L)) return true;
    }
    return false;
}

std::vector<CandidatePair> static_check_at(const Trajectory& traj, const ContactTopology& topo, double s) {
    traj.validate();
    std::vector<CandidatePair> out;
    const int n = static_cast<int>(topo.triangles.size());
    std::vector<TriangleCoords> coords(n);
    for (int t = 0; t < n; ++t)
        for (int c = 0; c < 3; ++c) coords[t][c] = traj.at(topo.triangles[t][c], s);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (topo.eligible(a, b) && triangles_intersect(coords[a], coords[b])) out.push_back({a, b});
    return out;
}

std::vector<CandidatePair> static_end_time_check(const Trajectory& traj, const ContactTopology& topo) {
    return static_check_at(traj, topo, traj.dt);
}

}  // namespace contactgnn::ccd
