#include "contactgnn/ccd/predicates.hpp"

#include <algorithm>
#include <cmath>

namespace contactgnn::ccd {

Barycentric barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                        double area_tol) {
    // Normal equations of p - a = l1 (b - a) + l2 (c - a) in the face plane.
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 d = p - a;
    const double d11 = e1.dot(e1);
    const double d12 = e1.dot(e2);
    const double d22 = e2.dot(e2);
    const double r1 = d.dot(e1);
    const double r2 = d.dot(e2);
    const double det = e1.cross(e2).squaredNorm();  // d11 d22 - d12^2 without cancellation
    Barycentric out;
    const double twice_area = std::sqrt(det);
    if (!(0.5 * twice_area > area_tol)) return out;
    out.l1 = (d22 * r1 - d12 * r2) / det;
    out.l2 = (d11 * r2 - d12 * r1) / det;
    out.l0 = 1.0 - out.l1 - out.l2;
    out.valid = true;
    return out;
}

bool vf_sufficiency(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                    double containment_tol, double area_tol) {
    const Barycentric bc = barycentric(p, a, b, c, area_tol);
    if (!bc.valid) return false;
    return bc.l0 >= -containment_tol && bc.l1 >= -containment_tol && bc.l2 >= -containment_tol;
}

namespace {

bool straddle(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
    const Vec3 da = a1 - a0;
    const Vec3 db = b1 - b0;
    const double sa = da.cross(b0 - a0).dot(da.cross(b1 - a0));
    const double sb = db.cross(a0 - b0).dot(db.cross(a1 - b0));
    return sa <= 0.0 && sb <= 0.0;
}

}  // namespace

bool ee_sufficiency(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1,
                    double containment_tol, EdgeTest mode) {
    if (mode == EdgeTest::Unmodified) return straddle(a0, a1, b0, b1);

    const Vec3 da = a1 - a0;
    const Vec3 db = b1 - b0;
    const Vec3 n = da.cross(db);
    const double nn = n.squaredNorm();
    const double scale = da.squaredNorm() * db.squaredNorm();
    // Parallel (and in particular collinear) segments are never reported.
    if (!(nn > 1e-12 * scale)) return false;

    // Closest points of the two supporting lines; they coincide for
    // coplanar, non-parallel lines.
    const Vec3 r = b0 - a0;
    const double u = r.cross(db).dot(n) / nn;
    const double w = r.cross(da).dot(n) / nn;
    const double lo = -containment_tol;
    const double hi = 1.0 + containment_tol;
    return u >= lo && u <= hi && w >= lo && w <= hi;
}

Response vf_response(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                     double area_tol) {
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (!(0.5 * len > area_tol)) return {0.0, true};
    return {std::abs((p - a).dot(n)) / len, false};
}

double ee_response(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
    return (0.5 * (a0 + a1) - 0.5 * (b0 + b1)).norm();
}

std::array<Vec3, 4> vf_response_gradient(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                         double area_tol) {
    std::array<Vec3, 4> g;
    g.fill(Vec3::Zero());
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 n = e1.cross(e2);
    const double len = n.norm();
    if (!(0.5 * len > area_tol)) return g;
    const Vec3 nh = n / len;
    const double f = (p - a).dot(nh);
    if (f == 0.0) return g;
    const double sgn = f > 0.0 ? 1.0 : -1.0;
    const Vec3 w = ((p - a) - f * nh) / len;
    g[1] = sgn * e2.cross(w);
    g[2] = sgn * w.cross(e1);
    g[3] = sgn * nh;
    g[0] = -(g[1] + g[2] + g[3]);
    return g;
}

std::array<Vec3, 4> ee_response_gradient(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                         const Vec3& b1) {
    std::array<Vec3, 4> g;
    const Vec3 d = 0.5 * (a0 + a1) - 0.5 * (b0 + b1);
    const double len = d.norm();
    const Vec3 u = len > 0.0 ? Vec3(d / len) : Vec3::Zero();
    g[0] = g[1] = 0.5 * u;
    g[2] = g[3] = -0.5 * u;
    return g;
}

}  // namespace contactgnn::ccd
