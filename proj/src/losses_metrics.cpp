#include "contactgnn/losses_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace contactgnn {

void LossWeights::validate() const {
    if (!(w_d >= 0.0) || !(w_c >= 0.0)) throw Error("bad_weights", "loss weights must be non-negative");
    if (w_d == 0.0 && w_c == 0.0) throw Error("bad_weights", "loss weights must not both be zero");
}

namespace {

void check_shapes(std::span<const Points> a, std::span<const Points> b) {
    if (a.size() != b.size()) throw Error("shape_mismatch", "batch sizes differ");
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k].size() != b[k].size())
            throw Error("shape_mismatch", "node counts differ in graph " + std::to_string(k));
}

void check_length_scale(double l_c) {
    if (!(l_c > 0.0)) throw Error("bad_length_scale", "length scale must be positive");
}

}  // namespace

double dynamic_loss(std::span<const Points> y_hat, std::span<const Points> y) {
    check_shapes(y_hat, y);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        for (std::size_t i = 0; i < y[k].size(); ++i) sum += (y_hat[k][i] - y[k][i]).squaredNorm();
        n += y[k].size();
    }
    return n ? sum / (3.0 * static_cast<double>(n)) : 0.0;
}

double dynamic_loss(const Points& y_hat, const Points& y) {
    return dynamic_loss(std::span<const Points>(&y_hat, 1), std::span<const Points>(&y, 1));
}

double contact_loss(std::span<const ccd::ContactField> fields, std::span<const std::size_t> n_triangles,
                    double l_c) {
    check_length_scale(l_c);
    if (fields.size() != n_triangles.size()) throw Error("shape_mismatch", "field and triangle counts differ");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < fields.size(); ++k) {
        for (double r : fields[k].response) sum += std::abs(r / l_c);
        count += n_triangles[k];
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

double contact_loss(const ccd::ContactField& field, std::size_t n_triangles, double l_c) {
    return contact_loss(std::span<const ccd::ContactField>(&field, 1),
                        std::span<const std::size_t>(&n_triangles, 1), l_c);
}

double total_loss(double l_d, double l_c, const LossWeights& w) { return w.w_d * l_d + w.w_c * l_c; }

double position_loss(std::span<const Points> dr_hat, std::span<const Points> dr, double l_c) {
    check_length_scale(l_c);
    check_shapes(dr_hat, dr);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < dr.size(); ++k) {
        for (std::size_t i = 0; i < dr[k].size(); ++i) sum += (dr_hat[k][i] - dr[k][i]).cwiseAbs().sum();
        n += dr[k].size();
    }
    return n ? sum / (3.0 * static_cast<double>(n) * l_c) : 0.0;
}

double position_loss(const Points& dr_hat, const Points& dr, double l_c) {
    return position_loss(std::span<const Points>(&dr_hat, 1), std::span<const Points>(&dr, 1), l_c);
}

std::vector<double> error_set(const Points& dr_hat, const Points& dr, double l_c) {
    check_length_scale(l_c);
    if (dr_hat.size() != dr.size()) throw Error("shape_mismatch", "node counts differ");
    std::vector<double> e(dr.size());
    for (std::size_t i = 0; i < dr.size(); ++i) e[i] = ((dr[i] - dr_hat[i]) / l_c).norm();
    return e;
}

Quartiles quartiles(std::vector<double> values) {
    Quartiles q;
    q.count = values.size();
    if (values.empty()) return q;
    std::sort(values.begin(), values.end());
    auto at = [&](double p) {
        const double pos = p * static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    q.min = values.front();
    q.max = values.back();
    q.q1 = at(0.25);
    q.median = at(0.5);
    q.q3 = at(0.75);
    double sum = 0.0;
    for (double v : values) sum += v;
    q.mean = sum / static_cast<double>(values.size());
    return q;
}

AccumulatedErrors accumulate_errors(const std::vector<std::vector<double>>& e) {
    AccumulatedErrors out;
    const std::size_t steps = e.size();
    if (steps == 0) return out;
    const std::size_t n = e.front().size();
    for (std::size_t k = 0; k < steps; ++k)
        if (e[k].size() != n)
            throw Error("shape_mismatch", "error set of step " + std::to_string(k + 1) + " has a different node count");

    out.xi.assign(steps, std::vector<double>(n, 0.0));
    for (std::size_t m = 1; m < steps; ++m)
        for (std::size_t i = 0; i < n; ++i) out.xi[m][i] = out.xi[m - 1][i] + e[m - 1][i];

    auto mean = [n](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return n ? s / static_cast<double>(n) : 0.0;
    };
    out.e_mean.resize(steps);
    out.xi_mean.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        out.e_mean[k] = mean(e[k]);
        out.xi_mean[k] = mean(out.xi[k]);
    }
    for (std::size_t k = 0; k < steps; ++k) {
        out.e_bar += out.e_mean[k];
        out.xi_bar += out.xi_mean[k];
    }
    out.e_bar /= static_cast<double>(steps);
    out.xi_bar /= static_cast<double>(steps);
    return out;
}

CrossSimulationAverage average_over_simulations(std::span<const AccumulatedErrors> sims) {
    CrossSimulationAverage out;
    if (sims.empty()) return out;
    out.steps = sims.front().e_mean.size();
    for (const auto& s : sims) out.steps = std::min(out.steps, s.e_mean.size());
    out.e_mean.assign(out.steps, 0.0);
    out.xi_mean.assign(out.steps, 0.0);
    for (const auto& s : sims)
        for (std::size_t k = 0; k < out.steps; ++k) {
            out.e_mean[k] += s.e_mean[k];
            out.xi_mean[k] += s.xi_mean[k];
        }
    for (std::size_t k = 0; k < out.steps; ++k) {
        out.e_mean[k] /= static_cast<double>(sims.size());
        out.xi_mean[k] /= static_cast<double>(sims.size());
    }
    return out;
}

Points contact_loss_gradient(const ccd::ContactField& field, const ccd::ContactTopology& topo,
                             const Points& end_positions, std::size_t n_triangles, double l_c,
                             double area_tol) {
    check_length_scale(l_c);
    Points grad(end_positions.size(), Vec3::Zero());
    if (n_triangles == 0) return grad;
    const double scale = 1.0 / (l_c * static_cast<double>(n_triangles));

    // Events are sorted; a strict comparison keeps the first event that
    // attains each triangle's maximum.
    std::vector<const ccd::CollisionEvent*> argmax(topo.triangles.size(), nullptr);
    for (const auto& ev : field.events) {
        for (int tri : {ev.pair.tri_a, ev.pair.tri_b}) {
            if (!(ev.response > 0.0)) continue;
            if (!argmax[tri] || ev.response > argmax[tri]->response) argmax[tri] = &ev;
        }
    }
    for (const ccd::CollisionEvent* best : argmax) {
        if (!best) continue;
        const auto n = ccd::subtest_nodes(topo, best->pair, best->kind, best->index);
        const auto& x = end_positions;
        const std::array<Vec3, 4> g =
            best->kind == ccd::SubTestKind::VF
                ? ccd::vf_response_gradient(x[n[3]], x[n[0]], x[n[1]], x[n[2]], area_tol)
                : ccd::ee_response_gradient(x[n[0]], x[n[1]], x[n[2]], x[n[3]]);
        // Both gradients follow subtest_nodes order.
        for (int c = 0; c < 4; ++c) grad[n[c]] += scale * g[c];
    }
    return grad;
}

}  // namespace contactgnn
