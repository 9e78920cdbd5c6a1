#include "contactgnn/surrogate.hpp"

#include "forward.hpp"

#include <cmath>
#include <omp.h>

namespace contactgnn {

namespace {

struct BatchTotals {
    std::size_t nodes = 0;
    std::size_t triangles = 0;
};

BatchTotals totals(std::span<const BatchItem> batch, const GradientOptions& options) {
    BatchTotals t;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const GraphSample* s = batch[k].sample;
        if (!s) throw Error("bad_batch", "batch item " + std::to_string(k) + " has no sample");
        if (!s->targets) throw Error("missing_targets", "batch item " + std::to_string(k) + " has no targets");
        if (s->targets->size() != s->node_count())
            throw Error("shape_mismatch", "batch item " + std::to_string(k) + " target count differs from nodes");
        t.nodes += s->node_count();
        if (options.contact) {
            if (!batch[k].topology)
                throw Error("bad_batch", "batch item " + std::to_string(k) + " has no contact topology");
            t.triangles += batch[k].topology->triangles.size();
        }
    }
    return t;
}

// Contact response sum (already divided by l_c) and, when requested, its
// gradient with respect to y_hat scaled by 1 / total triangles.
double contact_term(const GraphSample& s, const ccd::ContactTopology& topo, const Points& y_hat,
                    const GradientOptions& options, std::size_t total_triangles, Points* d_y) {
    const double dt = s.dt();
    if (!(dt > 0.0)) return 0.0;  // terminal step: no motion to test
    const ccd::Trajectory traj = step_trajectory(s.nodes, y_hat, dt);
    const ccd::ContactField field = ccd::detect_contacts(traj, topo, options.detect);
    double sum = 0.0;
    for (double r : field.response) sum += std::abs(r / options.length_scale);
    if (d_y && field.nnz() > 0) {
        Points end(traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i) end[i] = traj.end(static_cast<int>(i));
        const double area_tol = ccd::SceneScale::of(traj, options.detect.tol).area_tol;
        const Points g = contact_loss_gradient(field, topo, end, total_triangles, options.length_scale, area_tol);
        // r+ = r + v dt + y dt^2 / 2
        for (std::size_t i = 0; i < g.size(); ++i) (*d_y)[i] += (0.5 * dt * dt) * g[i];
    }
    return sum;
}

struct GraphResult {
    double squared_error = 0.0;
    double contact_sum = 0.0;
};

}  // namespace

LossBreakdown evaluate_loss(const GnnParams& params, std::span<const BatchItem> batch,
                            const GradientOptions& options) {
    options.weights.validate();
    const BatchTotals t = totals(batch, options);
    std::vector<GraphResult> per(batch.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(batch.size()); ++k) {
        const GraphSample& s = *batch[k].sample;
        const Points y_hat = predict_accelerations(s, params);
        for (std::size_t i = 0; i < y_hat.size(); ++i) per[k].squared_error += (y_hat[i] - (*s.targets)[i]).squaredNorm();
        if (options.contact) per[k].contact_sum = contact_term(s, *batch[k].topology, y_hat, options, t.triangles, nullptr);
    }
    LossBreakdown out;
    double se = 0.0, cs = 0.0;
    for (const auto& r : per) {
        se += r.squared_error;
        cs += r.contact_sum;
    }
    out.dynamic = t.nodes ? se / (3.0 * static_cast<double>(t.nodes)) : 0.0;
    out.contact_evaluated = options.contact;
    out.contact = (options.contact && t.triangles) ? cs / static_cast<double>(t.triangles) : 0.0;
    out.total = total_loss(out.dynamic, out.contact, options.weights);
    return out;
}

GradientResult loss_gradient(const GnnParams& params, std::span<const BatchItem> batch,
                             const GradientOptions& options, int batch_id) {
    options.weights.validate();
    const BatchTotals t = totals(batch, options);
    std::vector<GraphResult> per(batch.size());
    std::vector<GnnParams> grads(batch.size());
    const double dyn_scale = t.nodes ? options.weights.w_d * 2.0 / (3.0 * static_cast<double>(t.nodes)) : 0.0;

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(batch.size()); ++k) {
        const GraphSample& s = *batch[k].sample;
        detail::ForwardTrace trace;
        const MatrixXd y = detail::forward_traced(s, params, trace);
        Points y_hat(s.node_count());
        for (std::size_t i = 0; i < y_hat.size(); ++i) y_hat[i] = y.col(static_cast<Eigen::Index>(i));

        Points d_y(s.node_count(), Vec3::Zero());
        for (std::size_t i = 0; i < y_hat.size(); ++i) {
            const Vec3 err = y_hat[i] - (*s.targets)[i];
            per[k].squared_error += err.squaredNorm();
            d_y[i] = dyn_scale * err;
        }
        if (options.contact) {
            Points d_c(s.node_count(), Vec3::Zero());
            per[k].contact_sum = contact_term(s, *batch[k].topology, y_hat, options, t.triangles, &d_c);
            for (std::size_t i = 0; i < d_y.size(); ++i) d_y[i] += options.weights.w_c * d_c[i];
        }
        MatrixXd dy(3, static_cast<Eigen::Index>(d_y.size()));
        for (std::size_t i = 0; i < d_y.size(); ++i) dy.col(static_cast<Eigen::Index>(i)) = d_y[i];
        grads[k] = GnnParams::zeros(params.config);
        detail::backward(params, trace, dy, grads[k]);
    }

    GradientResult out;
    out.grad = GnnParams::zeros(params.config);
    double se = 0.0, cs = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        se += per[k].squared_error;
        cs += per[k].contact_sum;
        out.grad.add_scaled(grads[k], 1.0);
    }
    out.loss.dynamic = t.nodes ? se / (3.0 * static_cast<double>(t.nodes)) : 0.0;
    out.loss.contact_evaluated = options.contact;
    out.loss.contact = (options.contact && t.triangles) ? cs / static_cast<double>(t.triangles) : 0.0;
    out.loss.total = total_loss(out.loss.dynamic, out.loss.contact, options.weights);
    if (!std::isfinite(out.loss.total))
        throw Error("non_finite_loss", "non-finite loss in batch " + std::to_string(batch_id));
    return out;
}

}  // namespace contactgnn
