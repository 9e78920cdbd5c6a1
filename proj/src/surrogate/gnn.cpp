#include "contactgnn/surrogate.hpp"

#include "forward.hpp"

#include <algorithm>

namespace contactgnn {

EdgeIndex EdgeIndex::of(std::span<const IndexPair> edges) {
    EdgeIndex ix;
    const std::size_t n = edges.size();
    ix.src.resize(n);
    ix.dst.resize(n);
    ix.rev.resize(n);
    std::vector<std::size_t> order(n);
    for (std::size_t e = 0; e < n; ++e) order[e] = e;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return edges[a] < edges[b]; });
    for (std::size_t e = 0; e < n; ++e) {
        ix.src[e] = edges[e].first;
        ix.dst[e] = edges[e].second;
        const IndexPair want{edges[e].second, edges[e].first};
        auto it = std::lower_bound(order.begin(), order.end(), want,
                                   [&](std::size_t a, const IndexPair& p) { return edges[a] < p; });
        if (it == order.end() || edges[*it] != want)
            throw Error("missing_reverse_edge", "edge (" + std::to_string(want.second) + ", " +
                                                    std::to_string(want.first) + ") has no reverse");
        ix.rev[e] = static_cast<int>(*it);
    }
    return ix;
}

namespace {

MatrixXd edge_matrix(const std::vector<EdgeFeature>& f) {
    MatrixXd m(kEdgeFeatureDim, static_cast<Eigen::Index>(f.size()));
    for (std::size_t e = 0; e < f.size(); ++e)
        for (int c = 0; c < kEdgeFeatureDim; ++c) m(c, static_cast<Eigen::Index>(e)) = f[e][c];
    return m;
}

struct Inputs {
    MatrixXd x, em, ew;
    VectorXd g;
};

Inputs encoder_inputs(const GraphSample& s, const GnnConfig& config) {
    if (static_cast<int>(s.g.size()) != config.graph_dim())
        throw Error("shape_mismatch", "graph features have " + std::to_string(s.g.size()) +
                                          " entries, network expects " + std::to_string(config.graph_dim()));
    if (s.mesh_edge_feats.size() != s.mesh_edges.size() || s.world_edge_feats.size() != s.world_edges.size())
        throw Error("shape_mismatch", "edge feature counts differ from edge counts");
    Inputs in;
    const auto n = static_cast<Eigen::Index>(s.node_count());
    in.x.resize(kNodeFeatureDim, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto f = s.node_feature(static_cast<std::size_t>(i));
        for (int c = 0; c < kNodeFeatureDim; ++c) in.x(c, i) = f[c];
    }
    in.em = edge_matrix(s.mesh_edge_feats);
    in.ew = edge_matrix(s.world_edge_feats);
    in.g = Eigen::Map<const VectorXd>(s.g.data(), static_cast<Eigen::Index>(s.g.size()));
    return in;
}

MatrixXd gather_messages_input(const EdgeIndex& ix, const MatrixXd& x, const MatrixXd& e) {
    const Eigen::Index d = x.rows();
    const auto n = static_cast<Eigen::Index>(ix.src.size());
    MatrixXd z(3 * d, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        z.col(k).segment(0, d) = x.col(ix.src[k]);
        z.col(k).segment(d, d) = x.col(ix.dst[k]);
        z.col(k).segment(2 * d, d) = e.col(k);
    }
    return z;
}

MatrixXd skew(const EdgeIndex& ix, const MatrixXd& m) {
    MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index k = 0; k < m.cols(); ++k) out.col(k) = 0.5 * (m.col(k) - m.col(ix.rev[k]));
    return out;
}

MatrixXd aggregate(const EdgeIndex& ix, const MatrixXd& m, Eigen::Index n_nodes) {
    MatrixXd agg = MatrixXd::Zero(m.rows(), n_nodes);
    for (Eigen::Index k = 0; k < m.cols(); ++k) agg.col(ix.src[k]) += m.col(k);
    return agg;
}

Embeddings round_impl(int n, const EdgeIndex& mesh, const EdgeIndex& world, const Embeddings& in,
                      const GnnParams& params, RoundMessages* messages, detail::RoundTrace* trace) {
    if (n < 0 || n >= static_cast<int>(params.rounds.size()))
        throw Error("bad_round", "round " + std::to_string(n) + " does not exist");
    const RoundParams& rp = params.rounds[n];
    const MatrixXd zm = gather_messages_input(mesh, in.x, in.em);
    const MatrixXd zw = gather_messages_input(world, in.x, in.ew);
    const MatrixXd mm = trace ? rp.phi_m.forward(zm, trace->phi_m) : rp.phi_m.forward(zm);
    const MatrixXd mw = trace ? rp.phi_w.forward(zw, trace->phi_w) : rp.phi_w.forward(zw);
    const MatrixXd sm = skew(mesh, mm);
    const MatrixXd sw = skew(world, mw);

    const Eigen::Index d = in.x.rows(), nn = in.x.cols();
    MatrixXd u(3 * d, nn);
    u.topRows(d) = in.x;
    u.middleRows(d, d) = aggregate(mesh, sm, nn);
    u.bottomRows(d) = aggregate(world, sw, nn);

    Embeddings out;
    out.x = trace ? rp.gamma.forward(u, trace->gamma) : rp.gamma.forward(u);
    out.em = in.em + sm;
    out.ew = in.ew + sw;
    out.g = in.g;
    if (messages) *messages = {mm, mw, sm, sw};
    return out;
}

MatrixXd decoder_input(const MatrixXd& x, const VectorXd& g, DecodeMode mode) {
    if (mode == DecodeMode::Dot) return g.transpose() * x;
    return x.array().colwise() * g.array();
}

}  // namespace

Embeddings encode(const GraphSample& sample, const GnnParams& params) {
    const Inputs in = encoder_inputs(sample, params.config);
    Embeddings e;
    e.x = params.enc_x.forward(in.x);
    e.em = params.enc_em.forward(in.em);
    e.ew = params.enc_ew.forward(in.ew);
    e.g = params.enc_g.forward(in.g).col(0);
    return e;
}

Embeddings message_round(int n, const EdgeIndex& mesh, const EdgeIndex& world, const Embeddings& in,
                         const GnnParams& params, RoundMessages* messages) {
    return round_impl(n, mesh, world, in, params, messages, nullptr);
}

MatrixXd decode(const MatrixXd& x, const VectorXd& g, const GnnParams& params) {
    const MatrixXd z = decoder_input(x, g, params.config.decode);
    MatrixXd y(3, x.cols());
    for (int c = 0; c < 3; ++c) y.row(c) = params.dec[c].forward(z);
    return y;
}

namespace {

Points to_points(const MatrixXd& y) {
    Points out(static_cast<std::size_t>(y.cols()));
    for (Eigen::Index i = 0; i < y.cols(); ++i) out[static_cast<std::size_t>(i)] = y.col(i);
    return out;
}

}  // namespace

Points predict_accelerations(const GraphSample& sample, const GnnParams& params) {
    const EdgeIndex mesh = EdgeIndex::of(sample.mesh_edges);
    const EdgeIndex world = EdgeIndex::of(sample.world_edges);
    Embeddings e = encode(sample, params);
    for (int n = 0; n < params.config.k; ++n) e = message_round(n, mesh, world, e, params);
    return to_points(decode(e.x, e.g, params));
}

std::vector<NodeState> integrate_step(const std::vector<NodeState>& nodes, const Points& y_hat, double dt) {
    if (nodes.size() != y_hat.size()) throw Error("shape_mismatch", "node and acceleration counts differ");
    std::vector<NodeState> out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out[i].v = nodes[i].v + y_hat[i] * dt;
        out[i].r = nodes[i].r + nodes[i].v * dt + 0.5 * y_hat[i] * dt * dt;
        out[i].a = y_hat[i];
    }
    return out;
}

ccd::Trajectory step_trajectory(const std::vector<NodeState>& nodes, const Points& y_hat, double dt) {
    const auto next = integrate_step(nodes, y_hat, dt);
    Points r0(nodes.size()), r1(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        r0[i] = nodes[i].r;
        r1[i] = next[i].r;
    }
    return ccd::Trajectory::from_endpoints(std::move(r0), r1, dt);
}

namespace detail {

MatrixXd forward_traced(const GraphSample& sample, const GnnParams& params, ForwardTrace& trace) {
    const Inputs in = encoder_inputs(sample, params.config);
    trace.mesh = EdgeIndex::of(sample.mesh_edges);
    trace.world = EdgeIndex::of(sample.world_edges);
    Embeddings e;
    e.x = params.enc_x.forward(in.x, trace.enc_x);
    e.em = params.enc_em.forward(in.em, trace.enc_em);
    e.ew = params.enc_ew.forward(in.ew, trace.enc_ew);
    e.g = params.enc_g.forward(in.g, trace.enc_g).col(0);
    trace.states.assign(1, e);
    trace.rounds.assign(params.config.k, {});
    for (int n = 0; n < params.config.k; ++n)
        trace.states.push_back(round_impl(n, trace.mesh, trace.world, trace.states.back(), params, nullptr,
                                          &trace.rounds[n]));
    const Embeddings& last = trace.states.back();
    trace.dec_in = decoder_input(last.x, last.g, params.config.decode);
    MatrixXd y(3, last.x.cols());
    for (int c = 0; c < 3; ++c) y.row(c) = params.dec[c].forward(trace.dec_in, trace.dec[c]);
    return y;
}

void backward(const GnnParams& params, const ForwardTrace& trace, const MatrixXd& d_y, GnnParams& grad) {
    const Embeddings& last = trace.states.back();
    const Eigen::Index d = last.x.rows();

    // Decoders.
    MatrixXd d_z = MatrixXd::Zero(trace.dec_in.rows(), trace.dec_in.cols());
    for (int c = 0; c < 3; ++c) d_z += params.dec[c].backward(trace.dec[c], d_y.row(c), grad.dec[c]);
    MatrixXd d_x;
    VectorXd d_g;
    if (params.config.decode == DecodeMode::Dot) {
        d_x = last.g * d_z;                    // d x 1 times 1 x n
        d_g = last.x * d_z.transpose();        // d x n times n x 1
    } else {
        d_x = d_z.array().colwise() * last.g.array();
        d_g = (d_z.array() * last.x.array()).rowwise().sum();
    }
    MatrixXd d_em = MatrixXd::Zero(d, last.em.cols());
    MatrixXd d_ew = MatrixXd::Zero(d, last.ew.cols());

    // Rounds in reverse.
    for (int n = params.config.k - 1; n >= 0; --n) {
        const RoundParams& rp = params.rounds[n];
        RoundParams& gp = grad.rounds[n];
        const detail::RoundTrace& rt = trace.rounds[n];
        const MatrixXd d_u = rp.gamma.backward(rt.gamma, d_x, gp.gamma);
        MatrixXd d_x_in = d_u.topRows(d);
        const MatrixXd d_agg_m = d_u.middleRows(d, d);
        const MatrixXd d_agg_w = d_u.bottomRows(d);

        auto edge_type = [&](const EdgeIndex& ix, const Mlp& phi, const Mlp::Cache& cache, Mlp& g_phi,
                             const MatrixXd& d_agg, MatrixXd& d_e) {
            const auto ne = static_cast<Eigen::Index>(ix.src.size());
            if (ne == 0) return;
            // e_out = e_in + skew and agg_i = sum over edges (i, .) of skew.
            MatrixXd d_skew = d_e;
            for (Eigen::Index k = 0; k < ne; ++k) d_skew.col(k) += d_agg.col(ix.src[k]);
            MatrixXd d_m(d, ne);
            for (Eigen::Index k = 0; k < ne; ++k) d_m.col(k) = 0.5 * (d_skew.col(k) - d_skew.col(ix.rev[k]));
            const MatrixXd d_in = phi.backward(cache, d_m, g_phi);
            for (Eigen::Index k = 0; k < ne; ++k) {
                d_x_in.col(ix.src[k]) += d_in.col(k).segment(0, d);
                d_x_in.col(ix.dst[k]) += d_in.col(k).segment(d, d);
                d_e.col(k) += d_in.col(k).segment(2 * d, d);
            }
        };
        edge_type(trace.mesh, rp.phi_m, rt.phi_m, gp.phi_m, d_agg_m, d_em);
        edge_type(trace.world, rp.phi_w, rt.phi_w, gp.phi_w, d_agg_w, d_ew);
        d_x = std::move(d_x_in);
    }

    // Encoders; input gradients are discarded.
    params.enc_x.backward(trace.enc_x, d_x, grad.enc_x);
    if (d_em.cols() > 0) params.enc_em.backward(trace.enc_em, d_em, grad.enc_em);
    if (d_ew.cols() > 0) params.enc_ew.backward(trace.enc_ew, d_ew, grad.enc_ew);
    params.enc_g.backward(trace.enc_g, d_g, grad.enc_g);
}

}  // namespace detail

}  // namespace contactgnn
