#include <doctest.h>

#include "contactgnn/surrogate.hpp"
#include "support/reference_net.hpp"
#include "support/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

using namespace contactgnn;

namespace {

using Vec = std::vector<double>;

// Straight-line reimplementation of the network on plain vectors.
Vec ref_mlp(const Mlp& m, Vec x) {
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const auto& W = m.layers[l].W;
        const auto& b = m.layers[l].b;
        Vec z(W.rows());
        for (int r = 0; r < W.rows(); ++r) {
            double s = b[r];
            for (int c = 0; c < W.cols(); ++c) s += W(r, c) * x[c];
            z[r] = s;
        }
        if (l + 1 < m.layers.size()) {
            for (auto& v : z) v = std::max(v, 0.0);
            if (W.rows() == W.cols())
                for (std::size_t r = 0; r < z.size(); ++r) z[r] += x[r];
        }
        x = z;
    }
    return x;
}

double max_abs_diff(const Points& a, const Points& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
    return m;
}

}  // namespace

TEST_CASE("mlp forward: constructed cases") {
    Mlp m = Mlp::zeros({3, 4, 2, 2});
    m.layers.back().b << 1.5, -2.0;
    const MatrixXd y = m.forward(VectorXd::Constant(3, 7.0));
    CHECK(y(0, 0) == 1.5);
    CHECK(y(1, 0) == -2.0);

    Mlp id = Mlp::zeros({3, 3, 1, 3});
    id.layers[0].W.setIdentity();
    id.layers[1].W.setIdentity();
    VectorXd x(3);
    x << 0.5, 1.0, 2.0;
    CHECK(id.forward(x).col(0).isApprox(2.0 * x));
    CHECK(id.has_skip(0));
    CHECK_FALSE(id.has_skip(1));

    CHECK_THROWS_AS(m.forward(VectorXd::Zero(4)), Error);
}

TEST_CASE("mlp forward matches a straight-line evaluation") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const GnnParams p = init_params(GnnConfig::tiny(2), 5);
    for (const Mlp* m : {&p.enc_x, &p.rounds[0].gamma, &p.dec[1]}) {
        MatrixXd x(m->in_dim(), 6);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
        const MatrixXd y = m->forward(x);
        for (int c = 0; c < 6; ++c) {
            const Vec want = ref_mlp(*m, Vec(x.col(c).data(), x.col(c).data() + x.rows()));
            for (std::size_t r = 0; r < want.size(); ++r) CHECK(std::abs(y(r, c) - want[r]) <= 1e-12);
        }
    }
}

TEST_CASE("parameter counts of the published configurations") {
    CHECK(GnnParams::zeros(GnnConfig::valve_small()).param_count() == 622659);
    CHECK(GnnParams::zeros(GnnConfig::varying_geometry_small()).param_count() == 1216451);
    CHECK(GnnParams::zeros(GnnConfig::varying_geometry_large()).param_count() == 4251779);
    GnnConfig dot = GnnConfig::valve_small();
    dot.decode = DecodeMode::Dot;
    CHECK(GnnParams::zeros(dot).param_count() == 622659 - 3 * 63 * 128);
}

TEST_CASE("encode widths and zero-weight encoders") {
    const auto s = scenes::two_sheets(3, 0.2, 0.0, 3, 4);
    GnnParams p = GnnParams::zeros(GnnConfig::valve_small());
    p.enc_g.layers.back().b.setConstant(0.25);
    const Embeddings e = encode(s.sample, p);
    CHECK(e.g.size() == 64);
    CHECK(e.x.rows() == 64);
    CHECK((e.g.array() == 0.25).all());
    CHECK((e.x.array() == 0.0).all());
}

TEST_CASE("prediction matches the straight-line reference") {
    for (auto mode : {DecodeMode::Dot, DecodeMode::Elementwise}) {
        GnnConfig cfg = GnnConfig::tiny(2);
        cfg.k = 2;
        cfg.decode = mode;
        const GnnParams p = init_params(cfg, 11);
        const auto s = scenes::two_sheets(3, 0.2, 0.3, 7);
        REQUIRE_FALSE(s.sample.world_edges.empty());
        const Points got = predict_accelerations(s.sample, p);
        const auto ref = reference::predict<double>(s.sample, cfg, reference::Layout::of(p), p.flatten());
        Points want(ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) want[i] = Vec3(ref[i][0], ref[i][1], ref[i][2]);
        CHECK(max_abs_diff(got, want) <= 1e-12);
        CHECK(predict_accelerations(s.sample, p) == got);
    }
}

TEST_CASE("messages are skew-symmetric in every round") {
    std::uint64_t seed = 100;
    for (int trial = 0; trial < 5; ++trial) {
        GnnConfig cfg = GnnConfig::tiny(2);
        cfg.k = 3;
        const GnnParams p = init_params(cfg, seed++);
        const auto s = scenes::two_sheets(3, 0.15, 0.2, seed++);
        const EdgeIndex mesh = EdgeIndex::of(s.sample.mesh_edges);
        const EdgeIndex world = EdgeIndex::of(s.sample.world_edges);
        Embeddings e = encode(s.sample, p);
        double worst = 0.0;
        for (int n = 0; n < cfg.k; ++n) {
            RoundMessages m;
            e = message_round(n, mesh, world, e, p, &m);
            for (std::size_t k = 0; k < mesh.rev.size(); ++k)
                worst = std::max(worst, (m.skew_mesh.col(k) + m.skew_mesh.col(mesh.rev[k])).cwiseAbs().maxCoeff());
            for (std::size_t k = 0; k < world.rev.size(); ++k)
                worst = std::max(worst, (m.skew_world.col(k) + m.skew_world.col(world.rev[k])).cwiseAbs().maxCoeff());
        }
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("isolated nodes update from zero aggregates") {
    GraphSample s;
    s.g = {0.0, 0.025};
    s.nodes.resize(1);
    s.nodes[0].r = Vec3(1, 2, 3);
    const GnnParams p = init_params(GnnConfig::tiny(0), 2);
    const Embeddings e0 = encode(s, p);
    const Embeddings e1 = message_round(0, EdgeIndex{}, EdgeIndex{}, e0, p);
    MatrixXd u = MatrixXd::Zero(3 * e0.x.rows(), 1);
    u.topRows(e0.x.rows()) = e0.x;
    CHECK(e1.x.isApprox(p.rounds[0].gamma.forward(u)));
}

TEST_CASE("predictions are permutation equivariant") {
    GnnConfig cfg = GnnConfig::tiny(2);
    cfg.k = 2;
    const GnnParams p = init_params(cfg, 21);
    const auto s = scenes::two_sheets(3, 0.2, 0.3, 9);
    const std::size_t n = s.sample.node_count();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(4);
    std::shuffle(perm.begin(), perm.end(), rng);  // new index of old node i is perm[i]

    GraphSample t = s.sample;
    for (std::size_t i = 0; i < n; ++i) t.nodes[perm[i]] = s.sample.nodes[i];
    auto relabel = [&](const std::vector<IndexPair>& edges, const std::vector<EdgeFeature>& feats,
                       std::vector<IndexPair>& out_e, std::vector<EdgeFeature>& out_f) {
        std::vector<std::pair<IndexPair, EdgeFeature>> tmp;
        for (std::size_t k = 0; k < edges.size(); ++k)
            tmp.push_back({{perm[edges[k].first], perm[edges[k].second]}, feats[k]});
        std::sort(tmp.begin(), tmp.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        out_e.clear();
        out_f.clear();
        for (auto& [e, f] : tmp) {
            out_e.push_back(e);
            out_f.push_back(f);
        }
    };
    relabel(s.sample.mesh_edges, s.sample.mesh_edge_feats, t.mesh_edges, t.mesh_edge_feats);
    relabel(s.sample.world_edges, s.sample.world_edge_feats, t.world_edges, t.world_edge_feats);

    const Points a = predict_accelerations(s.sample, p);
    const Points b = predict_accelerations(t, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, (a[i] - b[perm[i]]).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-6);
}

TEST_CASE("decode: zero graph embedding and identical node embeddings") {
    const GnnParams p = init_params(GnnConfig::tiny(2), 8);
    MatrixXd x = MatrixXd::Random(8, 5);
    const MatrixXd y0 = decode(x, VectorXd::Zero(8), p);
    for (int i = 1; i < 5; ++i) CHECK(y0.col(i) == y0.col(0));
    x.col(3) = x.col(1);
    const MatrixXd y1 = decode(x, VectorXd::Random(8), p);
    CHECK(y1.rows() == 3);
    CHECK(y1.col(3) == y1.col(1));
}

TEST_CASE("integrate_step") {
    std::vector<NodeState> nodes(1);
    nodes[0].r = Vec3(1, 2, 3);
    nodes[0].v = Vec3(0.5, 0, 0);
    auto next = integrate_step(nodes, {Vec3::Zero()}, 0.1);
    CHECK(next[0].r.isApprox(Vec3(1.05, 2, 3)));
    CHECK(next[0].v == nodes[0].v);
    nodes[0].v.setZero();
    next = integrate_step(nodes, {Vec3(0, 0, 2)}, 1.0);
    CHECK(next[0].r == Vec3(1, 2, 4));
    CHECK(next[0].a == Vec3(0, 0, 2));
    nodes[0].v = Vec3(1, -1, 2);
    next = integrate_step(nodes, {Vec3(4, 8, -16)}, 0.025);
    const Vec3 want = nodes[0].r + 0.025 * nodes[0].v + 0.0003125 * Vec3(4, 8, -16);
    CHECK((next[0].r - want).norm() <= 1e-15);
}

TEST_CASE("init_params is a function of the seed") {
    const GnnConfig cfg = GnnConfig::tiny(2);
    CHECK(init_params(cfg, 0).flatten() == init_params(cfg, 0).flatten());
    CHECK(init_params(cfg, 0).flatten() != init_params(cfg, 1).flatten());
    const auto v = init_params(cfg, 0).flatten();
    CHECK(v.size() == 5419);
    double sum = 0.0, abs_sum = 0.0;
    for (double x : v) {
        sum += x;
        abs_sum += std::abs(x);
    }
    // Golden values recorded from the first build (libstdc++ mt19937_64).
    CHECK(sum == doctest::Approx(12.009950975365427).epsilon(1e-12));
    CHECK(abs_sum == doctest::Approx(723.61002290068063).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "contactgnn_test_ckpt";
    std::filesystem::create_directories(dir);
    Checkpoint ck{init_params(GnnConfig::varying_geometry_small(), 3), 3, 12};
    save_checkpoint(dir / "a.ckpt", ck);
    const Checkpoint back = load_checkpoint(dir / "a.ckpt");
    CHECK(back.seed == 3);
    CHECK(back.epoch == 12);
    CHECK(back.params.config.k == 5);
    CHECK(back.params.flatten() == ck.params.flatten());
    CHECK(std::filesystem::exists(dir / "a.ckpt.json"));
    std::filesystem::remove_all(dir);
}

// ---- gradients ------------------------------------------------------------

TEST_CASE("loss_gradient: zero signal gives zero gradient") {
    const GnnParams p = init_params(GnnConfig::tiny(2), 4);
    auto s = scenes::two_sheets(3, 0.5, 0.0, 2);
    s.sample.targets = predict_accelerations(s.sample, p);
    const BatchItem item{&s.sample, &s.topo};
    GradientOptions opt;
    opt.contact = true;
    opt.weights = {1.0, 1.0};
    const GradientResult r = loss_gradient(p, std::span(&item, 1), opt);
    CHECK(r.loss.total == 0.0);
    CHECK(r.grad.squared_norm() == 0.0);
}

TEST_CASE("loss_gradient matches central differences: dynamic loss") {
    GnnConfig cfg = GnnConfig::tiny(2);
    for (auto mode : {DecodeMode::Dot, DecodeMode::Elementwise}) {
        cfg.decode = mode;
        const GnnParams p = init_params(cfg, 17);
        const auto s = scenes::two_sheets(3, 0.2, 0.3, 12);
        const BatchItem item{&s.sample, nullptr};
        GradientOptions opt;
        const GradientResult r = loss_gradient(p, std::span(&item, 1), opt);
        const auto lay = reference::Layout::of(p);
        CHECK(reference::loss<double>(s.sample, cfg, lay, p.flatten(), opt.weights) ==
              doctest::Approx(r.loss.total).epsilon(1e-12));
        const auto rep = reference::fd_check(p, r.grad, [&](const reference::Vec<long double>& theta) {
            return reference::loss(s.sample, cfg, lay, theta, opt.weights);
        });
        MESSAGE("dynamic FD: " << rep.checked << " parameters, worst relative error " << rep.worst);
        CHECK(rep.checked > 1000);
        CHECK(rep.worst <= 1e-4);
    }
}

TEST_CASE("loss_gradient matches central differences: contact active") {
    const GnnParams p = init_params(GnnConfig::tiny(2), 23);
    const auto s = scenes::two_sheets(4, 0.02, 2.0, 31);
    const BatchItem item{&s.sample, &s.topo};
    GradientOptions opt;
    opt.contact = true;
    opt.length_scale = 0.5;
    for (LossWeights w : {LossWeights{1.0, 50.0}, LossWeights{0.0, 1.0}}) {
        opt.weights = w;
        const GradientResult r = loss_gradient(p, std::span(&item, 1), opt);
        REQUIRE(r.loss.contact > 0.0);
        const auto traj = step_trajectory(s.sample.nodes, predict_accelerations(s.sample, p), s.sample.dt());
        const auto fired = ccd::detect_contacts(traj, s.topo, opt.detect).events;
        const double area_tol = ccd::SceneScale::of(traj, opt.detect.tol).area_tol;
        const auto lay = reference::Layout::of(p);
        auto pinned = [&](const auto& theta) {
            return reference::loss(s.sample, p.config, lay, theta, w, &s.topo, &fired, opt.length_scale, area_tol);
        };
        CHECK(pinned(p.flatten()) == doctest::Approx(r.loss.total).epsilon(1e-12));
        const auto rep = reference::fd_check(p, r.grad, [&](const reference::Vec<long double>& theta) {
            return pinned(theta);
        });
        MESSAGE("contact FD (w_c = " << w.w_c << "): " << rep.checked << " parameters, worst relative error "
                                      << rep.worst);
        CHECK(rep.checked > 500);
        CHECK(rep.worst <= 1e-3);
    }
}

TEST_CASE("batch gradients sum per-graph gradients in order") {
    const GnnParams p = init_params(GnnConfig::tiny(2), 6);
    const auto a = scenes::two_sheets(3, 0.2, 0.1, 40);
    const auto b = scenes::two_sheets(3, 0.2, 0.1, 41);
    const std::vector<BatchItem> batch = {{&a.sample, nullptr}, {&b.sample, nullptr}};
    GradientOptions opt;
    const GradientResult both = loss_gradient(p, batch, opt);
    const GradientResult again = loss_gradient(p, batch, opt);
    CHECK(both.grad.flatten() == again.grad.flatten());
    const GradientResult ra = loss_gradient(p, std::span(&batch[0], 1), opt);
    const GradientResult rb = loss_gradient(p, std::span(&batch[1], 1), opt);
    // Equal node counts: the batch gradient is the mean of the two.
    GnnParams mean = ra.grad;
    mean.add_scaled(rb.grad, 1.0);
    const auto m = mean.flatten();
    const auto g = both.grad.flatten();
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == doctest::Approx(0.5 * m[k]).epsilon(1e-12));

    GraphSample bad = a.sample;
    bad.targets->front() = Vec3(std::nan(""), 0, 0);
    const BatchItem bi{&bad, nullptr};
    try {
        loss_gradient(p, std::span(&bi, 1), opt, 7);
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("batch 7") != std::string::npos);
    }
}
