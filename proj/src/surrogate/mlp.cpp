#include "contactgnn/surrogate.hpp"

#include <cmath>
#include <random>

namespace contactgnn {

Mlp Mlp::zeros(const MlpShape& shape) {
    if (shape.in <= 0 || shape.width <= 0 || shape.depth <= 0 || shape.out <= 0)
        throw Error("bad_config", "MLP dimensions must be positive");
    Mlp m;
    int in = shape.in;
    for (int l = 0; l < shape.depth; ++l) {
        m.layers.push_back({MatrixXd::Zero(shape.width, in), VectorXd::Zero(shape.width)});
        in = shape.width;
    }
    m.layers.push_back({MatrixXd::Zero(shape.out, in), VectorXd::Zero(shape.out)});
    return m;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.W.size() + l.b.size();
    return n;
}

bool Mlp::has_skip(std::size_t layer) const {
    return layer + 1 < layers.size() && layers[layer].W.rows() == layers[layer].W.cols();
}

MatrixXd Mlp::forward(const MatrixXd& x) const {
    if (x.rows() != in_dim())
        throw Error("shape_mismatch", "MLP expects input width " + std::to_string(in_dim()) + ", got " +
                                          std::to_string(x.rows()));
    MatrixXd h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        MatrixXd z = layers[l].W * h;
        z.colwise() += layers[l].b;
        if (l + 1 == layers.size()) return z;
        MatrixXd a = z.cwiseMax(0.0);
        if (has_skip(l)) a += h;
        h = std::move(a);
    }
    return h;
}

MatrixXd Mlp::forward(const MatrixXd& x, Cache& cache) const {
    if (x.rows() != in_dim())
        throw Error("shape_mismatch", "MLP expects input width " + std::to_string(in_dim()) + ", got " +
                                          std::to_string(x.rows()));
    cache.inputs.resize(layers.size());
    cache.pre.resize(layers.size());
    MatrixXd h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        cache.inputs[l] = h;
        MatrixXd z = layers[l].W * h;
        z.colwise() += layers[l].b;
        if (l + 1 == layers.size()) {
            cache.pre[l] = MatrixXd();
            return z;
        }
        MatrixXd a = z.cwiseMax(0.0);
        if (has_skip(l)) a += h;
        cache.pre[l] = std::move(z);
        h = std::move(a);
    }
    return h;
}

MatrixXd Mlp::backward(const Cache& cache, const MatrixXd& d_out, Mlp& grad) const {
    MatrixXd d = d_out;
    for (std::size_t l = layers.size(); l-- > 0;) {
        MatrixXd dz;
        if (l + 1 == layers.size()) {
            dz = d;
        } else {
            dz = d.array() * (cache.pre[l].array() > 0.0).cast<double>();
        }
        grad.layers[l].W.noalias() += dz * cache.inputs[l].transpose();
        grad.layers[l].b += dz.rowwise().sum();
        MatrixXd d_in = layers[l].W.transpose() * dz;
        if (has_skip(l)) d_in += d;
        d = std::move(d_in);
    }
    return d;
}

// ---- configuration --------------------------------------------------------

void GnnConfig::validate() const {
    if (k < 1) throw Error("bad_config", "message passing rounds must be at least 1");
    for (int v : {embed_dim, width, depth_enc_x, depth_enc_em, depth_enc_ew, depth_enc_g, depth_phi_m,
                  depth_phi_w, depth_gamma, depth_dec})
        if (v <= 0) throw Error("bad_config", "network dimensions must be positive");
    if (n_globals < 0) throw Error("bad_config", "global feature count must be non-negative");
}

GnnConfig GnnConfig::tiny(int n_globals) {
    GnnConfig c;
    c.n_globals = n_globals;
    return c;
}

GnnConfig GnnConfig::valve_small() {
    GnnConfig c;
    c.embed_dim = 64;
    c.width = 128;
    c.k = 3;
    c.depth_enc_x = c.depth_enc_em = c.depth_enc_ew = 2;
    c.depth_phi_m = c.depth_phi_w = c.depth_gamma = 2;
    c.depth_dec = 2;
    c.depth_enc_g = 2;
    c.n_globals = 4;
    c.decode = DecodeMode::Elementwise;
    return c;
}

GnnConfig GnnConfig::valve_large() {
    GnnConfig c = valve_small();
    c.k = 20;
    c.depth_enc_x = c.depth_enc_em = c.depth_enc_ew = 4;
    c.depth_dec = 4;
    c.depth_enc_g = 4;
    return c;
}

GnnConfig GnnConfig::varying_geometry_small() {
    GnnConfig c;
    c.embed_dim = 64;
    c.width = 128;
    c.k = 5;
    c.depth_enc_x = c.depth_enc_em = c.depth_enc_ew = 3;
    c.depth_phi_m = c.depth_phi_w = c.depth_gamma = 3;
    c.depth_dec = 2;
    c.depth_enc_g = 2;
    c.n_globals = 2;
    c.decode = DecodeMode::Elementwise;
    return c;
}

GnnConfig GnnConfig::varying_geometry_large() {
    GnnConfig c = varying_geometry_small();
    c.k = 20;
    c.depth_dec = 3;
    c.depth_enc_g = 3;
    return c;
}

// ---- parameter container --------------------------------------------------

GnnParams GnnParams::zeros(const GnnConfig& config) {
    config.validate();
    const int e = config.embed_dim, w = config.width;
    GnnParams p;
    p.config = config;
    p.enc_x = Mlp::zeros({kNodeFeatureDim, w, config.depth_enc_x, e});
    p.enc_em = Mlp::zeros({kEdgeFeatureDim, w, config.depth_enc_em, e});
    p.enc_ew = Mlp::zeros({kEdgeFeatureDim, w, config.depth_enc_ew, e});
    p.enc_g = Mlp::zeros({config.graph_dim(), w, config.depth_enc_g, e});
    for (int n = 0; n < config.k; ++n)
        p.rounds.push_back({Mlp::zeros({3 * e, w, config.depth_phi_m, e}),
                            Mlp::zeros({3 * e, w, config.depth_phi_w, e}),
                            Mlp::zeros({3 * e, w, config.depth_gamma, e})});
    for (auto& d : p.dec) d = Mlp::zeros({config.decoder_in(), w, config.depth_dec, 1});
    return p;
}

std::size_t GnnParams::param_count() const {
    std::size_t n = 0;
    visit([&n](const double*, std::size_t k) { n += k; });
    return n;
}

std::vector<double> GnnParams::flatten() const {
    std::vector<double> out;
    out.reserve(param_count());
    visit([&out](const double* d, std::size_t k) { out.insert(out.end(), d, d + k); });
    return out;
}

void GnnParams::assign(std::span<const double> values) {
    if (values.size() != param_count())
        throw Error("shape_mismatch", "parameter vector has " + std::to_string(values.size()) +
                                          " entries, network has " + std::to_string(param_count()));
    std::size_t pos = 0;
    visit([&](double* d, std::size_t k) {
        std::copy(values.begin() + pos, values.begin() + pos + k, d);
        pos += k;
    });
}

void GnnParams::set_zero() {
    visit([](double* d, std::size_t k) { std::fill(d, d + k, 0.0); });
}

void GnnParams::add_scaled(const GnnParams& other, double s) {
    std::vector<std::pair<const double*, std::size_t>> blocks;
    other.visit([&blocks](const double* d, std::size_t k) { blocks.emplace_back(d, k); });
    std::size_t b = 0;
    visit([&](double* d, std::size_t k) {
        if (b >= blocks.size() || blocks[b].second != k) throw Error("shape_mismatch", "parameter layouts differ");
        const double* o = blocks[b++].first;
        for (std::size_t i = 0; i < k; ++i) d[i] += s * o[i];
    });
}

double GnnParams::squared_norm() const {
    double s = 0.0;
    visit([&s](const double* d, std::size_t k) {
        for (std::size_t i = 0; i < k; ++i) s += d[i] * d[i];
    });
    return s;
}

GnnParams init_params(const GnnConfig& config, std::uint64_t seed) {
    GnnParams p = GnnParams::zeros(config);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](Mlp& m) {
        for (auto& layer : m.layers) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(layer.W.cols()));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (Eigen::Index i = 0; i < layer.W.size(); ++i) layer.W.data()[i] = u(rng);
            for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b[i] = u(rng);
        }
    };
    fill(p.enc_x);
    fill(p.enc_em);
    fill(p.enc_ew);
    fill(p.enc_g);
    for (auto& r : p.rounds) {
        fill(r.phi_m);
        fill(r.phi_w);
        fill(r.gamma);
    }
    for (auto& d : p.dec) fill(d);
    return p;
}

}  // namespace contactgnn
