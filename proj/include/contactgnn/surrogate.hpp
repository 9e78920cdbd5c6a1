#pragma once

// Encode-process-decode graph network predicting next-step nodal
// accelerations, with a hand-written reverse pass for training.
//
// Batched evaluation keeps one sample per matrix column.

#include "contactgnn/ccd/detect.hpp"
#include "contactgnn/losses_metrics.hpp"
#include "contactgnn/mesh_graph.hpp"

#include <cstdint>
#include <filesystem>
#include <span>

namespace contactgnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct MlpLayer {
    MatrixXd W;
    VectorXd b;
};

/// `depth` hidden layers of `width` units followed by an affine output layer.
struct MlpShape {
    int in = 0;
    int width = 0;
    int depth = 1;
    int out = 0;
};

/// Fully connected ReLU network. A non-final layer whose input and output
/// widths agree adds its input back: h = relu(W x + b) + x.
struct Mlp {
    std::vector<MlpLayer> layers;

    struct Cache {
        std::vector<MatrixXd> inputs;
        std::vector<MatrixXd> pre;
    };

    static Mlp zeros(const MlpShape& shape);

    int in_dim() const { return static_cast<int>(layers.front().W.cols()); }
    int out_dim() const { return static_cast<int>(layers.back().W.rows()); }
    std::size_t param_count() const;
    bool has_skip(std::size_t layer) const;

    MatrixXd forward(const MatrixXd& x) const;
    MatrixXd forward(const MatrixXd& x, Cache& cache) const;
    /// Adds parameter gradients into `grad` and returns the input gradient.
    MatrixXd backward(const Cache& cache, const MatrixXd& d_out, Mlp& grad) const;
};

enum class DecodeMode {
    /// x_i . g, one scalar per node fed to each decoder.
    Dot,
    /// x_i * g componentwise, an embed_dim vector fed to each decoder.
    Elementwise,
};

struct GnnConfig {
    int embed_dim = 8;
    int width = 16;
    int k = 1;
    int depth_enc_x = 2;
    int depth_enc_em = 2;
    int depth_enc_ew = 2;
    int depth_enc_g = 2;
    int depth_phi_m = 2;
    int depth_phi_w = 2;
    int depth_gamma = 2;
    int depth_dec = 2;
    int n_globals = 0;
    DecodeMode decode = DecodeMode::Dot;

    int graph_dim() const { return n_globals + 2; }
    int decoder_in() const { return decode == DecodeMode::Dot ? 1 : embed_dim; }
    void validate() const;

    static GnnConfig tiny(int n_globals);
    static GnnConfig valve_small();
    static GnnConfig valve_large();
    static GnnConfig varying_geometry_small();
    static GnnConfig varying_geometry_large();
};

struct RoundParams {
    Mlp phi_m;
    Mlp phi_w;
    Mlp gamma;
};

struct GnnParams {
    GnnConfig config;
    Mlp enc_x, enc_em, enc_ew, enc_g;
    std::vector<RoundParams> rounds;
    std::array<Mlp, 3> dec;

    static GnnParams zeros(const GnnConfig& config);

    std::size_t param_count() const;

    /// Calls f(double* data, std::size_t n) for every weight and bias block in
    /// declaration order: encoders x, eM, eW, g; rounds (phi_m, phi_w, gamma);
    /// decoders 1..3. Within a layer W (column-major) precedes b.
    template <class F>
    void visit(F&& f) {
        visit_impl(*this, f);
    }
    template <class F>
    void visit(F&& f) const {
        visit_impl(*this, f);
    }

    std::vector<double> flatten() const;
    void assign(std::span<const double> values);

    void set_zero();
    void add_scaled(const GnnParams& other, double s);
    double squared_norm() const;

private:
    template <class Self, class F>
    static void visit_impl(Self& self, F& f) {
        auto mlp = [&f](auto& m) {
            for (auto& layer : m.layers) {
                f(layer.W.data(), static_cast<std::size_t>(layer.W.size()));
                f(layer.b.data(), static_cast<std::size_t>(layer.b.size()));
            }
        };
        mlp(self.enc_x);
        mlp(self.enc_em);
        mlp(self.enc_ew);
        mlp(self.enc_g);
        for (auto& r : self.rounds) {
            mlp(r.phi_m);
            mlp(r.phi_w);
            mlp(r.gamma);
        }
        for (auto& d : self.dec) mlp(d);
    }
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias,
/// drawn in declaration order from a 64-bit Mersenne Twister.
GnnParams init_params(const GnnConfig& config, std::uint64_t seed);

/// Directed edge list with, per edge, its source, target and the index of
/// the opposite orientation.
struct EdgeIndex {
    std::vector<int> src, dst, rev;
    static EdgeIndex of(std::span<const IndexPair> edges);
};

struct Embeddings {
    MatrixXd x;   // embed_dim x nodes
    MatrixXd em;  // embed_dim x mesh edges
    MatrixXd ew;  // embed_dim x world edges
    VectorXd g;   // embed_dim
};

Embeddings encode(const GraphSample& sample, const GnnParams& params);

/// Raw and skew-symmetrized messages of one round.
struct RoundMessages {
    MatrixXd m_mesh, m_world;
    MatrixXd skew_mesh, skew_world;
};

/// Round n (0-based) of message passing.
Embeddings message_round(int n, const EdgeIndex& mesh, const EdgeIndex& world, const Embeddings& in,
                         const GnnParams& params, RoundMessages* messages = nullptr);

/// 3 x nodes accelerations from the final node embeddings and graph embedding.
MatrixXd decode(const MatrixXd& x, const VectorXd& g, const GnnParams& params);

Points predict_accelerations(const GraphSample& sample, const GnnParams& params);

/// Explicit update: v+ = v + y dt, r+ = r + v dt + y dt^2 / 2, a+ = y.
std::vector<NodeState> integrate_step(const std::vector<NodeState>& nodes, const Points& y_hat, double dt);

/// Per-step linear trajectory r -> r+ with velocity (r+ - r) / dt.
ccd::Trajectory step_trajectory(const std::vector<NodeState>& nodes, const Points& y_hat, double dt);

// ---- training -------------------------------------------------------------

struct BatchItem {
    const GraphSample* sample = nullptr;
    /// Needed when the contact term is active.
    const ccd::ContactTopology* topology = nullptr;
};

struct GradientOptions {
    LossWeights weights;
    /// Evaluate the contact term at all (off in dynamic-only training).
    bool contact = false;
    double length_scale = 1.0;
    ccd::DetectOptions detect;
};

struct LossBreakdown {
    double total = 0.0;
    double dynamic = 0.0;
    double contact = 0.0;
    bool contact_evaluated = false;
};

struct GradientResult {
    LossBreakdown loss;
    GnnParams grad;
};

/// Loss of a batch without gradients.
LossBreakdown evaluate_loss(const GnnParams& params, std::span<const BatchItem> batch,
                            const GradientOptions& options);

/// Loss and its gradient with respect to every parameter. Per-graph passes
/// may run concurrently; their gradients are summed in batch order.
/// The contact term's fired sub-tests are held fixed.
GradientResult loss_gradient(const GnnParams& params, std::span<const BatchItem> batch,
                             const GradientOptions& options, int batch_id = 0);

// ---- checkpoints ----------------------------------------------------------

struct Checkpoint {
    GnnParams params;
    std::uint64_t seed = 0;
    int epoch = -1;
};

std::string config_to_json(const GnnConfig& config);
GnnConfig config_from_json(const std::string& text);

/// Binary container plus a `<path>.json` sidecar.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace contactgnn
