#pragma once

// Desk-scale trainer: Adam with decoupled weight decay, per-batch gradient
// norm clipping, step learning-rate schedule, and the two-mode protocol
// (dynamic only, then dynamic + contact from an activation epoch).

#include "contactgnn/harness/dataset.hpp"
#include "contactgnn/harness/json_io.hpp"
#include "contactgnn/surrogate.hpp"

#include <functional>
#include <optional>

namespace contactgnn::harness {

enum class TrainMode { D, DC };

struct TrainConfig {
    int epochs = 500;
    int batch_size = 16;
    /// (first epoch, rate) pairs, epochs strictly increasing, first at 0.
    std::vector<std::pair<int, double>> schedule = {{0, 1e-3}};
    double weight_decay = 0.0;
    double clip = 1.0;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    TrainMode mode = TrainMode::D;
    int activation_epoch = 100;
    /// Unset: w_c = L_d / max(L_c, contact_floor) on the training set at activation.
    std::optional<double> w_c;
    double contact_floor = 1e-12;
    std::uint64_t seed = 0;
    /// Save a checkpoint every n epochs (0: final only).
    int checkpoint_every = 0;

    void validate() const;
    double rate(int epoch) const;
    bool contact_active(int epoch) const { return mode == TrainMode::DC && epoch >= activation_epoch; }
};

TrainConfig train_config_from_json(const Json& j);
Json to_json(const TrainConfig& c);

/// Batch- or split-averaged losses. L_c is only evaluated when contact is active.
struct LossStats {
    double total = 0.0;
    double dynamic = 0.0;
    double contact = 0.0;
    double position = 0.0;
    bool contact_evaluated = false;
};

struct EpochRecord {
    int epoch = 0;
    double rate = 0.0;
    double w_c = 0.0;
    LossStats train, val;
};

struct TrainResult {
    GnnParams params;
    std::vector<EpochRecord> history;
    double w_c = 0.0;
};

struct TrainHooks {
    /// Called after every epoch with the updated parameters.
    std::function<void(const EpochRecord&, const GnnParams&)> on_epoch;
};

/// Graphs and contact topology of a set of simulations, assembled once.
struct GraphSet {
    std::vector<GraphSample> graphs;
    std::vector<int> sim;  // owning simulation per graph
};
GraphSet assemble(const Dataset& data, std::span<const int> sims);

/// Losses of a graph set under frozen parameters.
LossStats evaluate(const GnnParams& params, const GraphSet& set, const ccd::ContactTopology& topo, double l_c,
                   const LossWeights& weights, bool contact);

TrainResult train(const TrainConfig& config, const Dataset& data, const GnnConfig& gnn,
                  const TrainHooks& hooks = {});

Json to_json(const EpochRecord& r);
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace contactgnn::harness
