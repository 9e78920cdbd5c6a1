#pragma once

// One-step (teacher-forced) and autoregressive (self) evaluation of a
// predictor over dataset simulations, with the position, error-set and
// contact metrics per graph.

#include "contactgnn/harness/dataset.hpp"
#include "contactgnn/harness/json_io.hpp"
#include "contactgnn/losses_metrics.hpp"

#include <functional>

namespace contactgnn::harness {

using Predictor = std::function<Points(const GraphSample&)>;

enum class RolloutMode { TeacherForced, Self };

std::string to_string(RolloutMode m);
RolloutMode rollout_mode_from(const std::string& name);

struct GraphMetrics {
    int step = 0;
    double t = 0.0;
    double position_loss = 0.0;
    double contact_loss = 0.0;
    std::size_t contacts = 0;  // triangles with a response
    Quartiles errors;
};

struct SimulationMetrics {
    std::string id;
    std::vector<GraphMetrics> graphs;
    /// e[N][i] per evaluated graph.
    std::vector<std::vector<double>> errors;
    AccumulatedErrors accumulated;
    /// Predicted positions per state, starting with the initial state.
    std::vector<Points> positions;
};

struct MetricReport {
    std::string split;
    RolloutMode mode = RolloutMode::TeacherForced;
    std::vector<SimulationMetrics> sims;
    /// Over every node of every evaluated graph.
    Quartiles errors;
    double mean_position_loss = 0.0;
    double mean_contact_loss = 0.0;
    CrossSimulationAverage per_step;
};

struct RolloutOptions {
    RolloutMode mode = RolloutMode::TeacherForced;
    bool contact = true;
    bool keep_positions = false;
    ccd::DetectOptions detect;
};

/// Graphs with a successor state (all but the terminal one) are evaluated.
SimulationMetrics rollout_simulation(const Predictor& predict, const Dataset& data, int sim,
                                     const RolloutOptions& options);

MetricReport rollout(const Predictor& predict, const Dataset& data, std::span<const int> sims,
                     const RolloutOptions& options, const std::string& split = "");

Json to_json(const MetricReport& r);
/// One row per graph.
std::string graphs_csv(const MetricReport& r);
/// One row per step of the cross-simulation averages.
std::string steps_csv(const MetricReport& r);

}  // namespace contactgnn::harness
