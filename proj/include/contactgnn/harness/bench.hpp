#pragma once

// Wall-clock timing of the contact pipeline and of per-simulation inference,
// reported per network in the layout of an inference-time table.

#include "contactgnn/harness/json_io.hpp"
#include "contactgnn/harness/scenes.hpp"
#include "contactgnn/surrogate.hpp"

#include <optional>

namespace contactgnn::harness {

struct Timing {
    double median = 0.0, min = 0.0, max = 0.0;
    std::vector<double> samples;

    static Timing of(std::vector<double> samples);
};

struct NetworkTiming {
    std::string network;
    std::size_t params = 0;
    Timing forward;
    /// Graph assembly, forward pass, integration and contact detection for
    /// every step of one simulation.
    Timing per_simulation;
    /// Present when a reference solver time is given.
    std::optional<double> speedup;
};

struct BenchReport {
    std::string problem;
    Json machine;
    int reps = 0;
    int steps = 0;
    std::size_t nodes = 0, triangles = 0, candidate_pairs = 0;
    Timing broad_phase, narrow_phase, response, detect;
    std::optional<double> reference_time;
    std::vector<NetworkTiming> networks;
    std::vector<std::string> warnings;
};

struct BenchOptions {
    int reps = 5;
    /// Steps of the simulated inference run.
    int steps = 20;
    /// Named presets ("tiny", "S", "L") or explicit parameters below.
    std::vector<std::string> networks = {"tiny", "S"};
    std::optional<GnnParams> params;
    std::string params_label = "checkpoint";
    double radius = 0.25;
    std::optional<double> reference_time;
    std::uint64_t seed = 0;
};

/// Host name, CPU model, thread count and compiler.
Json machine_descriptor();

BenchReport bench(const Scene& scene, const BenchOptions& options);

Json to_json(const BenchReport& r);
/// One row per network: problem, network, reference time, inference time,
/// speedup, with the spread of the inference time.
std::string table_csv(const BenchReport& r);
std::string table_text(const BenchReport& r);

}  // namespace contactgnn::harness
