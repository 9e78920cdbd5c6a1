#pragma once

// Dataset bundles on disk:
//   meta.json              R, l_c, n_g, dt, units, split lists, simulations
//   mesh.json              positions_ref and triangles (or quads), optional body ids
//   steps/<sim>/<k>.json   t, dt, globals, r, v, a, y
// Splits list simulation indices.

#include "contactgnn/ccd/detect.hpp"
#include "contactgnn/mesh_graph.hpp"

#include <filesystem>

namespace contactgnn::harness {

struct StepRecord {
    double t = 0.0;
    double dt = 0.0;
    std::vector<double> globals;
    std::vector<NodeState> nodes;
    Points targets;
};

struct Simulation {
    std::string id;
    std::vector<StepRecord> steps;
};

struct Dataset {
    DatasetMeta meta;
    TriMesh mesh;
    /// Body id per triangle; empty means one self-contacting body.
    std::vector<int> body;
    std::vector<Simulation> sims;

    ccd::ContactTopology topology() const;
    GraphSample graph(const StepRecord& step) const;
    std::vector<GraphSample> graphs(int sim) const;
    /// Simulation indices of "train", "val" or "test".
    const std::vector<int>& split(const std::string& name) const;
    std::size_t graph_count() const;
};

/// Appends the zero-length terminal step when the last step has dt > 0:
/// the state advanced by the last targets, zero targets.
void ensure_terminal_step(Simulation& sim);

/// Validates and loads a bundle; synthesizes missing terminal steps.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const Dataset& data);

}  // namespace contactgnn::harness
