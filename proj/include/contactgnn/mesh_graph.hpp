#pragma once

// Mesh connectivity and per-time-step graph construction.

#include "contactgnn/common.hpp"

#include <optional>
#include <span>

namespace contactgnn {

using QuadIdx = std::array<int, 4>;

struct QuadMesh {
    Points positions;
    std::vector<QuadIdx> quads;
};

struct TriMesh {
    Points positions_ref;
    std::vector<Tri> triangles;
    /// Both orientations of every unique element edge, sorted.
    std::vector<IndexPair> mesh_edges;

    std::size_t node_count() const { return positions_ref.size(); }

    /// Validates indices and triangle areas, then builds `mesh_edges`.
    /// Triangles with area below `area_tol_rel * diag^2` are rejected, where
    /// diag is the bounding-box diagonal of the reference positions.
    static TriMesh from_triangles(Points positions, std::vector<Tri> triangles,
                                  double area_tol_rel = 1e-14);
};

double bounding_diagonal(std::span<const Vec3> points);

/// Splits every quad along its shorter reference diagonal. Ties (equal within
/// 1e-12 relative) go to the diagonal that starts at the lower node index.
TriMesh quad_to_tri(const QuadMesh& quads);

std::vector<IndexPair> build_mesh_edges(std::span<const Tri> triangles);

/// Sorted set of node pairs that must not become world edges.
class PairSet {
public:
    PairSet() = default;
    explicit PairSet(std::vector<IndexPair> pairs);
    bool contains(int a, int b) const;
    std::size_t size() const { return pairs_.size(); }

private:
    std::vector<IndexPair> pairs_;
};

/// All ordered pairs (k, l), k != l, with |r_k - r_l| <= radius, minus
/// `exclude`. Each distance is an explicit difference-and-norm; the result
/// is sorted lexicographically. Rows are distributed over OpenMP threads.
std::vector<IndexPair> build_world_edges(std::span<const Vec3> positions, double radius,
                                         const PairSet& exclude = {});
/// Single-threaded reference for build_world_edges.
std::vector<IndexPair> build_world_edges_serial(std::span<const Vec3> positions, double radius,
                                                const PairSet& exclude = {});

using EdgeFeature = std::array<double, 4>;

/// [r_i - r_j, |r_i - r_j|] per pair (i, j).
std::vector<EdgeFeature> edge_features(std::span<const Vec3> positions,
                                       std::span<const IndexPair> pairs);

struct NodeState {
    Vec3 r = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 a = Vec3::Zero();
};

inline constexpr int kNodeFeatureDim = 9;
inline constexpr int kEdgeFeatureDim = 4;

struct GraphSample {
    /// [t, dt, globals...]
    std::vector<double> g;
    std::vector<NodeState> nodes;
    std::vector<IndexPair> mesh_edges;
    std::vector<EdgeFeature> mesh_edge_feats;
    std::vector<IndexPair> world_edges;
    std::vector<EdgeFeature> world_edge_feats;
    std::optional<std::vector<Vec3>> targets;

    double t() const { return g.at(0); }
    double dt() const { return g.at(1); }
    std::size_t node_count() const { return nodes.size(); }
    Points positions() const;
    std::array<double, kNodeFeatureDim> node_feature(std::size_t i) const;
};

struct GraphOptions {
    double radius = 0.0;
    bool exclude_mesh_pairs = true;
};

GraphSample assemble_graph_sample(const TriMesh& mesh, std::vector<NodeState> nodes,
                                  std::span<const double> globals, double t, double dt,
                                  const GraphOptions& options);

/// Graph indices per split.
struct Split {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

/// Partitions `n` items 8:1:1. Validation and test each get floor(n/10),
/// training takes the remainder. `order` permutes item ids before slicing;
/// empty means identity.
std::array<std::vector<int>, 3> split_811(int n, std::span<const int> order = {});

struct DatasetMeta {
    double radius = 0.0;
    double length_scale = 1.0;
    int n_globals = 0;
    double dt = 0.0;
    Split split;
    std::string units = "model";
};

void validate_meta(const DatasetMeta& meta, int n_graphs);

}  // namespace contactgnn
