#pragma once

// Continuous collision detection over one time step.
//
// Pipeline: swept-AABB broad phase -> for each surviving triangle pair the
// 6 vertex-face and 9 edge-edge coplanarity cubics -> roots in [0, dt] ->
// containment / segment tests at each root -> end-of-step responses ->
// per-pair maximum -> per-triangle maximum.
//
// Sub-test numbering for a pair (A, B):
//   VF p = 0..2 : vertex p of A against face B
//   VF p = 3..5 : vertex p-3 of B against face A
//   EE q = 3 i + j : edge i of A against edge j of B, edge k = (v_k, v_{k+1 mod 3})

#include "contactgnn/ccd/cubic.hpp"
#include "contactgnn/ccd/predicates.hpp"
#include "contactgnn/common.hpp"

#include <compare>
#include <span>

namespace contactgnn::ccd {

/// Linear motion of every node over [0, dt]: r(s) = r0 + s v.
struct Trajectory {
    Points r0;
    Points v;
    double dt = 0.0;

    Vec3 at(int node, double s) const { return r0[node] + s * v[node]; }
    Vec3 end(int node) const { return r0[node] + dt * v[node]; }
    std::size_t size() const { return r0.size(); }

    /// Constant velocity (r1 - r0) / dt.
    static Trajectory from_endpoints(Points r0, const Points& r1, double dt);
    /// Start at the end positions with negated velocities.
    Trajectory reversed() const;
    void validate() const;
};

struct CandidatePair {
    int tri_a = 0;
    int tri_b = 0;
    auto operator<=>(const CandidatePair&) const = default;
};

/// Triangles taking part in detection. An empty `body` means self-contact of
/// one mesh; otherwise only pairs from different bodies are tested.
struct ContactTopology {
    std::vector<Tri> triangles;
    std::vector<int> body;

    static ContactTopology single(std::vector<Tri> triangles);
    /// Node indices of `b` are shifted by `nodes_a`; triangles of `a` come first.
    static ContactTopology two_body(std::span<const Tri> a, int nodes_a, std::span<const Tri> b);

    bool share_node(int ta, int tb) const;
    bool eligible(int ta, int tb) const;
};

enum class SubTestKind : std::uint8_t { VF, EE };

struct CollisionEvent {
    CandidatePair pair;
    SubTestKind kind = SubTestKind::VF;
    int index = 0;  // p in 0..5 or q in 0..8
    double t_star = 0.0;
    double response = 0.0;
    bool degenerate = false;  // end-of-step face had no area

    auto operator<=>(const CollisionEvent&) const = default;
};

/// Sparse (COO) per-triangle response plus the events behind it.
struct ContactField {
    std::vector<int> triangle;
    std::vector<double> response;
    std::vector<CollisionEvent> events;

    std::size_t nnz() const { return triangle.size(); }
    /// r_Ii, zero when the triangle is absent.
    double at(int tri) const;
    std::vector<double> dense(std::size_t n_triangles) const;
};

struct Tolerances {
    double root_tol = 1e-10;
    double containment_tol = 1e-9;
    double degeneracy_tol = 1e-12;
    /// Multiplies diag^2 of the scene bounding box.
    double area_tol_rel = 1e-14;
    /// Multiplies diag of the scene bounding box.
    double aabb_pad_rel = 1e-9;
    int newton_iters = 32;
};

struct DetectOptions {
    Tolerances tol;
    EdgeTest edge_test = EdgeTest::Modified;
    /// Candidate pairs processed per batch; bounds peak memory.
    std::size_t chunk_size = 4096;
};

/// Absolute thresholds derived from the scene extent.
struct SceneScale {
    double diagonal = 0.0;
    double area_tol = 0.0;
    double aabb_pad = 0.0;

    static SceneScale of(const Trajectory& traj, const Tolerances& tol);
};

struct DetectTimings {
    double broad_phase = 0.0;
    double narrow_phase = 0.0;
    double response = 0.0;
};

std::vector<CandidatePair> swept_aabb_broadphase(const Trajectory& traj,
                                                 const ContactTopology& topo, double pad);
/// All-pairs reference for swept_aabb_broadphase.
std::vector<CandidatePair> swept_aabb_broadphase_serial(const Trajectory& traj,
                                                        const ContactTopology& topo, double pad);

/// Fired sub-tests of one pair, responses left at zero.
std::vector<CollisionEvent> narrow_phase_pair(const Trajectory& traj, const ContactTopology& topo,
                                              CandidatePair pair, const SceneScale& scale,
                                              const DetectOptions& options);

/// Fills in end-of-step responses for fired events.
void evaluate_responses(const Trajectory& traj, const ContactTopology& topo,
                        std::span<CollisionEvent> events, double area_tol);

/// r_Iij and r_Ii from a sorted event list.
ContactField accumulate_field(std::vector<CollisionEvent> events);

ContactField detect_contacts(const Trajectory& traj, const ContactTopology& topo,
                             const DetectOptions& options = {}, DetectTimings* timings = nullptr);
/// Single-threaded reference pipeline; must match detect_contacts bit for bit.
ContactField detect_contacts_serial(const Trajectory& traj, const ContactTopology& topo,
                                    const DetectOptions& options = {});

/// The four nodes (in coplanarity-cubic order) of a sub-test.
std::array<int, 4> subtest_nodes(const ContactTopology& topo, CandidatePair pair,
                                 SubTestKind kind, int index);

}  // namespace contactgnn::ccd
