#pragma once

// Deterministic kinematic scenes. A scene is two bodies, each with start
// positions, constant velocities over one step and a triangle list; node
// indices of the second body follow those of the first.

#include "contactgnn/harness/dataset.hpp"
#include "contactgnn/harness/json_io.hpp"

#include <numbers>
#include <optional>

namespace contactgnn::harness {

enum class Generator { CollinearEdges, ParabolaSheets, UndulatingMembranes, RandomMicro };

std::string to_string(Generator g);
Generator generator_from(const std::string& name);

struct SceneSpec {
    Generator generator = Generator::UndulatingMembranes;

    // Surfaces z = c3 + A sin(k1 x) sin(k2 y) on [0, extent]^2 with c3 = +-gap/2.
    double amplitude = 0.04;
    double gap = 0.2;
    double k1u = std::numbers::pi, k2u = std::numbers::pi;
    double k1l = 2.0 * std::numbers::pi, k2l = 0.5 * std::numbers::pi;
    double extent = 1.0;
    /// Parabola sheets: z = +-(gap/2 + curvature |x|^2).
    double curvature = 0.5;

    /// Closing speed of each body in the single-step scene.
    double approach_speed = 4.0;
    double dt = 0.025;
    /// Nodes per side of each grid mesh.
    int resolution = 7;
    std::uint64_t seed = 0;

    // Multi-step kinematic dataset (membranes and parabolas); 0 disables it.
    int n_sims = 0;
    int n_steps = 20;
    double pressure_min = 0.5, pressure_max = 1.5;
    double modulus_min = 5.0, modulus_max = 15.0;
    /// Draw k from {pi/2, pi, 2 pi, 4 pi} per simulation.
    bool sample_k = true;
    double radius = 0.25;
    double length_scale = 1.0;
    /// Smallest nodal separation the prescribed motion keeps between bodies.
    double clearance = 0.02;

    void validate() const;
};

SceneSpec spec_from_json(const Json& j);
Json to_json(const SceneSpec& s);

struct SceneBlock {
    std::string name;
    Points r0;
    Points v;
    std::vector<Tri> triangles;
};

struct Scene {
    std::string generator;
    double dt = 0.0;
    std::array<SceneBlock, 2> blocks;

    ccd::Trajectory trajectory() const;
    ccd::ContactTopology topology() const;
    /// Index of the first triangle of block b in the combined topology.
    std::size_t triangle_offset(int b) const { return b == 0 ? 0 : blocks[0].triangles.size(); }
    std::size_t node_count() const { return blocks[0].r0.size() + blocks[1].r0.size(); }
    std::size_t triangle_count() const { return blocks[0].triangles.size() + blocks[1].triangles.size(); }
};

Json to_json(const Scene& s);
Scene scene_from_json(const Json& j, const std::string& where = "scene");
Scene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const Scene& s);

struct Generated {
    Scene scene;
    std::optional<Dataset> dataset;
};

Generated generate(const SceneSpec& spec);

/// Regular grid of n x n nodes on [x0, x0 + w] x [y0, y0 + w] at height
/// z(x, y); each cell split along the (i, j) - (i+1, j+1) diagonal.
struct Grid {
    Points nodes;
    std::vector<Tri> triangles;
};
template <class Z>
Grid grid(int n, double x0, double y0, double w, Z&& z) {
    Grid g;
    const double h = w / (n - 1);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = x0 + i * h, y = y0 + j * h;
            g.nodes.emplace_back(x, y, z(x, y));
        }
    for (int j = 0; j + 1 < n; ++j)
        for (int i = 0; i + 1 < n; ++i) {
            const int a = j * n + i;
            g.triangles.push_back({a, a + 1, a + n + 1});
            g.triangles.push_back({a, a + n + 1, a + n});
        }
    return g;
}

}  // namespace contactgnn::harness
