#pragma once

// Small deterministic scenes shared by the surrogate tests and the
// acceptance runner.

#include "contactgnn/ccd/detect.hpp"
#include "contactgnn/mesh_graph.hpp"

#include <random>

namespace scenes {

using namespace contactgnn;

struct TwoSheets {
    TriMesh mesh;
    ccd::ContactTopology topo;
    GraphSample sample;
};

/// Two n x n node sheets on [0, 1]^2 at z = +-gap/2 approaching each other
/// at `speed`, with jittered positions, random accelerations and targets.
inline TwoSheets two_sheets(int n, double gap, double speed, std::uint64_t seed, int n_globals = 2,
                            double dt = 0.025, double radius = 0.3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Points pos;
    std::vector<Tri> tris, lower, upper;
    const double h = 1.0 / (n - 1);
    for (int side = 0; side < 2; ++side) {
        const int base = static_cast<int>(pos.size());
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                pos.emplace_back(i * h + (side ? 0.37 * h : 0.0), j * h + (side ? 0.21 * h : 0.0),
                                 side ? 0.5 * gap : -0.5 * gap);
        for (int j = 0; j + 1 < n; ++j)
            for (int i = 0; i + 1 < n; ++i) {
                const int a = j * n + i;
                const Tri t0{a, a + 1, a + n + 1}, t1{a, a + n + 1, a + n};
                (side ? upper : lower).push_back(t0);
                (side ? upper : lower).push_back(t1);
                tris.push_back({base + t0[0], base + t0[1], base + t0[2]});
                tris.push_back({base + t1[0], base + t1[1], base + t1[2]});
            }
    }
    TwoSheets s;
    s.mesh = TriMesh::from_triangles(pos, tris);
    s.topo = ccd::ContactTopology::two_body(lower, n * n, upper);
    std::vector<NodeState> nodes(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const bool top = i >= static_cast<std::size_t>(n * n);
        nodes[i].r = pos[i] + 0.05 * h * Vec3(u(rng), u(rng), u(rng));
        nodes[i].v = Vec3(0.1 * u(rng), 0.1 * u(rng), (top ? -0.5 : 0.5) * speed + 0.1 * u(rng));
        nodes[i].a = Vec3(u(rng), u(rng), u(rng));
    }
    std::vector<double> globals(n_globals);
    for (auto& g : globals) g = u(rng);
    GraphOptions opt;
    opt.radius = radius;
    s.sample = assemble_graph_sample(s.mesh, nodes, globals, 0.1, dt, opt);
    Points targets(pos.size());
    for (auto& t : targets) t = Vec3(u(rng), u(rng), u(rng));
    s.sample.targets = targets;
    return s;
}

}  // namespace scenes
