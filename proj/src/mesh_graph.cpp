#include "contactgnn/mesh_graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <omp.h>

namespace contactgnn {

double bounding_diagonal(std::span<const Vec3> points) {
    if (points.empty()) return 0.0;
    Vec3 lo = points.front();
    Vec3 hi = points.front();
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

TriMesh TriMesh::from_triangles(Points positions, std::vector<Tri> triangles, double area_tol_rel) {
    const int n = static_cast<int>(positions.size());
    for (int i = 0; i < n; ++i) {
        if (!all_finite(positions[i]))
            throw Error("non_finite", "node " + std::to_string(i) + " has a non-finite position");
    }
    const double diag = bounding_diagonal(positions);
    const double area_tol = area_tol_rel * diag * diag;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        for (int idx : tri) {
            if (idx < 0 || idx >= n)
                throw Error("bad_index", "triangle " + std::to_string(t) + " references node " +
                                             std::to_string(idx) + " of " + std::to_string(n));
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
            throw Error("bad_index", "triangle " + std::to_string(t) + " repeats a node");
        const Vec3& a = positions[tri[0]];
        const double area = 0.5 * (positions[tri[1]] - a).cross(positions[tri[2]] - a).norm();
        if (!(area >= area_tol) || area == 0.0)
            throw Error("degenerate_triangle", "triangle " + std::to_string(t) + " has area " +
                                                   std::to_string(area));
    }
    TriMesh mesh;
    mesh.positions_ref = std::move(positions);
    mesh.triangles = std::move(triangles);
    mesh.mesh_edges = build_mesh_edges(mesh.triangles);
    return mesh;
}

TriMesh quad_to_tri(const QuadMesh& quads) {
    const int n = static_cast<int>(quads.positions.size());
    std::vector<Tri> tris;
    tris.reserve(quads.quads.size() * 2);
    for (std::size_t qi = 0; qi < quads.quads.size(); ++qi) {
        const auto& q = quads.quads[qi];
        const std::string where = "quad " + std::to_string(qi);
        for (int idx : q) {
            if (idx < 0 || idx >= n) throw Error("bad_index", where + " references a missing node");
        }
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                if (q[a] == q[b]) throw Error("bad_index", where + " repeats node " + std::to_string(q[a]));

        std::array<Vec3, 4> p;
        for (int c = 0; c < 4; ++c) p[c] = quads.positions[q[c]];
        for (int c = 0; c < 4; ++c) {
            const Vec3 e1 = p[(c + 1) % 4] - p[c];
            const Vec3 e2 = p[(c + 3) % 4] - p[c];
            if (e1.cross(e2).norm() <= 1e-12 * e1.norm() * e2.norm())
                throw Error("degenerate_quad", where + " has three collinear corners");
        }

        const double d02 = (p[2] - p[0]).norm();
        const double d13 = (p[3] - p[1]).norm();
        bool split02;
        if (std::abs(d02 - d13) <= 1e-12 * std::max(d02, d13))
            split02 = std::min(q[0], q[2]) <= std::min(q[1], q[3]);
        else
            split02 = d02 < d13;

        if (split02) {
            tris.push_back({q[0], q[1], q[2]});
            tris.push_back({q[0], q[2], q[3]});
        } else {
            tris.push_back({q[1], q[2], q[3]});
            tris.push_back({q[1], q[3], q[0]});
        }
    }
    return TriMesh::from_triangles(quads.positions, std::move(tris));
}

std::vector<IndexPair> build_mesh_edges(std::span<const Tri> triangles) {
    std::vector<IndexPair> edges;
    edges.reserve(triangles.size() * 6);
    for (const auto& t : triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k];
            const int b = t[(k + 1) % 3];
            edges.emplace_back(a, b);
            edges.emplace_back(b, a);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

PairSet::PairSet(std::vector<IndexPair> pairs) : pairs_(std::move(pairs)) {
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
}

bool PairSet::contains(int a, int b) const {
    return std::binary_search(pairs_.begin(), pairs_.end(), IndexPair{a, b});
}

namespace {

void world_row(std::span<const Vec3> positions, int k, double radius, const PairSet& exclude,
               std::vector<IndexPair>& out) {
    const int n = static_cast<int>(positions.size());
    for (int l = 0; l < n; ++l) {
        if (l == k) continue;
        const double dist = (positions[k] - positions[l]).norm();
        if (dist <= radius && !exclude.contains(k, l)) out.emplace_back(k, l);
    }
}

}  // namespace

std::vector<IndexPair> build_world_edges_serial(std::span<const Vec3> positions, double radius,
                                                const PairSet& exclude) {
    if (!(radius > 0.0)) throw Error("bad_radius", "collision radius must be positive");
    std::vector<IndexPair> out;
    for (int k = 0; k < static_cast<int>(positions.size()); ++k)
        world_row(positions, k, radius, exclude, out);
    return out;
}

std::vector<IndexPair> build_world_edges(std::span<const Vec3> positions, double radius,
                                         const PairSet& exclude) {
    if (!(radius > 0.0)) throw Error("bad_radius", "collision radius must be positive");
    const int n = static_cast<int>(positions.size());
    std::vector<std::vector<IndexPair>> rows(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (int k = 0; k < n; ++k) world_row(positions, k, radius, exclude, rows[k]);

    std::size_t total = 0;
    for (const auto& r : rows) total += r.size();
    std::vector<IndexPair> out;
    out.reserve(total);
    for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
    return out;
}

std::vector<EdgeFeature> edge_features(std::span<const Vec3> positions,
                                       std::span<const IndexPair> pairs) {
    std::vector<EdgeFeature> feats(pairs.size());
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        const Vec3 d = positions[pairs[e].first] - positions[pairs[e].second];
        feats[e] = {d.x(), d.y(), d.z(), d.norm()};
    }
    return feats;
}

Points GraphSample::positions() const {
    Points r(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) r[i] = nodes[i].r;
    return r;
}

std::array<double, kNodeFeatureDim> GraphSample::node_feature(std::size_t i) const {
    const auto& n = nodes[i];
    return {n.r.x(), n.r.y(), n.r.z(), n.v.x(), n.v.y(), n.v.z(), n.a.x(), n.a.y(), n.a.z()};
}

GraphSample assemble_graph_sample(const TriMesh& mesh, std::vector<NodeState> nodes,
                                  std::span<const double> globals, double t, double dt,
                                  const GraphOptions& options) {
    if (nodes.size() != mesh.node_count())
        throw Error("shape_mismatch", "node state count " + std::to_string(nodes.size()) +
                                          " does not match mesh node count " +
                                          std::to_string(mesh.node_count()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!all_finite(nodes[i].r) || !all_finite(nodes[i].v) || !all_finite(nodes[i].a))
            throw Error("non_finite", "node " + std::to_string(i) + " has a non-finite state");
    }
    GraphSample s;
    s.g.reserve(2 + globals.size());
    s.g.push_back(t);
    s.g.push_back(dt);
    s.g.insert(s.g.end(), globals.begin(), globals.end());
    s.nodes = std::move(nodes);
    const Points r = s.positions();
    s.mesh_edges = mesh.mesh_edges;
    s.mesh_edge_feats = edge_features(r, s.mesh_edges);
    PairSet exclude;
    if (options.exclude_mesh_pairs) exclude = PairSet(mesh.mesh_edges);
    s.world_edges = build_world_edges(r, options.radius, exclude);
    s.world_edge_feats = edge_features(r, s.world_edges);
    return s;
}

std::array<std::vector<int>, 3> split_811(int n, std::span<const int> order) {
    std::vector<int> ids(n);
    if (order.empty())
        std::iota(ids.begin(), ids.end(), 0);
    else
        ids.assign(order.begin(), order.end());
    const int n_val = n / 10;
    const int n_test = n / 10;
    const int n_train = n - n_val - n_test;
    std::array<std::vector<int>, 3> out;
    out[0].assign(ids.begin(), ids.begin() + n_train);
    out[1].assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    out[2].assign(ids.begin() + n_train + n_val, ids.end());
    for (auto& v : out) std::sort(v.begin(), v.end());
    return out;
}

void validate_meta(const DatasetMeta& meta, int n_graphs) {
    if (!(meta.radius > 0.0)) throw Error("schema", "meta.R must be positive");
    if (!(meta.length_scale > 0.0)) throw Error("schema", "meta.l_c must be positive");
    if (meta.n_globals < 0) throw Error("schema", "meta.n_g must be non-negative");
    std::vector<int> seen(n_graphs, 0);
    for (const auto* list : {&meta.split.train, &meta.split.val, &meta.split.test}) {
        for (int id : *list) {
            if (id < 0 || id >= n_graphs)
                throw Error("schema", "split references graph " + std::to_string(id));
            if (seen[id]++) throw Error("schema", "graph " + std::to_string(id) + " is in two splits");
        }
    }
    for (int i = 0; i < n_graphs; ++i)
        if (!seen[i]) throw Error("schema", "graph " + std::to_string(i) + " is in no split");
}

}  // namespace contactgnn
