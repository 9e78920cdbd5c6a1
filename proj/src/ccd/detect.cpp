#include "contactgnn/ccd/detect.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <omp.h>

namespace contactgnn::ccd {

Trajectory Trajectory::from_endpoints(Points r0, const Points& r1, double dt) {
    if (r0.size() != r1.size()) throw Error("shape_mismatch", "start/end position counts differ");
    if (!(dt > 0.0)) throw Error("bad_interval", "trajectory dt must be positive");
    Trajectory t;
    t.v.resize(r0.size());
    for (std::size_t i = 0; i < r0.size(); ++i) t.v[i] = (r1[i] - r0[i]) / dt;
    t.r0 = std::move(r0);
    t.dt = dt;
    return t;
}

Trajectory Trajectory::reversed() const {
    Trajectory t;
    t.dt = dt;
    t.r0.resize(size());
    t.v.resize(size());
    for (std::size_t i = 0; i < size(); ++i) {
        t.r0[i] = end(static_cast<int>(i));
        t.v[i] = -v[i];
    }
    return t;
}

void Trajectory::validate() const {
    if (!(dt > 0.0)) throw Error("bad_interval", "trajectory dt must be positive");
    if (r0.size() != v.size()) throw Error("shape_mismatch", "position/velocity counts differ");
    for (std::size_t i = 0; i < r0.size(); ++i) {
        if (!all_finite(r0[i]) || !all_finite(v[i]))
            throw Error("non_finite", "node " + std::to_string(i) + " has a non-finite position or velocity");
    }
}

ContactTopology ContactTopology::single(std::vector<Tri> triangles) {
    ContactTopology t;
    t.triangles = std::move(triangles);
    return t;
}

ContactTopology ContactTopology::two_body(std::span<const Tri> a, int nodes_a, std::span<const Tri> b) {
    ContactTopology t;
    t.triangles.assign(a.begin(), a.end());
    t.body.assign(a.size(), 0);
    for (const auto& tri : b) {
        t.triangles.push_back({tri[0] + nodes_a, tri[1] + nodes_a, tri[2] + nodes_a});
        t.body.push_back(1);
    }
    return t;
}

bool ContactTopology::share_node(int ta, int tb) const {
    const auto& a = triangles[ta];
    const auto& b = triangles[tb];
    for (int x : a)
        for (int y : b)
            if (x == y) return true;
    return false;
}

bool ContactTopology::eligible(int ta, int tb) const {
    if (!body.empty() && body[ta] == body[tb]) return false;
    return !share_node(ta, tb);
}

double ContactField::at(int tri) const {
    auto it = std::lower_bound(triangle.begin(), triangle.end(), tri);
    if (it == triangle.end() || *it != tri) return 0.0;
    return response[it - triangle.begin()];
}

std::vector<double> ContactField::dense(std::size_t n_triangles) const {
    std::vector<double> out(n_triangles, 0.0);
    for (std::size_t k = 0; k < triangle.size(); ++k) out[triangle[k]] = response[k];
    return out;
}

SceneScale SceneScale::of(const Trajectory& traj, const Tolerances& tol) {
    SceneScale s;
    if (traj.size() > 0) {
        Vec3 lo = traj.r0[0], hi = traj.r0[0];
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const Vec3 e = traj.end(static_cast<int>(i));
            lo = lo.cwiseMin(traj.r0[i]).cwiseMin(e);
            hi = hi.cwiseMax(traj.r0[i]).cwiseMax(e);
        }
        s.diagonal = (hi - lo).norm();
    }
    s.area_tol = tol.area_tol_rel * s.diagonal * s.diagonal;
    s.aabb_pad = tol.aabb_pad_rel * s.diagonal;
    return s;
}

namespace {

struct Box {
    Vec3 lo;
    Vec3 hi;
    bool overlaps(const Box& o) const {
        return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all();
    }
};

std::vector<Box> swept_boxes(const Trajectory& traj, const ContactTopology& topo, double pad) {
    std::vector<Box> boxes(topo.triangles.size());
    for (std::size_t t = 0; t < boxes.size(); ++t) {
        const auto& tri = topo.triangles[t];
        Box b{traj.r0[tri[0]], traj.r0[tri[0]]};
        for (int node : tri) {
            const Vec3 e = traj.end(node);
            b.lo = b.lo.cwiseMin(traj.r0[node]).cwiseMin(e);
            b.hi = b.hi.cwiseMax(traj.r0[node]).cwiseMax(e);
        }
        b.lo.array() -= pad;
        b.hi.array() += pad;
        boxes[t] = b;
    }
    return boxes;
}

}  // namespace

std::vector<CandidatePair> swept_aabb_broadphase_serial(const Trajectory& traj,
                                                        const ContactTopology& topo, double pad) {
    traj.validate();
    const auto boxes = swept_boxes(traj, topo, pad);
    std::vector<CandidatePair> out;
    const int n = static_cast<int>(boxes.size());
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (boxes[a].overlaps(boxes[b]) && topo.eligible(a, b)) out.push_back({a, b});
    return out;
}

std::vector<CandidatePair> swept_aabb_broadphase(const Trajectory& traj, const ContactTopology& topo,
                                                 double pad) {
    traj.validate();
    const auto boxes = swept_boxes(traj, topo, pad);
    const int n = static_cast<int>(boxes.size());

    // Sweep and prune along x.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return boxes[a].lo.x() < boxes[b].lo.x() || (boxes[a].lo.x() == boxes[b].lo.x() && a < b);
    });

    std::vector<std::vector<CandidatePair>> local(omp_get_max_threads());
#pragma omp parallel
    {
        auto& mine = local[omp_get_thread_num()];
#pragma omp for schedule(dynamic, 32)
        for (int k = 0; k < n; ++k) {
            const int a = order[k];
            for (int m = k + 1; m < n; ++m) {
                const int b = order[m];
                if (boxes[b].lo.x() > boxes[a].hi.x()) break;
                if (boxes[a].overlaps(boxes[b]) && topo.eligible(a, b))
                    mine.push_back({std::min(a, b), std::max(a, b)});
            }
        }
    }
    std::vector<CandidatePair> out;
    for (auto& l : local) out.insert(out.end(), l.begin(), l.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::array<int, 4> subtest_nodes(const ContactTopology& topo, CandidatePair pair, SubTestKind kind,
                                 int index) {
    const auto& A = topo.triangles[pair.tri_a];
    const auto& B = topo.triangles[pair.tri_b];
    if (kind == SubTestKind::VF) {
        if (index < 3) return {B[0], B[1], B[2], A[index]};
        return {A[0], A[1], A[2], B[index - 3]};
    }
    const int i = index / 3;
    const int j = index % 3;
    return {A[i], A[(i + 1) % 3], B[j], B[(j + 1) % 3]};
}

namespace {

bool sufficient(const std::array<Vec3, 4>& x, SubTestKind kind, const SceneScale& scale,
                const DetectOptions& options) {
    if (kind == SubTestKind::VF)
        return vf_sufficiency(x[3], x[0], x[1], x[2], options.tol.containment_tol, scale.area_tol);
    return ee_sufficiency(x[0], x[1], x[2], x[3], options.tol.containment_tol, options.edge_test);
}

}  // namespace

std::vector<CollisionEvent> narrow_phase_pair(const Trajectory& traj, const ContactTopology& topo,
                                              CandidatePair pair, const SceneScale& scale,
                                              const DetectOptions& options) {
    std::vector<CollisionEvent> fired;
    RootOptions ro;
    ro.root_tol = options.tol.root_tol;
    ro.degeneracy_tol = options.tol.degeneracy_tol;
    ro.newton_iters = options.tol.newton_iters;

    for (int kind_i = 0; kind_i < 2; ++kind_i) {
        const auto kind = kind_i == 0 ? SubTestKind::VF : SubTestKind::EE;
        const int count = kind == SubTestKind::VF ? 6 : 9;
        for (int idx = 0; idx < count; ++idx) {
            const auto nodes = subtest_nodes(topo, pair, kind, idx);
            std::array<Vec3, 4> p, w;
            double local = 0.0;
            for (int c = 0; c < 4; ++c) {
                p[c] = traj.r0[nodes[c]];
                w[c] = traj.v[nodes[c]];
            }
            for (int c = 1; c < 4; ++c) {
                local = std::max(local, (p[c] - p[0]).norm());
                local = std::max(local, (p[c] + traj.dt * w[c] - p[0] - traj.dt * w[0]).norm());
            }
            ro.zero_threshold = options.tol.degeneracy_tol * local * local * local;
            const Cubic cubic = coplanarity_cubic(p, w);
            const Roots roots = cubic_roots_in_interval(cubic, traj.dt, ro);

            std::array<double, Roots::kCapacity> instants{};
            int ni = 0;
            if (roots.always) {
                instants[ni++] = 0.0;
                instants[ni++] = 0.5 * traj.dt;
                instants[ni++] = traj.dt;
            } else {
                for (double s : roots) instants[ni++] = s;
            }
            for (int k = 0; k < ni; ++k) {
                const double s = instants[k];
                std::array<Vec3, 4> x;
                for (int c = 0; c < 4; ++c) x[c] = p[c] + s * w[c];
                if (sufficient(x, kind, scale, options)) {
                    fired.push_back({pair, kind, idx, s, 0.0, false});
                    break;
                }
            }
        }
    }
    return fired;
}

void evaluate_responses(const Trajectory& traj, const ContactTopology& topo,
                        std::span<CollisionEvent> events, double area_tol) {
    for (auto& ev : events) {
        const auto n = subtest_nodes(topo, ev.pair, ev.kind, ev.index);
        if (ev.kind == SubTestKind::VF) {
            const Response r = vf_response(traj.end(n[3]), traj.end(n[0]), traj.end(n[1]),
                                           traj.end(n[2]), area_tol);
            ev.response = r.value;
            ev.degenerate = r.degenerate;
        } else {
            ev.response = ee_response(traj.end(n[0]), traj.end(n[1]), traj.end(n[2]), traj.end(n[3]));
            ev.degenerate = false;
        }
    }
}

ContactField accumulate_field(std::vector<CollisionEvent> events) {
    std::sort(events.begin(), events.end());
    // (triangle, pair response) for both triangles of every colliding pair.
    std::vector<std::pair<int, double>> coo;
    std::size_t k = 0;
    while (k < events.size()) {
        const CandidatePair pair = events[k].pair;
        double r_pair = 0.0;
        for (; k < events.size() && events[k].pair == pair; ++k)
            r_pair = std::max(r_pair, events[k].response);
        coo.emplace_back(pair.tri_a, r_pair);
        coo.emplace_back(pair.tri_b, r_pair);
    }
    std::sort(coo.begin(), coo.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    ContactField field;
    for (const auto& [tri, r] : coo) {
        if (!field.triangle.empty() && field.triangle.back() == tri) {
            field.response.back() = std::max(field.response.back(), r);
        } else {
            field.triangle.push_back(tri);
            field.response.push_back(r);
        }
    }
    field.events = std::move(events);
    return field;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <bool Parallel>
ContactField run_pipeline(const Trajectory& traj, const ContactTopology& topo,
                          const DetectOptions& options, DetectTimings* timings) {
    traj.validate();
    const SceneScale scale = SceneScale::of(traj, options.tol);

    auto t0 = Clock::now();
    const auto pairs = Parallel ? swept_aabb_broadphase(traj, topo, scale.aabb_pad)
                                : swept_aabb_broadphase_serial(traj, topo, scale.aabb_pad);
    if (timings) timings->broad_phase = seconds_since(t0);

    t0 = Clock::now();
    std::vector<CollisionEvent> events;
    const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
    std::vector<std::vector<CollisionEvent>> per_pair;
    for (std::size_t begin = 0; begin < pairs.size(); begin += chunk) {
        const std::size_t end = std::min(pairs.size(), begin + chunk);
        const int n = static_cast<int>(end - begin);
        per_pair.assign(n, {});
        if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
            for (int k = 0; k < n; ++k)
                per_pair[k] = narrow_phase_pair(traj, topo, pairs[begin + k], scale, options);
        } else {
            for (int k = 0; k < n; ++k)
                per_pair[k] = narrow_phase_pair(traj, topo, pairs[begin + k], scale, options);
        }
        for (auto& ev : per_pair) events.insert(events.end(), ev.begin(), ev.end());
    }
    if (timings) timings->narrow_phase = seconds_since(t0);

    t0 = Clock::now();
    evaluate_responses(traj, topo, events, scale.area_tol);
    ContactField field = accumulate_field(std::move(events));
    if (timings) timings->response = seconds_since(t0);
    return field;
}

}  // namespace

ContactField detect_contacts(const Trajectory& traj, const ContactTopology& topo,
                             const DetectOptions& options, DetectTimings* timings) {
    return run_pipeline<true>(traj, topo, options, timings);
}

ContactField detect_contacts_serial(const Trajectory& traj, const ContactTopology& topo,
                                    const DetectOptions& options) {
    return run_pipeline<false>(traj, topo, options, nullptr);
}

}  // namespace contactgnn::ccd
