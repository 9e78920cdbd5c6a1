#include "contactgnn/harness/scenes.hpp"

#include "contactgnn/surrogate.hpp"

#include <algorithm>
#include <random>

namespace contactgnn::harness {

namespace {

constexpr double kPi = std::numbers::pi;

const std::array<std::pair<Generator, const char*>, 4> kNames = {{
    {Generator::CollinearEdges, "collinear-edges"},
    {Generator::ParabolaSheets, "parabola-sheets"},
    {Generator::UndulatingMembranes, "undulating-membranes"},
    {Generator::RandomMicro, "random-micro"},
}};

bool power_of_two(double x) {
    int e = 0;
    return x > 0.0 && std::frexp(x, &e) == 0.5;
}

}  // namespace

std::string to_string(Generator g) {
    for (const auto& [k, n] : kNames)
        if (k == g) return n;
    return "unknown";
}

Generator generator_from(const std::string& name) {
    for (const auto& [k, n] : kNames)
        if (name == n) return k;
    throw Error("bad_spec", "unknown generator '" + name + "'");
}

void SceneSpec::validate() const {
    auto bad = [](const std::string& m) { throw Error("bad_spec", m); };
    if (!(dt > 0.0)) bad("dt must be positive");
    if (resolution < 2) bad("resolution must be at least 2");
    if (!(extent > 0.0)) bad("extent must be positive");
    if (generator == Generator::UndulatingMembranes || generator == Generator::ParabolaSheets) {
        if (!(gap > 0.0)) bad("gap must be positive");
        if (!(amplitude >= 0.0)) bad("amplitude must be non-negative");
        if (!(amplitude < 0.5 * gap)) bad("amplitude must be smaller than half the gap");
        for (double k : {k1u, k2u, k1l, k2l})
            if (!(k > 0.0)) bad("wave numbers must be positive");
        if (n_sims < 0 || (n_sims > 0 && n_steps < 1)) bad("n_sims and n_steps must be positive");
        if (n_sims > 0 && n_sims < 10) bad("a dataset needs at least 10 simulations for an 8:1:1 split");
        if (!(pressure_min > 0.0 && pressure_max >= pressure_min)) bad("pressure range is invalid");
        if (!(modulus_min > 0.0 && modulus_max >= modulus_min)) bad("modulus range is invalid");
        if (!(clearance > 0.0 && clearance < gap - 2.0 * amplitude)) bad("clearance must lie in (0, gap - 2A)");
        if (!(radius > 0.0) || !(length_scale > 0.0)) bad("radius and length_scale must be positive");
    }
    if (generator == Generator::CollinearEdges && !power_of_two(dt))
        bad("collinear-edges needs a power-of-two dt so the collinear instant is exact");
}

SceneSpec spec_from_json(const Json& j) {
    const std::string w = "spec";
    SceneSpec s;
    s.generator = generator_from(field<std::string>(j, "generator", w));
    auto opt = [&](const char* key, auto& out) {
        if (j.contains(key)) out = field<std::decay_t<decltype(out)>>(j, key, w);
    };
    opt("amplitude", s.amplitude);
    opt("gap", s.gap);
    opt("k1u", s.k1u);
    opt("k2u", s.k2u);
    opt("k1l", s.k1l);
    opt("k2l", s.k2l);
    opt("extent", s.extent);
    opt("curvature", s.curvature);
    opt("approach_speed", s.approach_speed);
    opt("dt", s.dt);
    opt("resolution", s.resolution);
    opt("seed", s.seed);
    opt("n_sims", s.n_sims);
    opt("n_steps", s.n_steps);
    opt("pressure_min", s.pressure_min);
    opt("pressure_max", s.pressure_max);
    opt("modulus_min", s.modulus_min);
    opt("modulus_max", s.modulus_max);
    opt("sample_k", s.sample_k);
    opt("radius", s.radius);
    opt("length_scale", s.length_scale);
    opt("clearance", s.clearance);
    s.validate();
    return s;
}

Json to_json(const SceneSpec& s) {
    return {{"generator", to_string(s.generator)},
            {"amplitude", s.amplitude},
            {"gap", s.gap},
            {"k1u", s.k1u},
            {"k2u", s.k2u},
            {"k1l", s.k1l},
            {"k2l", s.k2l},
            {"extent", s.extent},
            {"curvature", s.curvature},
            {"approach_speed", s.approach_speed},
            {"dt", s.dt},
            {"resolution", s.resolution},
            {"seed", s.seed},
            {"n_sims", s.n_sims},
            {"n_steps", s.n_steps},
            {"pressure_min", s.pressure_min},
            {"pressure_max", s.pressure_max},
            {"modulus_min", s.modulus_min},
            {"modulus_max", s.modulus_max},
            {"sample_k", s.sample_k},
            {"radius", s.radius},
            {"length_scale", s.length_scale},
            {"clearance", s.clearance}};
}

// ---- scene container --------------------------------------------------------

ccd::Trajectory Scene::trajectory() const {
    ccd::Trajectory t;
    t.dt = dt;
    for (const auto& b : blocks) {
        t.r0.insert(t.r0.end(), b.r0.begin(), b.r0.end());
        t.v.insert(t.v.end(), b.v.begin(), b.v.end());
    }
    t.validate();
    return t;
}

ccd::ContactTopology Scene::topology() const {
    return ccd::ContactTopology::two_body(blocks[0].triangles, static_cast<int>(blocks[0].r0.size()),
                                          blocks[1].triangles);
}

Json to_json(const Scene& s) {
    Json blocks = Json::array();
    for (const auto& b : s.blocks) {
        std::vector<std::array<int, 3>> tris(b.triangles.begin(), b.triangles.end());
        blocks.push_back({{"name", b.name}, {"dt", s.dt}, {"r0", to_json(b.r0)}, {"v", to_json(b.v)},
                          {"triangles", tris}});
    }
    return {{"generator", s.generator}, {"dt", s.dt}, {"blocks", blocks}};
}

Scene scene_from_json(const Json& j, const std::string& where) {
    Scene s;
    s.generator = j.contains("generator") ? field<std::string>(j, "generator", where) : "";
    const Json blocks = field<Json>(j, "blocks", where);
    if (!blocks.is_array() || blocks.size() != 2) throw Error("schema", where + ": 'blocks' must hold two blocks");
    for (int b = 0; b < 2; ++b) {
        const std::string w = where + ".blocks[" + std::to_string(b) + "]";
        SceneBlock& out = s.blocks[b];
        out.name = blocks[b].contains("name") ? field<std::string>(blocks[b], "name", w) : "";
        const double dt = field<double>(blocks[b], "dt", w);
        if (b == 0) s.dt = dt;
        else if (dt != s.dt) throw Error("schema", w + ": blocks must share dt");
        out.r0 = points_from(field<Json>(blocks[b], "r0", w), w + ".r0");
        out.v = points_from(field<Json>(blocks[b], "v", w), w + ".v");
        out.triangles = triangles_from(field<Json>(blocks[b], "triangles", w), w + ".triangles");
        if (out.r0.size() != out.v.size()) throw Error("schema", w + ": r0 and v differ in length");
        for (const Tri& t : out.triangles)
            for (int i : t)
                if (i < 0 || i >= static_cast<int>(out.r0.size()))
                    throw Error("schema", w + ": triangle index " + std::to_string(i) + " out of range");
    }
    if (j.contains("dt") && field<double>(j, "dt", where) != s.dt) throw Error("schema", where + ": dt mismatch");
    if (!(s.dt > 0.0)) throw Error("schema", where + ": dt must be positive");
    return s;
}

Scene load_scene(const std::filesystem::path& path) { return scene_from_json(read_json(path), path.string()); }

void save_scene(const std::filesystem::path& path, const Scene& s) { write_json(path, to_json(s)); }

// ---- generators -------------------------------------------------------------

namespace {

// Smootherstep and its first derivative on [0, 1].
double ramp(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}
double ramp_rate(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return 30.0 * x * x * (1.0 - x) * (1.0 - x);
}

struct Surfaces {
    Grid upper, lower;
    // Drive shape per node (same layout for both grids).
    std::vector<double> shape;
};

Surfaces membranes(const SceneSpec& s, double k1u, double k2u, double k1l, double k2l) {
    const double A = s.amplitude, c3 = 0.5 * s.gap, L = s.extent;
    Surfaces out;
    out.upper = grid(s.resolution, 0.0, 0.0, L, [&](double x, double y) { return c3 + A * std::sin(k1u * x) * std::sin(k2u * y); });
    out.lower = grid(s.resolution, 0.0, 0.0, L, [&](double x, double y) { return -c3 + A * std::sin(k1l * x) * std::sin(k2l * y); });
    for (const auto& p : out.upper.nodes) out.shape.push_back(std::sin(kPi * p.x() / L) * std::sin(kPi * p.y() / L));
    return out;
}

Surfaces parabolas(const SceneSpec& s) {
    const double c = 0.5 * s.gap, k = s.curvature, h = 0.5 * s.extent;
    Surfaces out;
    out.upper = grid(s.resolution, -h, -h, s.extent, [&](double x, double y) { return c + k * (x * x + y * y); });
    out.lower = grid(s.resolution, -h, -h, s.extent, [&](double x, double y) { return -c - k * (x * x + y * y); });
    out.shape.assign(out.upper.nodes.size(), 1.0);
    return out;
}

Scene closing_scene(const Surfaces& m, const std::string& name, double speed, double dt) {
    Scene sc;
    sc.generator = name;
    sc.dt = dt;
    sc.blocks[0] = {"upper", m.upper.nodes, {}, m.upper.triangles};
    sc.blocks[1] = {"lower", m.lower.nodes, {}, m.lower.triangles};
    for (double b : m.shape) {
        sc.blocks[0].v.emplace_back(0.0, 0.0, -speed * b);
        sc.blocks[1].v.emplace_back(0.0, 0.0, speed * b);
    }
    return sc;
}

// Both bodies move toward each other with displacement amplitude drive*shape,
// capped per node so a clearance remains; ramped smoothly over 3/4 of the run
// and held afterwards. Accelerations are the exact velocity increments per step.
Simulation closing_simulation(const Surfaces& m, const SceneSpec& s, double drive, std::vector<double> globals,
                              const std::string& id) {
    const std::size_t n = m.upper.nodes.size();
    std::vector<double> U(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double avail = 0.5 * (m.upper.nodes[i].z() - m.lower.nodes[i].z() - s.clearance);
        U[i] = std::min(drive * m.shape[i], avail);
    }
    const double T = 0.75 * s.n_steps * s.dt;
    auto velocity = [&](std::size_t i, double t) { return U[i] * ramp_rate(t / T) / T; };

    Simulation sim;
    sim.id = id;
    std::vector<NodeState> nodes(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].r = m.upper.nodes[i];
        nodes[n + i].r = m.lower.nodes[i];
    }
    for (int k = 0; k < s.n_steps; ++k) {
        const double t = k * s.dt;
        StepRecord rec;
        rec.t = t;
        rec.dt = s.dt;
        rec.globals = globals;
        rec.nodes = nodes;
        rec.targets.assign(2 * n, Vec3::Zero());
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = (velocity(i, t + s.dt) - velocity(i, t)) / s.dt;
            rec.targets[i] = Vec3(0.0, 0.0, -dv);
            rec.targets[n + i] = Vec3(0.0, 0.0, dv);
        }
        nodes = integrate_step(nodes, rec.targets, s.dt);
        sim.steps.push_back(std::move(rec));
    }
    ensure_terminal_step(sim);
    return sim;
}

Dataset closing_dataset(const SceneSpec& s, bool undulating) {
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::array<double, 4> ks = {0.5 * kPi, kPi, 2.0 * kPi, 4.0 * kPi};
    auto pick = [&] { return ks[static_cast<std::size_t>(unit(rng) * 4.0) % 4]; };

    Dataset d;
    d.meta.radius = s.radius;
    d.meta.length_scale = s.length_scale;
    d.meta.n_globals = 2;
    d.meta.dt = s.dt;
    for (int m = 0; m < s.n_sims; ++m) {
        double k1u = s.k1u, k2u = s.k2u, k1l = s.k1l, k2l = s.k2l;
        if (undulating && s.sample_k) {
            k1u = pick();
            k2u = pick();
            k1l = pick();
            k2l = pick();
        }
        const double p = s.pressure_min + (s.pressure_max - s.pressure_min) * unit(rng);
        const double E = s.modulus_min + (s.modulus_max - s.modulus_min) * unit(rng);
        const Surfaces surf = undulating ? membranes(s, k1u, k2u, k1l, k2l) : parabolas(s);
        char id[16];
        std::snprintf(id, sizeof id, "sim%03d", m);
        d.sims.push_back(closing_simulation(surf, s, p / E, {p, E}, id));
        // Every simulation shares the connectivity; the reference geometry of
        // the mesh record is that of the first one.
        if (m == 0) {
            Points pos = surf.upper.nodes;
            pos.insert(pos.end(), surf.lower.nodes.begin(), surf.lower.nodes.end());
            std::vector<Tri> tris = surf.upper.triangles;
            const int off = static_cast<int>(surf.upper.nodes.size());
            for (Tri t : surf.lower.triangles) tris.push_back({t[0] + off, t[1] + off, t[2] + off});
            d.body.assign(tris.size(), 0);
            std::fill(d.body.begin() + static_cast<long>(surf.upper.triangles.size()), d.body.end(), 1);
            d.mesh = TriMesh::from_triangles(std::move(pos), std::move(tris));
        }
    }
    std::vector<int> order(s.n_sims);
    for (int i = 0; i < s.n_sims; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const auto parts = split_811(s.n_sims, order);
    d.meta.split = {parts[0], parts[1], parts[2]};
    return d;
}

Scene collinear_edges(const SceneSpec& s) {
    // Large 5 x 5 sheet on [0, 1]^2 at z = 0 and a small 3 x 3 sheet on the
    // same grid lines. The small sheet slides across and through the plane
    // just outside the large sheet, so its x-aligned edges pass through exact
    // collinearity with edges of the large sheet at dt/2 without overlapping.
    const Grid large = grid(5, 0.0, 0.0, 1.0, [](double, double) { return 0.0; });
    const Grid small = grid(3, 1.5, 0.25, 0.5, [](double, double) { return 0.125; });
    Scene sc;
    sc.generator = to_string(Generator::CollinearEdges);
    sc.dt = s.dt;
    sc.blocks[0] = {"large", large.nodes, Points(large.nodes.size(), Vec3::Zero()), large.triangles};
    sc.blocks[1] = {"small", small.nodes, Points(small.nodes.size(), Vec3(-0.75, 0.0, -0.25) / s.dt), small.triangles};
    return sc;
}

Scene random_micro(const SceneSpec& s) {
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    Scene sc;
    sc.generator = to_string(Generator::RandomMicro);
    sc.dt = s.dt;
    for (int b = 0; b < 2; ++b) {
        SceneBlock& blk = sc.blocks[b];
        blk.name = b == 0 ? "a" : "b";
        for (int i = 0; i < 3; ++i) {
            blk.r0.emplace_back(u(rng), u(rng), u(rng));
            blk.v.push_back(Vec3(n(rng), n(rng), n(rng)) * (s.approach_speed * s.extent));
        }
        blk.triangles = {{0, 1, 2}};
    }
    return sc;
}

}  // namespace

Generated generate(const SceneSpec& spec) {
    spec.validate();
    Generated g;
    switch (spec.generator) {
        case Generator::CollinearEdges:
            g.scene = collinear_edges(spec);
            break;
        case Generator::RandomMicro:
            g.scene = random_micro(spec);
            break;
        case Generator::UndulatingMembranes:
            g.scene = closing_scene(membranes(spec, spec.k1u, spec.k2u, spec.k1l, spec.k2l), to_string(spec.generator),
                                    spec.approach_speed, spec.dt);
            if (spec.n_sims > 0) g.dataset = closing_dataset(spec, true);
            break;
        case Generator::ParabolaSheets:
            g.scene = closing_scene(parabolas(spec), to_string(spec.generator), spec.approach_speed, spec.dt);
            if (spec.n_sims > 0) g.dataset = closing_dataset(spec, false);
            break;
    }
    return g;
}

}  // namespace contactgnn::harness
