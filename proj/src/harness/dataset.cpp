#include "contactgnn/harness/dataset.hpp"

#include "contactgnn/harness/json_io.hpp"
#include "contactgnn/surrogate.hpp"

#include <omp.h>

namespace fs = std::filesystem;

namespace contactgnn::harness {

ccd::ContactTopology Dataset::topology() const {
    ccd::ContactTopology t = ccd::ContactTopology::single(mesh.triangles);
    t.body = body;
    return t;
}

GraphSample Dataset::graph(const StepRecord& step) const {
    GraphSample s = assemble_graph_sample(mesh, step.nodes, step.globals, step.t, step.dt, {meta.radius});
    s.targets = step.targets;
    return s;
}

std::vector<GraphSample> Dataset::graphs(int sim) const {
    const auto& steps = sims.at(sim).steps;
    std::vector<GraphSample> out(steps.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < steps.size(); ++k) out[k] = graph(steps[k]);
    return out;
}

const std::vector<int>& Dataset::split(const std::string& name) const {
    if (name == "train") return meta.split.train;
    if (name == "val") return meta.split.val;
    if (name == "test") return meta.split.test;
    throw Error("bad_split", "unknown split '" + name + "'");
}

std::size_t Dataset::graph_count() const {
    std::size_t n = 0;
    for (const auto& s : sims) n += s.steps.size();
    return n;
}

void ensure_terminal_step(Simulation& sim) {
    if (sim.steps.empty() || sim.steps.back().dt == 0.0) return;
    const StepRecord& last = sim.steps.back();
    StepRecord end;
    end.t = last.t + last.dt;
    end.dt = 0.0;
    end.globals = last.globals;
    end.nodes = integrate_step(last.nodes, last.targets, last.dt);
    end.targets.assign(last.nodes.size(), Vec3::Zero());
    sim.steps.push_back(std::move(end));
}

namespace {

Json meta_json(const Dataset& d) {
    Json sims = Json::array();
    for (const auto& s : d.sims) sims.push_back({{"id", s.id}, {"steps", s.steps.size()}});
    return {{"R", d.meta.radius},
            {"l_c", d.meta.length_scale},
            {"n_g", d.meta.n_globals},
            {"dt", d.meta.dt},
            {"units", d.meta.units},
            {"split", {{"train", d.meta.split.train}, {"val", d.meta.split.val}, {"test", d.meta.split.test}}},
            {"simulations", sims}};
}

Json step_json(const StepRecord& s) {
    Points r, v, a;
    for (const auto& n : s.nodes) {
        r.push_back(n.r);
        v.push_back(n.v);
        a.push_back(n.a);
    }
    return {{"t", s.t}, {"dt", s.dt},          {"globals", s.globals}, {"r", to_json(r)},
            {"v", to_json(v)}, {"a", to_json(a)}, {"y", to_json(s.targets)}};
}

StepRecord parse_step(const Json& j, const std::string& where, std::size_t n_nodes, int n_globals) {
    StepRecord s;
    s.t = field<double>(j, "t", where);
    s.dt = field<double>(j, "dt", where);
    s.globals = field<std::vector<double>>(j, "globals", where);
    if (static_cast<int>(s.globals.size()) != n_globals)
        throw Error("schema", where + ": field 'globals' has " + std::to_string(s.globals.size()) +
                                  " entries, meta.n_g is " + std::to_string(n_globals));
    Points r = points_from(field<Json>(j, "r", where), where + ".r");
    Points v = points_from(field<Json>(j, "v", where), where + ".v");
    Points a = points_from(field<Json>(j, "a", where), where + ".a");
    s.targets = points_from(field<Json>(j, "y", where), where + ".y");
    for (const auto* f : {&r, &v, &a, &s.targets})
        if (f->size() != n_nodes)
            throw Error("schema", where + ": per-node arrays must have " + std::to_string(n_nodes) + " entries");
    s.nodes.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) s.nodes[i] = {r[i], v[i], a[i]};
    return s;
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
    Dataset d;
    const std::string mw = (dir / "meta.json").string();
    const Json meta = read_json(dir / "meta.json");
    d.meta.radius = field<double>(meta, "R", mw);
    d.meta.length_scale = field<double>(meta, "l_c", mw);
    d.meta.n_globals = field<int>(meta, "n_g", mw);
    d.meta.dt = field<double>(meta, "dt", mw);
    if (meta.contains("units")) d.meta.units = field<std::string>(meta, "units", mw);
    const Json split = field<Json>(meta, "split", mw);
    d.meta.split.train = field<std::vector<int>>(split, "train", mw + ".split");
    d.meta.split.val = field<std::vector<int>>(split, "val", mw + ".split");
    d.meta.split.test = field<std::vector<int>>(split, "test", mw + ".split");

    const std::string ww = (dir / "mesh.json").string();
    const Json mesh = read_json(dir / "mesh.json");
    Points pos = points_from(field<Json>(mesh, "positions_ref", ww), ww + ".positions_ref");
    if (mesh.contains("triangles")) {
        d.mesh = TriMesh::from_triangles(std::move(pos), triangles_from(mesh["triangles"], ww + ".triangles"));
    } else if (mesh.contains("quads")) {
        QuadMesh q{std::move(pos), field<std::vector<QuadIdx>>(mesh, "quads", ww)};
        d.mesh = quad_to_tri(q);
    } else {
        throw Error("schema", ww + ": missing field 'triangles' or 'quads'");
    }
    if (mesh.contains("body")) {
        d.body = field<std::vector<int>>(mesh, "body", ww);
        if (d.body.size() != d.mesh.triangles.size())
            throw Error("schema", ww + ": field 'body' needs one entry per triangle");
    }

    const Json sims = field<Json>(meta, "simulations", mw);
    if (!sims.is_array()) throw Error("schema", mw + ": field 'simulations' must be an array");
    validate_meta(d.meta, static_cast<int>(sims.size()));
    d.sims.resize(sims.size());
    for (std::size_t k = 0; k < sims.size(); ++k) {
        const std::string where = mw + ".simulations[" + std::to_string(k) + "]";
        d.sims[k].id = field<std::string>(sims[k], "id", where);
        d.sims[k].steps.resize(field<std::size_t>(sims[k], "steps", where));
    }
    std::vector<std::string> errors(d.sims.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < d.sims.size(); ++k) {
        auto& sim = d.sims[k];
        try {
            for (std::size_t n = 0; n < sim.steps.size(); ++n) {
                const fs::path p = dir / "steps" / sim.id / (std::to_string(n) + ".json");
                if (!fs::exists(p))
                    throw Error("missing_step", "simulation " + sim.id + " step " + std::to_string(n) +
                                                    ": missing file " + p.string());
                sim.steps[n] = parse_step(read_json(p), p.string(), d.mesh.node_count(), d.meta.n_globals);
            }
            ensure_terminal_step(sim);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw Error("schema", e);
    return d;
}

void save_dataset(const fs::path& dir, const Dataset& d) {
    validate_meta(d.meta, static_cast<int>(d.sims.size()));
    fs::create_directories(dir);
    write_json(dir / "meta.json", meta_json(d));
    std::vector<std::array<int, 3>> tris(d.mesh.triangles.begin(), d.mesh.triangles.end());
    Json mesh = {{"positions_ref", to_json(d.mesh.positions_ref)}, {"triangles", tris}};
    if (!d.body.empty()) mesh["body"] = d.body;
    write_json(dir / "mesh.json", mesh);
    for (const auto& sim : d.sims)
        for (std::size_t n = 0; n < sim.steps.size(); ++n)
            write_json(dir / "steps" / sim.id / (std::to_string(n) + ".json"), step_json(sim.steps[n]));
}

}  // namespace contactgnn::harness
