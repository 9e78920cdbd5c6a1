#include "contactgnn/harness/bench.hpp"

#include <omp.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

namespace contactgnn::harness {

Timing Timing::of(std::vector<double> samples) {
    Timing t;
    if (samples.empty()) return t;
    t.samples = samples;
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    t.min = samples.front();
    t.max = samples.back();
    t.median = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    return t;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string cpu_model() {
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) return line.substr(line.find_first_not_of(' ', colon + 1));
        }
    return "unknown";
}

std::string compiler() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
}

GnnConfig preset(const std::string& name, int n_globals) {
    if (name == "tiny") return GnnConfig::tiny(n_globals);
    if (name == "S") return GnnConfig::valve_small();
    if (name == "L") return GnnConfig::valve_large();
    if (name == "VG-S") return GnnConfig::varying_geometry_small();
    if (name == "VG-L") return GnnConfig::varying_geometry_large();
    throw Error("bad_network", "unknown network '" + name + "' (tiny, S, L, VG-S, VG-L)");
}

struct InferenceSetup {
    TriMesh mesh;
    std::vector<NodeState> nodes;
    ccd::ContactTopology topo;
};

InferenceSetup setup_of(const Scene& scene) {
    const ccd::Trajectory traj = scene.trajectory();
    InferenceSetup s;
    s.topo = scene.topology();
    s.mesh = TriMesh::from_triangles(traj.r0, s.topo.triangles);
    s.nodes.resize(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        s.nodes[i].r = traj.r0[i];
        s.nodes[i].v = traj.v[i];
    }
    return s;
}

double run_simulation(const InferenceSetup& s, const GnnParams& params, double dt, int steps,
                      const GraphOptions& graph, const ccd::DetectOptions& detect) {
    const std::vector<double> globals(params.config.n_globals, 1.0);
    std::vector<NodeState> state = s.nodes;
    double sink = 0.0;
    for (int n = 0; n < steps; ++n) {
        const GraphSample g = assemble_graph_sample(s.mesh, state, globals, n * dt, dt, graph);
        const Points y_hat = predict_accelerations(g, params);
        const auto field = ccd::detect_contacts(step_trajectory(state, y_hat, dt), s.topo, detect);
        sink += static_cast<double>(field.nnz());
        state = integrate_step(state, y_hat, dt);
    }
    return sink;
}

}  // namespace

Json machine_descriptor() {
    char host[256] = {};
    gethostname(host, sizeof host - 1);
    return {{"host", host},
            {"cpu", cpu_model()},
            {"hardware_threads", static_cast<int>(sysconf(_SC_NPROCESSORS_ONLN))},
            {"omp_threads", omp_get_max_threads()},
            {"compiler", compiler()}};
}

BenchReport bench(const Scene& scene, const BenchOptions& options) {
    if (options.reps < 3) throw Error("bad_option", "reps must be at least 3");
    if (options.steps < 1) throw Error("bad_option", "steps must be at least 1");

    BenchReport r;
    r.problem = scene.generator;
    r.machine = machine_descriptor();
    r.reps = options.reps;
    r.steps = options.steps;
    r.nodes = scene.node_count();
    r.triangles = scene.triangle_count();
    r.reference_time = options.reference_time;
    if (options.reps < 5) r.warnings.push_back("fewer than 5 repetitions; spread is unreliable");

    const ccd::Trajectory traj = scene.trajectory();
    const ccd::ContactTopology topo = scene.topology();
    const ccd::DetectOptions detect;
    const auto scale = ccd::SceneScale::of(traj, detect.tol);
    r.candidate_pairs = ccd::swept_aabb_broadphase(traj, topo, scale.aabb_pad).size();

    std::vector<double> bp, np, rs, total;
    for (int k = 0; k < options.reps; ++k) {
        ccd::DetectTimings tm;
        const auto start = Clock::now();
        ccd::detect_contacts(traj, topo, detect, &tm);
        total.push_back(seconds_since(start));
        bp.push_back(tm.broad_phase);
        np.push_back(tm.narrow_phase);
        rs.push_back(tm.response);
    }
    r.broad_phase = Timing::of(bp);
    r.narrow_phase = Timing::of(np);
    r.response = Timing::of(rs);
    r.detect = Timing::of(total);

    const InferenceSetup setup = setup_of(scene);
    const GraphOptions graph{options.radius};
    std::vector<std::pair<std::string, GnnParams>> nets;
    if (options.params) nets.emplace_back(options.params_label, *options.params);
    for (const auto& name : options.networks) nets.emplace_back(name, init_params(preset(name, 0), options.seed));

    for (const auto& [name, params] : nets) {
        NetworkTiming nt;
        nt.network = name;
        nt.params = params.param_count();
        const std::vector<double> globals(params.config.n_globals, 1.0);
        const GraphSample g = assemble_graph_sample(setup.mesh, setup.nodes, globals, 0.0, scene.dt, graph);

        std::vector<double> fwd, sim;
        predict_accelerations(g, params);  // warm-up
        for (int k = 0; k < options.reps; ++k) {
            const auto start = Clock::now();
            predict_accelerations(g, params);
            fwd.push_back(seconds_since(start));
        }
        for (int k = 0; k < options.reps; ++k) {
            const auto start = Clock::now();
            run_simulation(setup, params, scene.dt, options.steps, graph, detect);
            sim.push_back(seconds_since(start));
        }
        nt.forward = Timing::of(fwd);
        nt.per_simulation = Timing::of(sim);
        if (options.reference_time) nt.speedup = *options.reference_time / nt.per_simulation.median;
        r.networks.push_back(std::move(nt));
    }
    return r;
}

namespace {

Json timing_json(const Timing& t) {
    return {{"median_s", t.median}, {"min_s", t.min}, {"max_s", t.max}, {"samples_s", t.samples}};
}

std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

}  // namespace

Json to_json(const BenchReport& r) {
    Json nets = Json::array();
    for (const auto& n : r.networks)
        nets.push_back({{"network", n.network},
                        {"params", n.params},
                        {"forward", timing_json(n.forward)},
                        {"per_simulation", timing_json(n.per_simulation)},
                        {"speedup", n.speedup ? Json(*n.speedup) : Json(nullptr)}});
    return {{"problem", r.problem},
            {"machine", r.machine},
            {"reps", r.reps},
            {"steps", r.steps},
            {"nodes", r.nodes},
            {"triangles", r.triangles},
            {"candidate_pairs", r.candidate_pairs},
            {"contact",
             {{"broad_phase", timing_json(r.broad_phase)},
              {"narrow_phase", timing_json(r.narrow_phase)},
              {"response", timing_json(r.response)},
              {"total", timing_json(r.detect)}}},
            {"reference_time_s", r.reference_time ? Json(*r.reference_time) : Json(nullptr)},
            {"networks", nets},
            {"warnings", r.warnings}};
}

std::string table_csv(const BenchReport& r) {
    Csv csv({"problem", "network", "fem_time_s", "inference_time_s", "speedup", "inference_min_s",
             "inference_max_s", "params"});
    for (const auto& n : r.networks)
        csv.row({r.problem, n.network, opt(r.reference_time), fmt(n.per_simulation.median), opt(n.speedup),
                 fmt(n.per_simulation.min), fmt(n.per_simulation.max), std::to_string(n.params)});
    return csv.str();
}

std::string table_text(const BenchReport& r) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-22s %-10s %14s %20s %10s\n", "Problem", "Network", "FEM Time [s]",
                  "Inference Time [s]", "Speedup");
    out += line;
    for (const auto& n : r.networks) {
        const std::string ref = r.reference_time ? fmt(*r.reference_time) : "-";
        char sp[32] = "-";
        if (n.speedup) std::snprintf(sp, sizeof sp, "%.1f", *n.speedup);
        std::snprintf(line, sizeof line, "%-22s %-10s %14s %20.4g %10s\n", r.problem.c_str(), n.network.c_str(),
                      ref.c_str(), n.per_simulation.median, sp);
        out += line;
    }
    return out;
}

}  // namespace contactgnn::harness
