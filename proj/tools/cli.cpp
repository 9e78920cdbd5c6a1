#include "contactgnn/harness/bench.hpp"
#include "contactgnn/harness/rollout.hpp"
#include "contactgnn/harness/scenes.hpp"
#include "contactgnn/harness/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace contactgnn;
using namespace contactgnn::harness;
namespace fs = std::filesystem;

namespace {

void print(const Json& j) { std::cout << dump(j) << "\n"; }

Json scene_summary(const Scene& s) {
    Json blocks = Json::array();
    for (const auto& b : s.blocks)
        blocks.push_back({{"name", b.name}, {"nodes", b.r0.size()}, {"triangles", b.triangles.size()}});
    return {{"generator", s.generator}, {"dt", s.dt}, {"blocks", blocks}};
}

void gen_scene(const fs::path& spec_file, const fs::path& out) {
    const SceneSpec spec = spec_from_json(read_json(spec_file));
    const Generated g = generate(spec);
    save_scene(out / "scene.json", g.scene);
    write_json(out / "spec.json", to_json(spec));

    Json summary = {{"scene", scene_summary(g.scene)}, {"dataset", nullptr}};
    Csv csv({"block", "nodes", "triangles"});
    for (const auto& b : g.scene.blocks) csv.row({b.name, std::to_string(b.r0.size()), std::to_string(b.triangles.size())});
    if (g.dataset) {
        save_dataset(out / "dataset", *g.dataset);
        const auto& d = *g.dataset;
        summary["dataset"] = {{"path", (out / "dataset").string()},
                              {"simulations", d.sims.size()},
                              {"graphs", d.graph_count()},
                              {"nodes", d.mesh.node_count()},
                              {"triangles", d.mesh.triangles.size()},
                              {"split", {{"train", d.meta.split.train}, {"val", d.meta.split.val}, {"test", d.meta.split.test}}}};
    }
    write_text(out / "summary.csv", csv.str());
    write_json(out / "summary.json", summary);
    print(summary);
}

void detect(const fs::path& scene_file, const fs::path& out, bool unmodified) {
    const Scene sc = load_scene(scene_file);
    const auto traj = sc.trajectory();
    const auto topo = sc.topology();
    ccd::DetectOptions o;
    if (unmodified) o.edge_test = ccd::EdgeTest::Unmodified;
    ccd::DetectTimings tm;
    const auto field = ccd::detect_contacts(traj, topo, o, &tm);

    const std::size_t n_tri = sc.triangle_count();
    std::vector<int> vf(n_tri, 0), ee(n_tri, 0);
    Json events = Json::array();
    Csv ev_csv({"tri_a", "tri_b", "kind", "index", "t_star", "response", "degenerate"});
    for (const auto& e : field.events) {
        const bool is_vf = e.kind == ccd::SubTestKind::VF;
        for (int t : {e.pair.tri_a, e.pair.tri_b}) ++(is_vf ? vf : ee)[t];
        events.push_back({{"tri_a", e.pair.tri_a},
                          {"tri_b", e.pair.tri_b},
                          {"kind", is_vf ? "VF" : "EE"},
                          {"index", e.index},
                          {"t_star", e.t_star},
                          {"response", e.response},
                          {"degenerate", e.degenerate}});
        ev_csv.row({std::to_string(e.pair.tri_a), std::to_string(e.pair.tri_b), is_vf ? "VF" : "EE",
                    std::to_string(e.index), fmt(e.t_star), fmt(e.response), e.degenerate ? "1" : "0"});
    }

    Csv field_csv({"triangle_id", "response"});
    for (std::size_t k = 0; k < field.nnz(); ++k) field_csv.row({std::to_string(field.triangle[k]), fmt(field.response[k])});

    Json per_block = Json::array();
    Csv counts_csv({"triangle_id", "block", "vf_events", "ee_events", "response"});
    for (int b = 0; b < 2; ++b) {
        const std::size_t first = sc.triangle_offset(b), count = sc.blocks[b].triangles.size();
        long n_vf = 0, n_ee = 0, responding = 0;
        for (std::size_t t = first; t < first + count; ++t) {
            n_vf += vf[t];
            n_ee += ee[t];
            responding += field.at(static_cast<int>(t)) > 0.0;
            counts_csv.row({std::to_string(t), sc.blocks[b].name, std::to_string(vf[t]), std::to_string(ee[t]),
                            fmt(field.at(static_cast<int>(t)))});
        }
        per_block.push_back({{"block", sc.blocks[b].name},
                             {"vf_events", n_vf},
                             {"ee_events", n_ee},
                             {"triangles_with_response", responding}});
    }

    const Json report = {{"scene", scene_summary(sc)},
                         {"edge_test", unmodified ? "unmodified" : "modified"},
                         {"events", events},
                         {"field", {{"triangle", field.triangle}, {"response", field.response}}},
                         {"counts", per_block},
                         {"timings_s",
                          {{"broad_phase", tm.broad_phase}, {"narrow_phase", tm.narrow_phase}, {"response", tm.response}}}};
    write_json(out / "contacts.json", report);
    write_text(out / "field.csv", field_csv.str());
    write_text(out / "events.csv", ev_csv.str());
    write_text(out / "triangles.csv", counts_csv.str());
    print({{"events", field.events.size()}, {"triangles_with_response", field.nnz()}, {"counts", per_block},
           {"out", out.string()}});
}

Json edges_json(const std::vector<IndexPair>& pairs, const std::vector<EdgeFeature>& feats) {
    Json j = Json::array();
    for (std::size_t k = 0; k < pairs.size(); ++k)
        j.push_back({{"i", pairs[k].first}, {"j", pairs[k].second}, {"f", std::vector<double>(feats[k].begin(), feats[k].end())}});
    return j;
}

void graph(const fs::path& dataset, const fs::path& out) {
    const Dataset d = load_dataset(dataset);
    Csv csv({"sim", "step", "t", "dt", "nodes", "mesh_edges", "world_edges"});
    Json index = Json::array();
    for (std::size_t m = 0; m < d.sims.size(); ++m) {
        const auto graphs = d.graphs(static_cast<int>(m));
        for (std::size_t k = 0; k < graphs.size(); ++k) {
            const GraphSample& g = graphs[k];
            Json nodes = Json::array();
            for (std::size_t i = 0; i < g.node_count(); ++i) {
                const auto f = g.node_feature(i);
                nodes.push_back(std::vector<double>(f.begin(), f.end()));
            }
            const fs::path file = out / "graphs" / d.sims[m].id / (std::to_string(k) + ".json");
            write_json(file, {{"g", g.g},
                              {"node_features", nodes},
                              {"mesh_edges", edges_json(g.mesh_edges, g.mesh_edge_feats)},
                              {"world_edges", edges_json(g.world_edges, g.world_edge_feats)}});
            csv.row({d.sims[m].id, std::to_string(k), fmt(g.t()), fmt(g.dt()), std::to_string(g.node_count()),
                     std::to_string(g.mesh_edges.size()), std::to_string(g.world_edges.size())});
            index.push_back({{"sim", d.sims[m].id},
                             {"step", k},
                             {"file", fs::relative(file, out).string()},
                             {"world_edges", g.world_edges.size()}});
        }
    }
    write_text(out / "graphs.csv", csv.str());
    write_json(out / "graphs.json", {{"radius", d.meta.radius}, {"graphs", index}});
    print({{"graphs", index.size()}, {"out", out.string()}});
}

GnnConfig network_of(const Json& config, int n_globals) {
    if (!config.contains("network")) return GnnConfig::tiny(n_globals);
    Json n = config.at("network");
    if (n.is_string()) n = Json{{"preset", n}};
    if (!n.contains("n_globals")) n["n_globals"] = n_globals;
    const GnnConfig c = config_from_json(n.dump());
    if (c.n_globals != n_globals)
        throw Error("shape_mismatch", "network n_globals " + std::to_string(c.n_globals) + " does not match dataset " +
                                          std::to_string(n_globals));
    return c;
}

void train_cmd(const fs::path& dataset, const fs::path& config_file, const fs::path& out) {
    const Dataset d = load_dataset(dataset);
    Json config = read_json(config_file);
    const GnnConfig gnn = network_of(config, d.meta.n_globals);
    config.erase("network");
    const TrainConfig tc = train_config_from_json(config);
    fs::create_directories(out);
    write_json(out / "config.json", {{"train", to_json(tc)}, {"network", Json::parse(config_to_json(gnn))}});

    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& r, const GnnParams& p) {
        std::fprintf(stderr, "epoch %d L=%.6g L_d=%.6g L_c=%s val L=%.6g\n", r.epoch, r.train.total, r.train.dynamic,
                     r.train.contact_evaluated ? fmt(r.train.contact).c_str() : "-", r.val.total);
        if (tc.checkpoint_every > 0 && (r.epoch + 1) % tc.checkpoint_every == 0)
            save_checkpoint(out / "checkpoints" / ("epoch_" + std::to_string(r.epoch + 1) + ".ckpt"),
                            {p, tc.seed, r.epoch + 1});
    };
    if (tc.checkpoint_every > 0) fs::create_directories(out / "checkpoints");
    const TrainResult r = train(tc, d, gnn, hooks);
    save_checkpoint(out / "checkpoint.ckpt", {r.params, tc.seed, tc.epochs});

    Json history = Json::array();
    for (const auto& h : r.history) history.push_back(to_json(h));
    write_json(out / "history.json", history);
    write_text(out / "history.csv", history_csv(r.history));
    const auto& first = r.history.front();
    const auto& last = r.history.back();
    const Json summary = {{"epochs", tc.epochs},
                          {"params", r.params.param_count()},
                          {"w_c", r.w_c},
                          {"first_train_L", first.train.total},
                          {"final_train_L", last.train.total},
                          {"final_val_L", last.val.total},
                          {"checkpoint", (out / "checkpoint.ckpt").string()}};
    write_json(out / "summary.json", summary);
    print(summary);
}

Predictor predictor_of(const GnnParams& params, const Dataset& d) {
    if (params.config.n_globals != d.meta.n_globals)
        throw Error("shape_mismatch", "checkpoint expects " + std::to_string(params.config.n_globals) +
                                          " globals, dataset has " + std::to_string(d.meta.n_globals));
    return [&params](const GraphSample& g) { return predict_accelerations(g, params); };
}

void write_report(const MetricReport& rep, const fs::path& out, const std::string& stem) {
    write_json(out / (stem + ".json"), to_json(rep));
    write_text(out / (stem + "_graphs.csv"), graphs_csv(rep));
    write_text(out / (stem + "_steps.csv"), steps_csv(rep));
    print({{"split", rep.split},
           {"mode", to_string(rep.mode)},
           {"simulations", rep.sims.size()},
           {"mean_L_p", rep.mean_position_loss},
           {"mean_L_c", rep.mean_contact_loss},
           {"error_median", rep.errors.median},
           {"error_mean", rep.errors.mean},
           {"out", out.string()}});
}

void infer(const fs::path& checkpoint, const fs::path& dataset, const std::string& split, const fs::path& out) {
    const Dataset d = load_dataset(dataset);
    const Checkpoint ck = load_checkpoint(checkpoint);
    const auto& sims = d.split(split);
    const Predictor p = predictor_of(ck.params, d);

    // One-step predictions from ground-truth states.
    Csv csv({"sim", "step", "node", "y_hat_x", "y_hat_y", "y_hat_z", "y_x", "y_y", "y_z"});
    for (int m : sims) {
        const auto& sim = d.sims[m];
        for (std::size_t k = 0; k < sim.steps.size(); ++k) {
            const GraphSample g = d.graph(sim.steps[k]);
            const Points y_hat = p(g);
            for (std::size_t i = 0; i < y_hat.size(); ++i) {
                const Vec3& y = sim.steps[k].targets[i];
                csv.row({sim.id, std::to_string(k), std::to_string(i), fmt(y_hat[i].x()), fmt(y_hat[i].y()),
                         fmt(y_hat[i].z()), fmt(y.x()), fmt(y.y()), fmt(y.z())});
            }
        }
    }
    write_text(out / "predictions.csv", csv.str());
    RolloutOptions o;
    o.mode = RolloutMode::TeacherForced;
    write_report(rollout(p, d, sims, o, split), out, "infer");
}

void rollout_cmd(const fs::path& checkpoint, const fs::path& dataset, const std::string& mode, const std::string& split,
                 const fs::path& out) {
    const Dataset d = load_dataset(dataset);
    const Checkpoint ck = load_checkpoint(checkpoint);
    RolloutOptions o;
    o.mode = rollout_mode_from(mode);
    o.keep_positions = true;
    const MetricReport rep = rollout(predictor_of(ck.params, d), d, d.split(split), o, split);
    Json traj = Json::array();
    for (const auto& s : rep.sims) {
        Json states = Json::array();
        for (const auto& r : s.positions) states.push_back(to_json(r));
        traj.push_back({{"id", s.id}, {"positions", states}});
    }
    write_json(out / "trajectories.json", traj);
    write_report(rep, out, "rollout");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

void bench_cmd(const fs::path& scene, BenchOptions o, const std::string& networks, const fs::path& checkpoint,
               const fs::path& out) {
    o.networks = split_list(networks);
    if (!checkpoint.empty()) {
        o.params = load_checkpoint(checkpoint).params;
        o.params_label = checkpoint.stem().string();
    }
    const BenchReport r = bench(load_scene(scene), o);
    write_json(out / "bench.json", to_json(r));
    write_text(out / "table.csv", table_csv(r));
    std::cout << table_text(r);
    for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int fail(const std::string& code, const std::string& message, int status) {
    std::cerr << Json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contactgnn: continuous collision detection and graph-network contact surrogate"};
    app.require_subcommand(1);

    fs::path spec, out = ".", scene, dataset, config, checkpoint;
    bool unmodified = false;
    std::string split = "test", mode = "tf", networks = "tiny,S";
    BenchOptions bo;
    double reference_time = -1.0;

    auto* gen = app.add_subcommand("gen-scene", "Generate a scene and, for closing generators, a kinematic dataset");
    gen->add_option("--spec", spec, "Scene spec JSON")->required();
    gen->add_option("--out", out, "Output directory")->required();

    auto* det = app.add_subcommand("detect", "Run contact detection on a scene file");
    det->add_option("--scene", scene, "Scene JSON")->required();
    det->add_option("--out", out, "Output directory")->required();
    det->add_flag("--unmodified-ee", unmodified, "Use the unmodified edge-edge test");

    auto* gr = app.add_subcommand("graph", "Assemble graph samples of a dataset");
    gr->add_option("--dataset", dataset, "Dataset directory")->required();
    gr->add_option("--out", out, "Output directory")->required();

    auto* tr = app.add_subcommand("train", "Train a network on a dataset");
    tr->add_option("--dataset", dataset, "Dataset directory")->required();
    tr->add_option("--config", config, "Training config JSON (optional \"network\" entry)")->required();
    tr->add_option("--out", out, "Output directory")->required();

    auto* inf = app.add_subcommand("infer", "One-step predictions and metrics on a split");
    inf->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    inf->add_option("--dataset", dataset, "Dataset directory")->required();
    inf->add_option("--split", split, "train, val or test")->required();
    inf->add_option("--out", out, "Output directory");

    auto* ro = app.add_subcommand("rollout", "Teacher-forced or autoregressive rollout");
    ro->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    ro->add_option("--dataset", dataset, "Dataset directory")->required();
    ro->add_option("--mode", mode, "tf or self")->required();
    ro->add_option("--split", split, "train, val or test");
    ro->add_option("--out", out, "Output directory");

    auto* be = app.add_subcommand("bench", "Time contact detection and per-simulation inference");
    be->add_option("--scene", scene, "Scene JSON")->required();
    be->add_option("--reps", bo.reps, "Repetitions (at least 3)")->required();
    be->add_option("--steps", bo.steps, "Steps per simulated inference run");
    be->add_option("--networks", networks, "Comma-separated presets: tiny, S, L, VG-S, VG-L");
    be->add_option("--checkpoint", checkpoint, "Also time a trained checkpoint");
    be->add_option("--reference-time", reference_time, "Reference solver time per simulation [s]");
    be->add_option("--out", out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (*gen) gen_scene(spec, out);
        else if (*det) detect(scene, out, unmodified);
        else if (*gr) graph(dataset, out);
        else if (*tr) train_cmd(dataset, config, out);
        else if (*inf) infer(checkpoint, dataset, split, out);
        else if (*ro) rollout_cmd(checkpoint, dataset, mode, split, out);
        else if (*be) {
            if (reference_time > 0.0) bo.reference_time = reference_time;
            bench_cmd(scene, bo, networks, checkpoint, out);
        }
    } catch (const Error& e) {
        return fail(e.code(), e.what(), 1);
    } catch (const Json::exception& e) {
        return fail("json", e.what(), 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
