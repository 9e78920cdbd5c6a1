#include <doctest.h>

#include "contactgnn/ccd/static_check.hpp"
#include "contactgnn/harness/bench.hpp"
#include "contactgnn/harness/rollout.hpp"
#include "contactgnn/harness/scenes.hpp"
#include "contactgnn/harness/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace contactgnn;
using namespace contactgnn::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("contactgnn_test_" + name);
    fs::remove_all(p);
    return p;
}

SceneSpec membrane_spec(int n_sims, int resolution = 4, int n_steps = 8) {
    SceneSpec s;
    s.generator = Generator::UndulatingMembranes;
    s.n_sims = n_sims;
    s.resolution = resolution;
    s.n_steps = n_steps;
    s.seed = 7;
    return s;
}

bool same_points(const Points& a, const Points& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

bool same_steps(const StepRecord& a, const StepRecord& b) {
    if (a.t != b.t || a.dt != b.dt || a.globals != b.globals || a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i)
        if (a.nodes[i].r != b.nodes[i].r || a.nodes[i].v != b.nodes[i].v || a.nodes[i].a != b.nodes[i].a) return false;
    return same_points(a.targets, b.targets);
}

std::size_t ee_events_on(const ccd::ContactField& f, std::size_t first_tri) {
    std::size_t n = 0;
    for (const auto& e : f.events)
        if (e.kind == ccd::SubTestKind::EE &&
            (static_cast<std::size_t>(e.pair.tri_a) >= first_tri || static_cast<std::size_t>(e.pair.tri_b) >= first_tri))
            ++n;
    return n;
}

}  // namespace

TEST_CASE("json numbers survive a write and read bit for bit") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    Json j = Json::array();
    std::vector<double> v;
    for (int i = 0; i < 200; ++i) v.push_back(u(rng) * std::pow(10.0, static_cast<int>(u(rng)) % 30));
    v.push_back(0.1);
    v.push_back(-0.0);
    v.push_back(5e-324);
    j = v;
    const Json back = Json::parse(dump(j));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(back[i].get<double>() == v[i]);
    CHECK_THROWS_AS(fmt(std::nan("")), Error);
}

TEST_CASE("missing fields are reported by name") {
    const Json j = {{"a", 1}};
    CHECK(field<int>(j, "a", "meta") == 1);
    try {
        field<int>(j, "b", "meta");
        FAIL("expected a schema error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
}

TEST_CASE("dataset round trip is exact") {
    const auto data = *generate(membrane_spec(10)).dataset;
    const fs::path dir = scratch("roundtrip");
    save_dataset(dir, data);
    const Dataset back = load_dataset(dir);
    REQUIRE(back.sims.size() == data.sims.size());
    CHECK(back.meta.dt == 0.025);
    CHECK(back.meta.split.train == data.meta.split.train);
    CHECK(back.meta.split.test == data.meta.split.test);
    CHECK(back.body == data.body);
    CHECK(same_points(back.mesh.positions_ref, data.mesh.positions_ref));
    for (std::size_t m = 0; m < data.sims.size(); ++m) {
        REQUIRE(back.sims[m].steps.size() == data.sims[m].steps.size());
        for (std::size_t k = 0; k < data.sims[m].steps.size(); ++k)
            CHECK(same_steps(back.sims[m].steps[k], data.sims[m].steps[k]));
    }
    fs::remove_all(dir);
}

TEST_CASE("a missing step file names the simulation and step") {
    const auto data = *generate(membrane_spec(10)).dataset;
    const fs::path dir = scratch("missing");
    save_dataset(dir, data);
    fs::remove(dir / "steps" / data.sims[3].id / "2.json");
    try {
        load_dataset(dir);
        FAIL("expected a load error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find(data.sims[3].id) != std::string::npos);
        CHECK(msg.find("step 2") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("terminal step is synthesized from the last step") {
    auto data = *generate(membrane_spec(10)).dataset;
    Simulation sim = data.sims[0];
    const StepRecord terminal = sim.steps.back();
    CHECK(terminal.dt == 0.0);
    sim.steps.pop_back();
    ensure_terminal_step(sim);
    REQUIRE(sim.steps.size() == data.sims[0].steps.size());
    CHECK(same_steps(sim.steps.back(), terminal));
    for (const auto& y : sim.steps.back().targets) CHECK(y.isZero());
    ensure_terminal_step(sim);
    CHECK(sim.steps.size() == data.sims[0].steps.size());
}

TEST_CASE("kinematic datasets are consistent with the integrator") {
    const auto data = *generate(membrane_spec(10)).dataset;
    for (const auto& sim : data.sims)
        for (std::size_t k = 0; k + 1 < sim.steps.size(); ++k) {
            const auto next = integrate_step(sim.steps[k].nodes, sim.steps[k].targets, sim.steps[k].dt);
            for (std::size_t i = 0; i < next.size(); ++i) CHECK((next[i].r - sim.steps[k + 1].nodes[i].r).norm() < 1e-12);
        }
}

TEST_CASE("kinematic datasets keep the bodies apart") {
    auto spec = membrane_spec(10);
    spec.n_steps = 20;
    const auto data = *generate(spec).dataset;
    const auto topo = data.topology();
    for (const auto& sim : data.sims)
        for (std::size_t k = 0; k + 1 < sim.steps.size(); ++k) {
            const auto traj = step_trajectory(sim.steps[k].nodes, sim.steps[k].targets, sim.steps[k].dt);
            CHECK(ccd::detect_contacts(traj, topo).nnz() == 0);
        }
}

TEST_CASE("generators are deterministic in the seed") {
    for (Generator g : {Generator::UndulatingMembranes, Generator::ParabolaSheets, Generator::RandomMicro}) {
        SceneSpec s;
        s.generator = g;
        s.seed = 11;
        const Json a = to_json(generate(s).scene);
        const Json b = to_json(generate(s).scene);
        CHECK(dump(a) == dump(b));
    }
    const auto d1 = *generate(membrane_spec(10)).dataset;
    const auto d2 = *generate(membrane_spec(10)).dataset;
    CHECK(d1.meta.split.train == d2.meta.split.train);
    CHECK(same_steps(d1.sims[5].steps[3], d2.sims[5].steps[3]));
}

TEST_CASE("scene spec validation") {
    SceneSpec s;
    s.amplitude = 0.2;
    CHECK_THROWS_AS(s.validate(), Error);
    s = SceneSpec{};
    s.n_sims = 5;
    CHECK_THROWS_AS(s.validate(), Error);
    s = SceneSpec{};
    s.generator = Generator::CollinearEdges;
    s.dt = 0.03;
    CHECK_THROWS_AS(s.validate(), Error);
    s.dt = 0.03125;
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("scene json round trip") {
    SceneSpec s;
    s.generator = Generator::RandomMicro;
    s.seed = 4;
    const Scene a = generate(s).scene;
    const fs::path p = scratch("scene.json");
    save_scene(p, a);
    const Scene b = load_scene(p);
    CHECK(dump(to_json(a)) == dump(to_json(b)));
    fs::remove(p);
}

TEST_CASE("membrane surfaces are asymmetric") {
    const Scene sc = generate(SceneSpec{}).scene;
    const auto& up = sc.blocks[0].r0;
    const auto& lo = sc.blocks[1].r0;
    double diff = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) diff = std::max(diff, std::abs((up[i].z() - 0.1) + (lo[i].z() + 0.1)));
    CHECK(diff > 1e-3);
}

TEST_CASE("collinear edges produce no response under the modified edge test") {
    SceneSpec s;
    s.generator = Generator::CollinearEdges;
    s.dt = 0.03125;
    const Scene sc = generate(s).scene;
    const auto traj = sc.trajectory();
    const auto topo = sc.topology();
    const auto modified = ccd::detect_contacts(traj, topo);
    CHECK(modified.nnz() == 0);
    CHECK(ee_events_on(modified, sc.triangle_offset(1)) == 0);

    ccd::DetectOptions o;
    o.edge_test = ccd::EdgeTest::Unmodified;
    const auto unmodified = ccd::detect_contacts(traj, topo, o);
    CHECK(ee_events_on(unmodified, sc.triangle_offset(1)) > 0);
}

TEST_CASE("parabola sheets tunnel through each other within one step") {
    SceneSpec s;
    s.generator = Generator::ParabolaSheets;
    s.approach_speed = 16.0;
    const Scene sc = generate(s).scene;
    const auto traj = sc.trajectory();
    const auto topo = sc.topology();
    CHECK(ccd::static_end_time_check(traj, topo).empty());
    const auto field = ccd::detect_contacts(traj, topo);
    CHECK(!field.events.empty());
    CHECK(field.nnz() > 0);
    for (double r : field.response) CHECK(r > 0.0);
}

TEST_CASE("train config parsing") {
    const Json j = Json::parse(R"({"epochs": 3, "mode": "DC", "activation_epoch": 1, "w_c": "auto", "schedule": [[0, 0.01], [2, 0.001]]})");
    const TrainConfig c = train_config_from_json(j);
    CHECK(c.epochs == 3);
    CHECK(c.mode == TrainMode::DC);
    CHECK(!c.w_c);
    CHECK(c.rate(1) == 0.01);
    CHECK(c.rate(2) == 0.001);
    CHECK_THROWS_AS(train_config_from_json(Json::parse(R"({"mode": "X"})")), Error);
    CHECK_THROWS_AS(train_config_from_json(Json::parse(R"({"schedule": [[1, 0.1]]})")), Error);
}

TEST_CASE("D and DC runs agree before activation") {
    const auto data = *generate(membrane_spec(10, 3, 5)).dataset;
    const GnnConfig gnn = GnnConfig::tiny(2);
    TrainConfig c;
    c.epochs = 3;
    c.batch_size = 4;
    c.activation_epoch = 2;
    c.seed = 5;
    c.mode = TrainMode::D;
    const auto d = train(c, data, gnn);
    c.mode = TrainMode::DC;
    const auto dc = train(c, data, gnn);
    REQUIRE(d.history.size() == 3);
    for (int e = 0; e < 2; ++e) {
        CHECK(d.history[e].train.total == dc.history[e].train.total);
        CHECK(d.history[e].val.total == dc.history[e].val.total);
        CHECK(!dc.history[e].train.contact_evaluated);
    }
    CHECK(dc.history[2].train.contact_evaluated);
    CHECK(dc.w_c > 0.0);
}

TEST_CASE("training reduces the loss on a small dataset") {
    const auto data = *generate(membrane_spec(10, 3, 6)).dataset;
    TrainConfig c;
    c.epochs = 40;
    c.batch_size = 8;
    c.schedule = {{0, 3e-3}};
    c.seed = 1;
    int calls = 0;
    const auto r = train(c, data, GnnConfig::tiny(2), {[&](const EpochRecord&, const GnnParams&) { ++calls; }});
    CHECK(calls == 40);
    CHECK(r.history.back().train.total < r.history.front().train.total);
    for (const auto& h : r.history) CHECK(std::isfinite(h.train.total));
}

TEST_CASE("rollout of the exact accelerations has zero error") {
    const auto data = *generate(membrane_spec(10, 4, 8)).dataset;
    // The predictor looks up the dataset target by time and body of the
    // simulation currently being evaluated; every simulation is rolled out
    // on its own.
    for (int m : {0, 4}) {
        const Simulation& sim = data.sims[m];
        const Predictor exact = [&](const GraphSample& g) {
            for (const auto& s : sim.steps)
                if (s.t == g.t()) return s.targets;
            throw Error("lookup", "no step at this time");
        };
        for (RolloutMode mode : {RolloutMode::TeacherForced, RolloutMode::Self}) {
            RolloutOptions o;
            o.mode = mode;
            const auto sm = rollout_simulation(exact, data, m, o);
            CHECK(sm.graphs.size() == sim.steps.size() - 1);
            for (const auto& g : sm.graphs) {
                CHECK(g.position_loss < 1e-12);
                CHECK(g.contact_loss == 0.0);
                CHECK(g.errors.max < 1e-12);
            }
        }
    }
}

TEST_CASE("self rollout accumulates error and the running error is monotone") {
    const auto data = *generate(membrane_spec(10, 4, 10)).dataset;
    const auto params = init_params(GnnConfig::tiny(2), 3);
    const Predictor net = [&](const GraphSample& g) { return predict_accelerations(g, params); };
    const std::vector<int> sims = {0, 1, 2};
    for (RolloutMode mode : {RolloutMode::TeacherForced, RolloutMode::Self}) {
        RolloutOptions o;
        o.mode = mode;
        const auto rep = rollout(net, data, sims, o, "test");
        CHECK(rep.sims.size() == 3);
        for (const auto& s : rep.sims)
            for (std::size_t k = 1; k < s.accumulated.xi_mean.size(); ++k)
                CHECK(s.accumulated.xi_mean[k] >= s.accumulated.xi_mean[k - 1]);
        CHECK(rep.per_step.steps == data.sims[0].steps.size() - 1);
        const Json j = to_json(rep);
        CHECK(j.at("simulations").size() == 3);
        CHECK(graphs_csv(rep).find("e_median") != std::string::npos);
    }
}

TEST_CASE("bench report has the table layout") {
    SceneSpec s;
    s.resolution = 4;
    BenchOptions o;
    o.reps = 3;
    o.steps = 2;
    o.networks = {"tiny"};
    o.reference_time = 10.0;
    const auto r = bench(generate(s).scene, o);
    REQUIRE(r.networks.size() == 1);
    CHECK(r.networks[0].per_simulation.samples.size() == 3);
    CHECK(r.networks[0].per_simulation.min <= r.networks[0].per_simulation.median);
    CHECK(r.networks[0].per_simulation.median <= r.networks[0].per_simulation.max);
    CHECK(r.networks[0].speedup.has_value());
    const std::string csv = table_csv(r);
    CHECK(csv.rfind("problem,network,fem_time_s,inference_time_s,speedup", 0) == 0);
    CHECK(table_text(r).find("Inference Time [s]") != std::string::npos);
    CHECK(to_json(r).at("machine").contains("cpu"));
    o.reps = 2;
    CHECK_THROWS_AS(bench(generate(s).scene, o), Error);
}
