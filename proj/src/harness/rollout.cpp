#include "contactgnn/harness/rollout.hpp"

#include "contactgnn/surrogate.hpp"

namespace contactgnn::harness {

std::string to_string(RolloutMode m) { return m == RolloutMode::TeacherForced ? "tf" : "self"; }

RolloutMode rollout_mode_from(const std::string& name) {
    if (name == "tf") return RolloutMode::TeacherForced;
    if (name == "self") return RolloutMode::Self;
    throw Error("bad_mode", "rollout mode must be tf or self");
}

namespace {

Points positions_of(const std::vector<NodeState>& nodes) {
    Points r(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) r[i] = nodes[i].r;
    return r;
}

}  // namespace

SimulationMetrics rollout_simulation(const Predictor& predict, const Dataset& data, int sim,
                                     const RolloutOptions& options) {
    const Simulation& s = data.sims.at(sim);
    const double l_c = data.meta.length_scale;
    const ccd::ContactTopology topo = data.topology();
    const std::size_t n_tri = topo.triangles.size();

    SimulationMetrics out;
    out.id = s.id;
    auto& e = out.errors;
    std::vector<NodeState> state = s.steps.empty() ? std::vector<NodeState>{} : s.steps.front().nodes;
    if (options.keep_positions && !s.steps.empty()) out.positions.push_back(positions_of(state));

    for (std::size_t n = 0; n + 1 < s.steps.size(); ++n) {
        const StepRecord& rec = s.steps[n];
        if (options.mode == RolloutMode::TeacherForced) state = rec.nodes;
        StepRecord current = rec;
        current.nodes = state;
        GraphSample g = data.graph(current);
        const Points y_hat = predict(g);
        if (y_hat.size() != state.size()) throw Error("shape_mismatch", "predictor returned the wrong node count");
        const auto next = integrate_step(state, y_hat, rec.dt);

        Points dr(state.size()), dr_hat(state.size());
        for (std::size_t i = 0; i < state.size(); ++i) {
            dr[i] = s.steps[n + 1].nodes[i].r - rec.nodes[i].r;
            dr_hat[i] = next[i].r - state[i].r;
        }
        GraphMetrics gm;
        gm.step = static_cast<int>(n);
        gm.t = rec.t;
        gm.position_loss = position_loss(dr_hat, dr, l_c);
        e.push_back(error_set(dr_hat, dr, l_c));
        gm.errors = quartiles(e.back());
        if (options.contact && rec.dt > 0.0) {
            const auto field = ccd::detect_contacts(step_trajectory(state, y_hat, rec.dt), topo, options.detect);
            gm.contact_loss = contact_loss(field, n_tri, l_c);
            gm.contacts = field.nnz();
        }
        out.graphs.push_back(gm);
        state = next;
        if (options.keep_positions) out.positions.push_back(positions_of(state));
    }
    out.accumulated = accumulate_errors(e);
    return out;
}

MetricReport rollout(const Predictor& predict, const Dataset& data, std::span<const int> sims,
                     const RolloutOptions& options, const std::string& split) {
    MetricReport r;
    r.split = split;
    r.mode = options.mode;
    r.sims.resize(sims.size());
    // Simulations are independent; the predictor must be safe to call concurrently.
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < sims.size(); ++k) r.sims[k] = rollout_simulation(predict, data, sims[k], options);

    std::vector<double> all;
    std::size_t n_graphs = 0;
    std::vector<AccumulatedErrors> acc;
    for (const auto& s : r.sims) {
        for (const auto& g : s.graphs) {
            r.mean_position_loss += g.position_loss;
            r.mean_contact_loss += g.contact_loss;
            ++n_graphs;
        }
        for (const auto& step : s.errors) all.insert(all.end(), step.begin(), step.end());
        acc.push_back(s.accumulated);
    }
    if (n_graphs) {
        r.mean_position_loss /= static_cast<double>(n_graphs);
        r.mean_contact_loss /= static_cast<double>(n_graphs);
    }
    r.errors = quartiles(std::move(all));
    r.per_step = average_over_simulations(acc);
    return r;
}

namespace {

Json quartile_json(const Quartiles& q) {
    return {{"min", q.min}, {"q1", q.q1}, {"median", q.median}, {"q3", q.q3},
            {"max", q.max}, {"mean", q.mean}, {"count", q.count}};
}

}  // namespace

Json to_json(const MetricReport& r) {
    Json sims = Json::array();
    for (const auto& s : r.sims) {
        Json graphs = Json::array();
        for (const auto& g : s.graphs)
            graphs.push_back({{"step", g.step},
                              {"t", g.t},
                              {"L_p", g.position_loss},
                              {"L_c", g.contact_loss},
                              {"contact_triangles", g.contacts},
                              {"error", quartile_json(g.errors)}});
        sims.push_back({{"id", s.id},
                        {"e_bar", s.accumulated.e_bar},
                        {"xi_bar", s.accumulated.xi_bar},
                        {"e_mean", s.accumulated.e_mean},
                        {"xi_mean", s.accumulated.xi_mean},
                        {"graphs", graphs}});
    }
    return {{"split", r.split},
            {"mode", to_string(r.mode)},
            {"error", quartile_json(r.errors)},
            {"mean_L_p", r.mean_position_loss},
            {"mean_L_c", r.mean_contact_loss},
            {"per_step", {{"steps", r.per_step.steps}, {"e_mean", r.per_step.e_mean}, {"xi_mean", r.per_step.xi_mean}}},
            {"simulations", sims}};
}

std::string graphs_csv(const MetricReport& r) {
    Csv csv({"split", "mode", "sim", "step", "t", "L_p", "L_c", "contact_triangles", "e_min", "e_q1", "e_median",
             "e_q3", "e_max", "e_mean"});
    for (const auto& s : r.sims)
        for (const auto& g : s.graphs)
            csv.row({r.split, to_string(r.mode), s.id, std::to_string(g.step), fmt(g.t), fmt(g.position_loss),
                     fmt(g.contact_loss), std::to_string(g.contacts), fmt(g.errors.min), fmt(g.errors.q1),
                     fmt(g.errors.median), fmt(g.errors.q3), fmt(g.errors.max), fmt(g.errors.mean)});
    return csv.str();
}

std::string steps_csv(const MetricReport& r) {
    Csv csv({"step", "step_normalized", "e_mean", "xi_mean"});
    const auto& p = r.per_step;
    for (std::size_t k = 0; k < p.steps; ++k)
        csv.row({std::to_string(k), fmt(p.steps > 1 ? static_cast<double>(k) / (p.steps - 1) : 0.0),
                 fmt(p.e_mean[k]), fmt(p.xi_mean[k])});
    return csv.str();
}

}  // namespace contactgnn::harness
