#include "contactgnn/harness/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace contactgnn::harness {

void TrainConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error("bad_config", m); };
    if (epochs < 1) bad("epochs must be positive");
    if (batch_size < 1) bad("batch_size must be positive");
    if (schedule.empty() || schedule.front().first != 0) bad("schedule must start at epoch 0");
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k].second > 0.0)) bad("learning rates must be positive");
        if (k && schedule[k].first <= schedule[k - 1].first) bad("schedule epochs must be strictly increasing");
    }
    if (!(clip > 0.0)) bad("clip threshold must be positive");
    if (!(weight_decay >= 0.0)) bad("weight_decay must be non-negative");
    if (!(adam_eps > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        bad("invalid Adam constants");
    if (mode == TrainMode::DC && !(activation_epoch >= 0 && activation_epoch < epochs))
        bad("activation_epoch must lie in [0, epochs) in DC mode");
    if (w_c && !(*w_c >= 0.0)) bad("w_c must be non-negative");
    if (!(contact_floor > 0.0)) bad("contact_floor must be positive");
    if (checkpoint_every < 0) bad("checkpoint_every must be non-negative");
}

double TrainConfig::rate(int epoch) const {
    double r = schedule.front().second;
    for (const auto& [e, v] : schedule)
        if (e <= epoch) r = v;
    return r;
}

TrainConfig train_config_from_json(const Json& j) {
    const std::string w = "train config";
    TrainConfig c;
    auto opt = [&](const char* key, auto& out) {
        if (j.contains(key)) out = field<std::decay_t<decltype(out)>>(j, key, w);
    };
    opt("epochs", c.epochs);
    opt("batch_size", c.batch_size);
    opt("weight_decay", c.weight_decay);
    opt("clip", c.clip);
    opt("beta1", c.beta1);
    opt("beta2", c.beta2);
    opt("adam_eps", c.adam_eps);
    opt("activation_epoch", c.activation_epoch);
    opt("contact_floor", c.contact_floor);
    opt("seed", c.seed);
    opt("checkpoint_every", c.checkpoint_every);
    if (j.contains("schedule")) c.schedule = field<std::vector<std::pair<int, double>>>(j, "schedule", w);
    if (j.contains("mode")) {
        const auto m = field<std::string>(j, "mode", w);
        if (m == "D") c.mode = TrainMode::D;
        else if (m == "DC") c.mode = TrainMode::DC;
        else throw Error("bad_config", w + ": mode must be D or DC");
    }
    if (j.contains("w_c") && !(j["w_c"].is_string() && j["w_c"] == "auto")) c.w_c = field<double>(j, "w_c", w);
    c.validate();
    return c;
}

Json to_json(const TrainConfig& c) {
    Json j = {{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"schedule", c.schedule},
              {"weight_decay", c.weight_decay},
              {"clip", c.clip},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"mode", c.mode == TrainMode::D ? "D" : "DC"},
              {"activation_epoch", c.activation_epoch},
              {"contact_floor", c.contact_floor},
              {"seed", c.seed},
              {"checkpoint_every", c.checkpoint_every}};
    if (c.w_c) j["w_c"] = *c.w_c;
    else j["w_c"] = "auto";
    return j;
}

GraphSet assemble(const Dataset& data, std::span<const int> sims) {
    GraphSet set;
    for (int s : sims) {
        auto g = data.graphs(s);
        for (auto& x : g) {
            set.graphs.push_back(std::move(x));
            set.sim.push_back(s);
        }
    }
    return set;
}

namespace {

// Per-graph sums; reduced in graph order.
struct Sums {
    double sq = 0.0;       // sum |y_hat - y|^2
    double abs_dr = 0.0;   // sum |dr_hat - dr|_1 / l_c
    double contact = 0.0;  // sum |r| / l_c
    std::size_t nodes = 0;
};

Sums graph_sums(const GraphSample& s, const Points& y_hat, const ccd::ContactTopology& topo, double l_c,
                bool contact) {
    Sums out;
    const double dt = s.dt();
    out.nodes = s.node_count();
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
        const Vec3 d = y_hat[i] - (*s.targets)[i];
        out.sq += d.squaredNorm();
        out.abs_dr += (0.5 * dt * dt * d).cwiseAbs().sum() / l_c;
    }
    if (contact && dt > 0.0) {
        const auto field = ccd::detect_contacts(step_trajectory(s.nodes, y_hat, dt), topo);
        for (double r : field.response) out.contact += std::abs(r / l_c);
    }
    return out;
}

LossStats reduce(const std::vector<Sums>& sums, std::size_t n_tri, const LossWeights& w, bool contact) {
    double sq = 0.0, abs_dr = 0.0, c = 0.0;
    std::size_t nodes = 0;
    for (const auto& s : sums) {
        sq += s.sq;
        abs_dr += s.abs_dr;
        c += s.contact;
        nodes += s.nodes;
    }
    LossStats st;
    if (nodes == 0) return st;
    st.dynamic = sq / (3.0 * nodes);
    st.position = abs_dr / (3.0 * nodes);
    st.contact_evaluated = contact;
    if (contact && n_tri) st.contact = c / static_cast<double>(n_tri * sums.size());
    st.total = w.w_d * st.dynamic + (contact ? w.w_c * st.contact : 0.0);
    return st;
}

}  // namespace

LossStats evaluate(const GnnParams& params, const GraphSet& set, const ccd::ContactTopology& topo, double l_c,
                   const LossWeights& weights, bool contact) {
    std::vector<Sums> sums(set.graphs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < set.graphs.size(); ++k) {
        const GraphSample& s = set.graphs[k];
        sums[k] = graph_sums(s, predict_accelerations(s, params), topo, l_c, contact);
    }
    return reduce(sums, topo.triangles.size(), weights, contact);
}

namespace {

struct Adam {
    std::vector<double> m, v;
    long step = 0;

    void update(std::vector<double>& theta, const std::vector<double>& g, double lr, const TrainConfig& c) {
        if (m.empty()) {
            m.assign(theta.size(), 0.0);
            v.assign(theta.size(), 0.0);
        }
        ++step;
        const double b1t = 1.0 - std::pow(c.beta1, static_cast<double>(step));
        const double b2t = 1.0 - std::pow(c.beta2, static_cast<double>(step));
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
            const double mh = m[k] / b1t, vh = v[k] / b2t;
            theta[k] -= lr * (mh / (std::sqrt(vh) + c.adam_eps) + c.weight_decay * theta[k]);
        }
    }
};

void add(LossStats& acc, const LossStats& x) {
    acc.total += x.total;
    acc.dynamic += x.dynamic;
    acc.contact += x.contact;
    acc.position += x.position;
    acc.contact_evaluated = acc.contact_evaluated || x.contact_evaluated;
}

LossStats scaled(LossStats s, double f) {
    s.total *= f;
    s.dynamic *= f;
    s.contact *= f;
    s.position *= f;
    return s;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& data, const GnnConfig& gnn, const TrainHooks& hooks) {
    config.validate();
    gnn.validate();
    if (gnn.n_globals != data.meta.n_globals)
        throw Error("shape_mismatch", "network expects " + std::to_string(gnn.n_globals) +
                                          " globals, dataset has " + std::to_string(data.meta.n_globals));
    if (data.meta.split.train.empty()) throw Error("bad_split", "training split is empty");
    if (data.meta.split.val.empty()) throw Error("bad_split", "validation split is empty");

    const GraphSet train_set = assemble(data, data.meta.split.train);
    const GraphSet val_set = assemble(data, data.meta.split.val);
    const ccd::ContactTopology topo = data.topology();
    const double l_c = data.meta.length_scale;

    TrainResult result;
    result.params = init_params(gnn, config.seed);
    std::vector<double> theta = result.params.flatten();
    Adam adam;
    double w_c = 0.0;

    std::vector<int> order(train_set.graphs.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const bool contact = config.contact_active(epoch);
        if (contact && epoch == config.activation_epoch) {
            if (config.w_c) {
                w_c = *config.w_c;
            } else {
                const LossStats s = evaluate(result.params, train_set, topo, l_c, {1.0, 1.0}, true);
                w_c = s.dynamic / std::max(s.contact, config.contact_floor);
            }
        }
        const LossWeights weights{1.0, contact ? w_c : 0.0};
        GradientOptions opt;
        opt.weights = weights;
        opt.contact = contact;
        opt.length_scale = l_c;

        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(config.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1)));
        std::shuffle(order.begin(), order.end(), rng);

        const double lr = config.rate(epoch);
        LossStats acc;
        int n_batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(config.batch_size));
            std::vector<BatchItem> batch;
            for (std::size_t k = b0; k < b1; ++k) batch.push_back({&train_set.graphs[order[k]], &topo});

            GradientResult g;
            try {
                g = loss_gradient(result.params, batch, opt, n_batches);
            } catch (const Error& e) {
                throw Error(e.code(), "epoch " + std::to_string(epoch) + ", " + e.what());
            }
            // Position loss of the same batch before the update.
            std::vector<Sums> sums(batch.size());
#pragma omp parallel for schedule(dynamic)
            for (std::size_t k = 0; k < batch.size(); ++k)
                sums[k] = graph_sums(*batch[k].sample, predict_accelerations(*batch[k].sample, result.params), topo,
                                     l_c, false);
            LossStats st = reduce(sums, topo.triangles.size(), weights, false);
            st.total = g.loss.total;
            st.dynamic = g.loss.dynamic;
            st.contact = g.loss.contact;
            st.contact_evaluated = contact;
            add(acc, st);
            ++n_batches;

            std::vector<double> grad = g.grad.flatten();
            double norm = 0.0;
            for (double x : grad) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > config.clip)
                for (double& x : grad) x *= config.clip / norm;
            adam.update(theta, grad, lr, config);
            result.params.assign(theta);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.rate = lr;
        rec.w_c = weights.w_c;
        rec.train = scaled(acc, 1.0 / n_batches);
        rec.train.contact_evaluated = contact;
        rec.val = evaluate(result.params, val_set, topo, l_c, weights, contact);
        result.history.push_back(rec);
        if (hooks.on_epoch) hooks.on_epoch(rec, result.params);
    }
    result.w_c = w_c;
    return result;
}

Json to_json(const EpochRecord& r) {
    auto stats = [](const LossStats& s) {
        Json j = {{"L", s.total}, {"L_d", s.dynamic}, {"L_p", s.position}};
        j["L_c"] = s.contact_evaluated ? Json(s.contact) : Json(nullptr);
        return j;
    };
    return {{"epoch", r.epoch}, {"rate", r.rate}, {"w_c", r.w_c}, {"train", stats(r.train)}, {"val", stats(r.val)}};
}

std::string history_csv(const std::vector<EpochRecord>& history) {
    Csv csv({"epoch", "rate", "w_c", "train_L", "train_L_d", "train_L_c", "train_L_p", "val_L", "val_L_d",
             "val_L_c", "val_L_p"});
    for (const auto& r : history) {
        auto c = [](const LossStats& s) { return s.contact_evaluated ? fmt(s.contact) : std::string(); };
        csv.row({std::to_string(r.epoch), fmt(r.rate), fmt(r.w_c), fmt(r.train.total), fmt(r.train.dynamic),
                 c(r.train), fmt(r.train.position), fmt(r.val.total), fmt(r.val.dynamic), c(r.val),
                 fmt(r.val.position)});
    }
    return csv.str();
}

}  // namespace contactgnn::harness
