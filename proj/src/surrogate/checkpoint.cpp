#include "contactgnn/surrogate.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace contactgnn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'G', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_json(const GnnConfig& c) {
    return {{"embed_dim", c.embed_dim},     {"width", c.width},
            {"k", c.k},                     {"depth_enc_x", c.depth_enc_x},
            {"depth_enc_em", c.depth_enc_em}, {"depth_enc_ew", c.depth_enc_ew},
            {"depth_enc_g", c.depth_enc_g}, {"depth_phi_m", c.depth_phi_m},
            {"depth_phi_w", c.depth_phi_w}, {"depth_gamma", c.depth_gamma},
            {"depth_dec", c.depth_dec},     {"n_globals", c.n_globals},
            {"decode", c.decode == DecodeMode::Dot ? "dot" : "elementwise"}};
}

GnnConfig parse_config(const nlohmann::json& j) {
    GnnConfig c;
    auto get = [&j](const char* key, int& out) {
        if (j.contains(key)) out = j.at(key).get<int>();
    };
    if (j.contains("preset")) {
        const std::string p = j.at("preset").get<std::string>();
        const int ng = j.value("n_globals", 0);
        if (p == "tiny")
            c = GnnConfig::tiny(ng);
        else if (p == "valve_small")
            c = GnnConfig::valve_small();
        else if (p == "valve_large")
            c = GnnConfig::valve_large();
        else if (p == "varying_geometry_small")
            c = GnnConfig::varying_geometry_small();
        else if (p == "varying_geometry_large")
            c = GnnConfig::varying_geometry_large();
        else
            throw Error("bad_config", "unknown preset '" + p + "'");
    }
    get("embed_dim", c.embed_dim);
    get("width", c.width);
    get("k", c.k);
    get("depth_enc_x", c.depth_enc_x);
    get("depth_enc_em", c.depth_enc_em);
    get("depth_enc_ew", c.depth_enc_ew);
    get("depth_enc_g", c.depth_enc_g);
    get("depth_phi_m", c.depth_phi_m);
    get("depth_phi_w", c.depth_phi_w);
    get("depth_gamma", c.depth_gamma);
    get("depth_dec", c.depth_dec);
    get("n_globals", c.n_globals);
    if (j.contains("decode")) {
        const std::string d = j.at("decode").get<std::string>();
        if (d == "dot")
            c.decode = DecodeMode::Dot;
        else if (d == "elementwise")
            c.decode = DecodeMode::Elementwise;
        else
            throw Error("bad_config", "decode must be 'dot' or 'elementwise'");
    }
    c.validate();
    return c;
}

}  // namespace

std::string config_to_json(const GnnConfig& config) { return config_json(config).dump(2); }

GnnConfig config_from_json(const std::string& text) {
    try {
        return parse_config(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad_config", std::string("network config: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    nlohmann::json header = {{"config", config_json(ck.params.config)}, {"seed", ck.seed}, {"epoch", ck.epoch}};
    const std::string h = header.dump();
    const std::vector<double> values = ck.params.flatten();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    const std::uint32_t version = kVersion;
    const auto hlen = static_cast<std::uint32_t>(h.size());
    const auto count = static_cast<std::uint64_t>(values.size());
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw Error("io", "failed writing " + path.string());

    header["parameters"] = ck.params.param_count();
    std::ofstream side(path.string() + ".json");
    side << header.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot read " + path.string());
    char magic[8];
    std::uint32_t version = 0, hlen = 0;
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw Error("bad_checkpoint", path.string() + " is not a checkpoint file");
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (version != kVersion) throw Error("bad_checkpoint", "unsupported checkpoint version " + std::to_string(version));
    in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    std::string h(hlen, '\0');
    in.read(h.data(), hlen);
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    if (!in) throw Error("bad_checkpoint", path.string() + " is truncated");

    Checkpoint ck;
    try {
        const auto header = nlohmann::json::parse(h);
        ck.params = GnnParams::zeros(parse_config(header.at("config")));
        ck.seed = header.at("seed").get<std::uint64_t>();
        ck.epoch = header.value("epoch", -1);
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad_checkpoint", std::string("checkpoint header: ") + e.what());
    }
    if (count != ck.params.param_count())
        throw Error("bad_checkpoint", "parameter count " + std::to_string(count) + " does not match the config");
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw Error("bad_checkpoint", path.string() + " is truncated");
    ck.params.assign(values);
    return ck;
}

}  // namespace contactgnn
