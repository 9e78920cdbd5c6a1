#include "contactgnn/harness/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace contactgnn::harness {

std::string fmt(double x) {
    if (!std::isfinite(x)) throw Error("non_finite", "cannot serialize a non-finite number");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void put(std::string& out, const Json& j, int indent, int level) {
    auto newline = [&](int lv) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * lv), ' ');
    };
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                newline(level + 1);
                out += Json(it.key()).dump();
                out += indent < 0 ? ":" : ": ";
                put(out, it.value(), indent, level + 1);
            }
            newline(level);
            out += '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            bool flat = true;
            for (const auto& v : j) flat = flat && !v.is_structured();
            out += '[';
            for (std::size_t k = 0; k < j.size(); ++k) {
                if (k) out += ",";
                if (!flat) newline(level + 1);
                else if (k && indent >= 0) out += ' ';
                put(out, j[k], indent, level + 1);
            }
            if (!flat) newline(level);
            out += ']';
            return;
        }
        case Json::value_t::number_float:
            out += fmt(j.get<double>());
            return;
        default:
            out += j.dump();
    }
}

}  // namespace

std::string dump(const Json& j, int indent) {
    std::string out;
    put(out, j, indent, 0);
    return out;
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return Json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw Error("parse", path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << text;
    if (!out) throw Error("io", "failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, dump(j) + "\n"); }

Json to_json(const Points& p) {
    Json a = Json::array();
    for (const auto& v : p) a.push_back({v.x(), v.y(), v.z()});
    return a;
}

Points points_from(const Json& j, const std::string& where) {
    if (!j.is_array()) throw Error("schema", where + ": expected an array of 3-vectors");
    Points p;
    p.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& v = j[i];
        if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
            throw Error("schema", where + "[" + std::to_string(i) + "]: expected 3 numbers");
        p.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    return p;
}

std::vector<Tri> triangles_from(const Json& j, const std::string& where) {
    if (!j.is_array()) throw Error("schema", where + ": expected an array of index triples");
    std::vector<Tri> t;
    t.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& v = j[i];
        if (!v.is_array() || v.size() != 3 || !v[0].is_number_integer() || !v[1].is_number_integer() ||
            !v[2].is_number_integer())
            throw Error("schema", where + "[" + std::to_string(i) + "]: expected 3 integers");
        t.push_back({v[0].get<int>(), v[1].get<int>(), v[2].get<int>()});
    }
    return t;
}

Csv::Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }

Csv& Csv::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error("shape_mismatch", "csv row width differs from header");
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out_ += ',';
        out_ += cells[k];
    }
    out_ += '\n';
    return *this;
}

}  // namespace contactgnn::harness
