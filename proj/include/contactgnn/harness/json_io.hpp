#pragma once

// JSON and CSV plumbing shared by the harness and the CLI. Floating-point
// values are written with 17 significant digits so every double round-trips.

#include "contactgnn/common.hpp"

#include <json.hpp>

#include <filesystem>

namespace contactgnn::harness {

using Json = nlohmann::json;

/// Serializes with `indent` spaces (negative: compact).
std::string dump(const Json& j, int indent = 2);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Formats one double with 17 significant digits.
std::string fmt(double x);

Json to_json(const Points& p);
/// `where` names the document and field for error messages.
Points points_from(const Json& j, const std::string& where);
std::vector<Tri> triangles_from(const Json& j, const std::string& where);

/// Typed field access that reports the field path on failure.
template <class T>
T field(const Json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw Error("schema", where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error("schema", where + ": field '" + key + "' has the wrong type");
    }
}

/// Minimal CSV writer: header then rows, values joined with commas.
class Csv {
public:
    explicit Csv(std::vector<std::string> header);
    Csv& row(const std::vector<std::string>& cells);
    std::string str() const { return out_; }

private:
    std::size_t width_;
    std::string out_;
};

}  // namespace contactgnn::harness
