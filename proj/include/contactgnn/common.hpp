#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace contactgnn {

using Vec3 = Eigen::Vector3d;
using Points = std::vector<Vec3>;
using Tri = std::array<int, 3>;
using IndexPair = std::pair<int, int>;

// Library-wide exception. `code` is a short machine-readable tag
// (e.g. "degenerate_quad", "non_finite"), `what()` carries the detail.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

inline bool all_finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace contactgnn
