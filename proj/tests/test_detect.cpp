#include <doctest.h>

#include "contactgnn/ccd/detect.hpp"
#include "contactgnn/ccd/static_check.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace contactgnn;
using namespace contactgnn::ccd;

namespace {

// One static triangle in z = 0 and one falling triangle above it.
struct TwoTriangles {
    Trajectory traj;
    ContactTopology topo;
};

TwoTriangles falling(double drop, double x_offset = 0.2) {
    TwoTriangles s;
    s.traj.r0 = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                 Vec3(x_offset, 0.2, 0.5), Vec3(x_offset + 0.6, 0.2, 0.5), Vec3(x_offset, 0.8, 0.5)};
    s.traj.v.assign(6, Vec3::Zero());
    for (int i = 3; i < 6; ++i) s.traj.v[i] = Vec3(0, 0, -drop);
    s.traj.dt = 1.0;
    const std::vector<Tri> a = {{0, 1, 2}}, b = {{0, 1, 2}};
    s.topo = ContactTopology::two_body(a, 3, b);
    return s;
}

// Two random triangle soups that start apart and move towards each other.
TwoTriangles random_scene(std::mt19937_64& rng, int n_tri) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TwoTriangles s;
    std::vector<Tri> a, b;
    for (int side = 0; side < 2; ++side) {
        const double z0 = side == 0 ? -0.6 : 0.6;
        const Vec3 vel = Vec3(0.3 * u(rng), 0.3 * u(rng), side == 0 ? 0.7 : -0.7);
        for (int t = 0; t < n_tri; ++t) {
            const Vec3 c(u(rng), u(rng), z0 + 0.2 * u(rng));
            Tri tri;
            for (int k = 0; k < 3; ++k) {
                tri[k] = static_cast<int>(s.traj.r0.size()) - (side == 0 ? 0 : 3 * n_tri);
                s.traj.r0.push_back(c + 0.35 * Vec3(u(rng), u(rng), 0.3 * u(rng)));
                s.traj.v.push_back(vel + 0.1 * Vec3(u(rng), u(rng), u(rng)));
            }
            (side == 0 ? a : b).push_back(tri);
        }
    }
    s.traj.dt = 1.0;
    s.topo = ContactTopology::two_body(a, 3 * n_tri, b);
    return s;
}

bool starts_apart(const TwoTriangles& s) {
    return static_check_at(s.traj, s.topo, 0.0).empty();
}

}  // namespace

TEST_CASE("swept AABB broad phase") {
    auto s = falling(1.0);
    CHECK(swept_aabb_broadphase(s.traj, s.topo, 0.0) == std::vector<CandidatePair>{{0, 1}});
    s = falling(0.1);  // stays above: boxes never meet
    CHECK(swept_aabb_broadphase(s.traj, s.topo, 1e-9).empty());
    s = falling(0.5);  // touches z = 0 at the very end
    CHECK(swept_aabb_broadphase(s.traj, s.topo, 0.0).size() == 1);

    SUBCASE("sweep-and-prune matches the all-pairs reference") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 10; ++trial) {
            const auto r = random_scene(rng, 30);
            CHECK(swept_aabb_broadphase(r.traj, r.topo, 1e-9) ==
                  swept_aabb_broadphase_serial(r.traj, r.topo, 1e-9));
        }
    }
}

TEST_CASE("falling triangle fires vertex-face and edge-edge sub-tests") {
    const auto s = falling(1.0);
    const ContactField f = detect_contacts(s.traj, s.topo);
    REQUIRE(f.nnz() == 2);
    CHECK(f.triangle == std::vector<int>{0, 1});
    // Vertices of B reach z = 0 at s = 0.5 and end 0.5 below the face.
    bool vf_seen = false;
    for (const auto& e : f.events) {
        if (e.kind == SubTestKind::VF && e.index >= 3) {
            vf_seen = true;
            CHECK(e.t_star == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(e.response == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
    CHECK(vf_seen);
    CHECK(f.at(0) == f.at(1));
    CHECK(f.at(0) >= 0.5 - 1e-12);
    CHECK(f.at(5) == 0.0);
}

TEST_CASE("adjacent triangles sharing a node are never paired") {
    Trajectory t;
    t.r0 = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0.5)};
    t.v = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3(0, 0, -1)};
    t.dt = 1.0;
    const auto topo = ContactTopology::single({{0, 1, 2}, {1, 3, 2}});
    CHECK_FALSE(topo.eligible(0, 1));
    CHECK(swept_aabb_broadphase(t, topo, 1e-9).empty());
    CHECK(detect_contacts(t, topo).nnz() == 0);
}

TEST_CASE("single-body topology detects self contact of disjoint triangles") {
    auto s = falling(1.0);
    const auto topo = ContactTopology::single(s.topo.triangles);
    CHECK(detect_contacts(s.traj, topo).nnz() == 2);
}

TEST_CASE("non-finite input is rejected with the node index") {
    auto s = falling(1.0);
    s.traj.v[4] = Vec3(0, std::numeric_limits<double>::quiet_NaN(), 0);
    try {
        detect_contacts(s.traj, s.topo);
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.code() == "non_finite");
        CHECK(std::string(e.what()).find("node 4") != std::string::npos);
    }
    s = falling(1.0);
    s.traj.dt = 0.0;
    CHECK_THROWS_AS(detect_contacts(s.traj, s.topo), Error);
}

TEST_CASE("tunneling: end-time static check misses what CCD finds") {
    auto s = falling(2.0);  // passes fully through within the step
    CHECK(static_end_time_check(s.traj, s.topo).empty());
    CHECK(detect_contacts(s.traj, s.topo).nnz() == 2);
}

TEST_CASE("time reversal flags the same pairs") {
    std::mt19937_64 rng(23);
    int compared = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = random_scene(rng, 15);
        const auto fwd = detect_contacts(s.traj, s.topo);
        const auto bwd = detect_contacts(s.traj.reversed(), s.topo);
        std::vector<CandidatePair> pf, pb;
        for (const auto& e : fwd.events) pf.push_back(e.pair);
        for (const auto& e : bwd.events) pb.push_back(e.pair);
        std::sort(pf.begin(), pf.end());
        std::sort(pb.begin(), pb.end());
        pf.erase(std::unique(pf.begin(), pf.end()), pf.end());
        pb.erase(std::unique(pb.begin(), pb.end()), pb.end());
        CHECK(pf == pb);
        compared += static_cast<int>(pf.size());
    }
    CHECK(compared > 0);
}

TEST_CASE("parallel and serial pipelines are bit-identical") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = random_scene(rng, 40);
        DetectOptions opt;
        opt.chunk_size = 7;
        const auto par = detect_contacts(s.traj, s.topo, opt);
        const auto ser = detect_contacts_serial(s.traj, s.topo, opt);
        CHECK(par.triangle == ser.triangle);
        CHECK(par.response == ser.response);
        CHECK(par.events == ser.events);
        CHECK(detect_contacts(s.traj, s.topo, opt).events == par.events);
    }
}

TEST_CASE("detection agrees with dense-time sampling away from grazing contact") {
    std::mt19937_64 rng(31);
    int flagged = 0, compared = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const auto s = random_scene(rng, 6);
        if (!starts_apart(s)) continue;
        const auto o = oracle::oracle_detect(s.traj, s.topo, 2001, true);
        const auto f = detect_contacts(s.traj, s.topo);
        std::vector<CandidatePair> got;
        for (const auto& e : f.events) got.push_back(e.pair);
        std::sort(got.begin(), got.end());
        got.erase(std::unique(got.begin(), got.end()), got.end());
        for (std::size_t i = 0; i < o.all_pairs.size(); ++i) {
            if (std::abs(o.margin[i]) < 1e-3) continue;  // grazing: sampling cannot decide
            const bool want = o.margin[i] > 0;
            const bool have = std::binary_search(got.begin(), got.end(), o.all_pairs[i]);
            CHECK(want == have);
            flagged += want;
            ++compared;
        }
    }
    CHECK(compared > 100);
    CHECK(flagged > 0);
}

TEST_CASE("subtest_nodes follows the documented numbering") {
    const auto topo = ContactTopology::two_body(std::vector<Tri>{{0, 1, 2}}, 3, std::vector<Tri>{{0, 1, 2}});
    CHECK(subtest_nodes(topo, {0, 1}, SubTestKind::VF, 0) == std::array<int, 4>{3, 4, 5, 0});
    CHECK(subtest_nodes(topo, {0, 1}, SubTestKind::VF, 4) == std::array<int, 4>{0, 1, 2, 4});
    CHECK(subtest_nodes(topo, {0, 1}, SubTestKind::EE, 5) == std::array<int, 4>{1, 2, 5, 3});
}
