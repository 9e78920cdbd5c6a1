#include <doctest.h>

#include "contactgnn/ccd/cubic.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <random>

using namespace contactgnn;
using namespace contactgnn::ccd;

TEST_CASE("coplanarity_cubic: static coplanar points give the zero polynomial") {
    const std::array<Vec3, 4> p = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.3, 0.3, 0)};
    const std::array<Vec3, 4> w = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    const Cubic c = coplanarity_cubic(p, w);
    CHECK(c.c3 == 0.0);
    CHECK(c.c2 == 0.0);
    CHECK(c.c1 == 0.0);
    CHECK(c.c0 == 0.0);
    CHECK(cubic_roots_in_interval(c, 1.0).always);
}

TEST_CASE("coplanarity_cubic: vertex crossing a static face") {
    const std::array<Vec3, 4> p = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.2, 0.2, 1)};
    const std::array<Vec3, 4> w = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3(0, 0, -2)};
    const Cubic c = coplanarity_cubic(p, w);
    CHECK(c.c3 == 0.0);
    CHECK(c.c2 == 0.0);
    CHECK(c.c1 == doctest::Approx(-2.0 * c.c0));
    CHECK(c.c0 != 0.0);
    const Roots r = cubic_roots_in_interval(c, 1.0);
    REQUIRE(r.count == 1);
    CHECK(r.t[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("coplanarity_cubic matches the direct determinant") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<Vec3, 4> p, w;
        for (int c = 0; c < 4; ++c) {
            p[c] = Vec3(u(rng), u(rng), u(rng));
            w[c] = Vec3(u(rng), u(rng), u(rng)) * 3.0;
        }
        const Cubic c = coplanarity_cubic(p, w);
        for (int k = 0; k < 10; ++k) {
            const double s = k / 9.0;
            const double want = oracle::coplanarity_det(p, w, s);
            CHECK(std::abs(c(s) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST_CASE("cubic_roots_in_interval: worked examples") {
    SUBCASE("s^3 - s on [0, 1]") {
        const Roots r = cubic_roots_in_interval({1, 0, -1, 0}, 1.0);
        REQUIRE(r.count == 2);
        CHECK(r.t[0] == 0.0);
        CHECK(r.t[1] == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("double root reported once") {
        const auto k = oracle::cubic_from_roots(1.0, 0.25, 0.25, 0.75);
        const Roots r = cubic_roots_in_interval({k[0], k[1], k[2], k[3]}, 1.0);
        REQUIRE(r.count == 2);
        CHECK(r.t[0] == doctest::Approx(0.25).epsilon(1e-7));
        CHECK(r.t[1] == doctest::Approx(0.75).epsilon(1e-14));
    }
    SUBCASE("no roots in the interval") {
        const auto k = oracle::cubic_from_roots(2.0, -1.0, 1.5, 3.0);
        CHECK(cubic_roots_in_interval({k[0], k[1], k[2], k[3]}, 1.0).empty());
    }
    SUBCASE("demotion to quadratic and linear") {
        Roots r = cubic_roots_in_interval({1e-30, 1.0, -1.0, 0.21}, 1.0);  // roots 0.3, 0.7
        REQUIRE(r.count == 2);
        CHECK(r.t[0] == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(r.t[1] == doctest::Approx(0.7).epsilon(1e-12));
        r = cubic_roots_in_interval({0, 0, 4.0, -1.0}, 1.0);
        REQUIRE(r.count == 1);
        CHECK(r.t[0] == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("constant polynomials") {
        CHECK(cubic_roots_in_interval({0, 0, 0, 0}, 1.0).always);
        const Roots r = cubic_roots_in_interval({0, 0, 0, 3.0}, 1.0);
        CHECK_FALSE(r.always);
        CHECK(r.empty());
    }
    SUBCASE("closed interval endpoints") {
        const auto k = oracle::cubic_from_roots(1.0, 0.0, 0.025, 5.0);
        const Roots r = cubic_roots_in_interval({k[0], k[1], k[2], k[3]}, 0.025);
        REQUIRE(r.count == 2);
        CHECK(r.t[0] == 0.0);
        CHECK(r.t[1] == doctest::Approx(0.025).epsilon(1e-12));
    }
    CHECK_THROWS_AS(cubic_roots_in_interval({1, 0, 0, 0}, 0.0), Error);
}

TEST_CASE("cubic_roots_in_interval: planted roots are recovered exactly once") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> where(-0.5, 1.5);
    std::uniform_real_distribution<double> lead(0.1, 10.0);
    std::bernoulli_distribution flip(0.5);
    const std::array<double, 4> dts = {1.0, 0.025, 2.84, 1.26e-2};
    const double root_tol = 1e-10;
    int recovered = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double dt = dts[trial % dts.size()];
        std::array<double, 3> planted;
        for (auto& x : planted) x = where(rng) * dt;
        const double a = (flip(rng) ? -1.0 : 1.0) * lead(rng) / (dt * dt * dt);
        const auto k = oracle::cubic_from_roots(a, planted[0], planted[1], planted[2]);
        const Cubic c{k[0], k[1], k[2], k[3]};
        const Roots r = cubic_roots_in_interval(c, dt);
        const double scale = residual_scale(c, dt);

        for (double s : r) {
            CHECK(s >= 0.0);
            CHECK(s <= dt);
            CHECK(std::abs(c(s)) <= root_tol * scale);
        }
        for (int i = 0; i < 3; ++i) {
            const double x = planted[i];
            if (x < 0.0 || x > dt) continue;
            bool isolated = true;
            for (int j = 0; j < 3; ++j)
                if (j != i && std::abs(planted[j] - x) <= 10 * root_tol * dt) isolated = false;
            if (!isolated) continue;
            double best = 1e300;
            for (double s : r) best = std::min(best, std::abs(s - x) / dt);
            CHECK(best <= 1e-9);
            ++recovered;
        }
    }
    CHECK(recovered > 1000);
}
