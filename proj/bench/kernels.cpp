#include "contactgnn/ccd/detect.hpp"
#include "contactgnn/mesh_graph.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace contactgnn;

namespace {

Points cloud(int n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Points r(n);
    for (auto& p : r) p = Vec3(u(rng), u(rng), u(rng));
    return r;
}

ccd::Trajectory sheets(int n, std::vector<Tri>& tris) {
    ccd::Trajectory t;
    tris.clear();
    const double h = 1.0 / n;
    for (int side = 0; side < 2; ++side) {
        const int base = static_cast<int>(t.r0.size());
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) {
                const double z = side == 0 ? -0.01 : 0.01;
                t.r0.emplace_back(i * h + side * 0.3 * h, j * h, z + 0.003 * std::sin(7.0 * i * h + 3.0 * j * h));
                t.v.emplace_back(0.0, 0.0, side == 0 ? 0.5 : -0.5);
            }
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const int a = base + j * (n + 1) + i;
                tris.push_back({a, a + 1, a + n + 2});
                tris.push_back({a, a + n + 2, a + n + 1});
            }
    }
    t.dt = 0.025;
    return t;
}

void BM_world_edges_serial(benchmark::State& st) {
    const Points r = cloud(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(build_world_edges_serial(r, 0.1));
}

void BM_world_edges_omp(benchmark::State& st) {
    const Points r = cloud(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(build_world_edges(r, 0.1));
}

void BM_detect_serial(benchmark::State& st) {
    std::vector<Tri> tris;
    const auto t = sheets(static_cast<int>(st.range(0)), tris);
    const auto topo = ccd::ContactTopology::single(tris);
    for (auto _ : st) benchmark::DoNotOptimize(ccd::detect_contacts_serial(t, topo));
}

void BM_detect_omp(benchmark::State& st) {
    std::vector<Tri> tris;
    const auto t = sheets(static_cast<int>(st.range(0)), tris);
    const auto topo = ccd::ContactTopology::single(tris);
    for (auto _ : st) benchmark::DoNotOptimize(ccd::detect_contacts(t, topo));
}

}  // namespace

BENCHMARK(BM_world_edges_serial)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_world_edges_omp)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_detect_serial)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_detect_omp)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
