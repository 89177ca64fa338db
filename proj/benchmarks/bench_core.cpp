#include <benchmark/benchmark.h>

#include <vector>

#include "rotadic/cz.hpp"
#include "rotadic/geometry.hpp"
#include "rotadic/kernel.hpp"
#include "rotadic/operator.hpp"
#include "rotadic/random.hpp"

using namespace rotadic;

namespace {

GroupDescriptor family(int64_t which) {
    switch (which) {
    case 0:
        return GroupDescriptor::parabolic_r2();
    case 1:
        return GroupDescriptor::g1(1.0);
    default:
        return GroupDescriptor::heisenberg_h2();
    }
}

std::vector<GroupPoint> points(const GroupDescriptor& g, std::size_t n, const char* stream) {
    CounterRng rng = CounterRng::stream(1, stream);
    std::vector<GroupPoint> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(random_point(g, rng, 1.0));
    }
    return out;
}

GridField bumps(const GroupDescriptor& g, const GridSpec& grid) {
    return sample(g, l2_family_member(g, 1, 0), grid) + Complex(-0.5) * sample(g, l2_family_member(g, 1, 1), grid);
}

void BM_QuasiBallContains(benchmark::State& state) {
    const GroupDescriptor g = family(state.range(0));
    const QuasiSpace space(g);
    const auto ys = points(g, 64, "bench.y");
    const auto xs = points(g, 64, "bench.x");
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(quasi_ball_contains(space, ys[i % 64], 1.0, xs[(i * 7) % 64]));
        ++i;
    }
    state.SetLabel(g.describe());
}
BENCHMARK(BM_QuasiBallContains)->Arg(0)->Arg(1)->Arg(2);

void BM_QuasiDist(benchmark::State& state) {
    const GroupDescriptor g = family(state.range(0));
    const QuasiSpace space(g);
    const auto ys = points(g, 64, "bench.y");
    const auto xs = points(g, 64, "bench.x");
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(quasi_dist(space, xs[i % 64], ys[(i * 7) % 64]));
        ++i;
    }
    state.SetLabel(g.describe());
}
BENCHMARK(BM_QuasiDist)->Arg(0)->Arg(1)->Arg(2);

void BM_KernelK(benchmark::State& state) {
    const GroupDescriptor g = family(state.range(0));
    const QuasiSpace space(g);
    const auto psi = SchwartzProfile::laplacian_gaussian(g.dim());
    const auto ys = points(g, 16, "bench.y");
    const auto xs = points(g, 16, "bench.x");
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernel_K(space, psi, xs[i % 16], ys[(i * 3) % 16]));
        ++i;
    }
    state.SetLabel(g.describe());
}
BENCHMARK(BM_KernelK)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_ApplyT(benchmark::State& state) {
    const GroupDescriptor g = GroupDescriptor::parabolic_r2();
    const GridSpec grid = GridSpec::cube(2, -8.0, 8.0, static_cast<std::size_t>(state.range(0)));
    const auto psi = SchwartzProfile::laplacian_gaussian(2);
    const GridField f = bumps(g, grid);
    OperatorOptions opt;
    opt.diagnostics = false;
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_T(g, psi, f, {}, opt).field.sup_norm());
    }
}
BENCHMARK(BM_ApplyT)->Arg(65)->Arg(129)->Unit(benchmark::kMillisecond);

void BM_MaximalFunction(benchmark::State& state) {
    const GroupDescriptor g = family(state.range(1));
    const QuasiSpace space(g);
    const GridSpec grid = GridSpec::cube(2, -4.0, 4.0, static_cast<std::size_t>(state.range(0)));
    const GridField f = bumps(g, grid);
    for (auto _ : state) {
        benchmark::DoNotOptimize(maximal_function(space, f).sup_norm());
    }
    state.SetLabel(g.describe());
}
BENCHMARK(BM_MaximalFunction)->Args({17, 0})->Args({33, 0})->Args({33, 1})->Unit(benchmark::kMillisecond);

void BM_CZDecompose(benchmark::State& state) {
    const GroupDescriptor g = family(state.range(1));
    const QuasiSpace space(g);
    const GridSpec grid = GridSpec::cube(2, -4.0, 4.0, static_cast<std::size_t>(state.range(0)));
    const GridField f = bumps(g, grid);
    CoverPolicy policy;
    policy.engulfing = 7.5;
    const double lambda = 0.25 * f.sup_norm();
    for (auto _ : state) {
        benchmark::DoNotOptimize(cz_decompose(space, f, lambda, policy).bad.size());
    }
    state.SetLabel(g.describe());
}
BENCHMARK(BM_CZDecompose)->Args({17, 0})->Args({33, 0})->Args({33, 1})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
