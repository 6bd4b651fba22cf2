#include <benchmark/benchmark.h>

#include "solstab/grid.hpp"
#include "solstab/rng.hpp"

using namespace solstab;

static void BM_spectral_derivative(benchmark::State& state) {
    const GridSpec g = make_grid(40.0, static_cast<int>(state.range(0)));
    Rng rng(1);
    ComplexField f = random_smooth_field(g, rng);
    for (auto _ : state) {
        ComplexField d = spectral_derivative(f, 2);
        benchmark::DoNotOptimize(d.values.data());
    }
}
BENCHMARK(BM_spectral_derivative)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_norm_suite(benchmark::State& state) {
    const GridSpec g = make_grid(40.0, static_cast<int>(state.range(0)));
    Rng rng(1);
    ComplexField f = random_smooth_field(g, rng);
    for (auto _ : state) {
        NormSuite ns = norm_suite(f);
        benchmark::DoNotOptimize(&ns);
    }
}
BENCHMARK(BM_norm_suite)->Arg(1024)->Arg(4096);
