#include <benchmark/benchmark.h>

#include "solstab/simulate.hpp"

using namespace solstab;

static void BM_step_nls(benchmark::State& state) {
    const GridSpec g = make_grid(40.0, static_cast<int>(state.range(0)));
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    ComplexField u = soliton_field(p, 0.0);
    for (auto _ : state) {
        step_nls(u, 1e-4, nl);
        benchmark::DoNotOptimize(u.values.data());
    }
}
BENCHMARK(BM_step_nls)->Arg(1024)->Arg(4096);

static void BM_orthogonality_solve(benchmark::State& state) {
    const GridSpec g = make_grid(40.0, static_cast<int>(state.range(0)));
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    ProfileFamily family(nl, g);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    ComplexField u = soliton_field(p, 0.1);
    for (int j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        u.values[j] += 1e-3 * std::exp(-x * x / 16.0);
    }
    ModulationState guess;
    guess.alpha = 2.0;
    guess.beta = 0.1;
    for (auto _ : state) {
        ModulationState st = solve_orthogonality(u, 20.0, guess, family);
        benchmark::DoNotOptimize(&st);
    }
}
BENCHMARK(BM_orthogonality_solve)->Arg(1024)->Unit(benchmark::kMicrosecond);
