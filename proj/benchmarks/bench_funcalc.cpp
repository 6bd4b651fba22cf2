#include <benchmark/benchmark.h>

#include "solstab/commutator.hpp"
#include "solstab/funcalc.hpp"
#include "solstab/rng.hpp"

using namespace solstab;

namespace {

struct Setup {
    GridSpec g;
    SolitonProfile prof;
    LinearizedOperator H;
    Contour contour;
    std::shared_ptr<ContourCalculus> calc;
    SpinorField x;

    explicit Setup(int n)
        : g(make_grid(25.0, n)),
          prof(closed_form_profile(3.0, 2.0, g)),
          H(assemble_operator(prof, NonlinearitySpec::pure_power(3.0))),
          contour(build_contour(H, 1.75, 1e-8)),
          calc(std::make_shared<ContourCalculus>(H, contour)) {
        Rng rng(9);
        x = random_smooth_spinor(g, rng);
    }
};

} // namespace

static void BM_resolvent_node(benchmark::State& state) {
    Setup s(static_cast<int>(state.range(0)));
    const cd lambda(s.contour.a, 0.05);
    for (auto _ : state) {
        SpinorField y = resolvent_apply(s.H, lambda, s.x, 1e-11);
        benchmark::DoNotOptimize(y.upper.data());
    }
}
BENCHMARK(BM_resolvent_node)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_fractional_power(benchmark::State& state) {
    Setup s(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        SpinorField y = fractional_power_apply(s.H, 1.75, s.x, *s.calc);
        benchmark::DoNotOptimize(y.upper.data());
    }
}
BENCHMARK(BM_fractional_power)->Arg(192)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_continuous_projector(benchmark::State& state) {
    Setup s(static_cast<int>(state.range(0)));
    const ContinuousProjector pc = continuous_projector(s.H, s.calc);
    for (auto _ : state) {
        SpinorField y = pc.apply(s.x);
        benchmark::DoNotOptimize(y.upper.data());
    }
}
BENCHMARK(BM_continuous_projector)->Arg(256)->Unit(benchmark::kMillisecond);
