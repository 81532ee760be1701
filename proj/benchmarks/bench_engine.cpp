#include <benchmark/benchmark.h>

#include <cmath>

#include "harvest/circuit.hpp"
#include "harvest/engine.hpp"
#include "harvest/generator.hpp"

using namespace harvest;

namespace {

void BM_ReferenceRun(benchmark::State& state) {
    SimConfig cfg = reference_design();
    cfg.duration = static_cast<double>(state.range(0));
    RunOptions opt;
    opt.keep_series = false;
    for (auto _ : state) benchmark::DoNotOptimize(run(cfg, opt).peak_emf);
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(std::lround(cfg.duration / cfg.dt)));
}
BENCHMARK(BM_ReferenceRun)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_PulseSource(benchmark::State& state) {
    SimConfig cfg = reference_design();
    cfg.duration = 10.0;
    RunOptions opt;
    opt.keep_series = false;
    for (auto _ : state) benchmark::DoNotOptimize(run_pulse_source(cfg, 10.0, 1e-3, opt).dc_steady);
    state.SetItemsProcessed(state.iterations() * 1000000);
}
BENCHMARK(BM_PulseSource)->Unit(benchmark::kMillisecond);

void BM_CircuitStep(benchmark::State& state) {
    CircuitConfig cfg;
    cfg.diode.kind = state.range(0) == 0 ? DiodeKind::constant_drop : DiodeKind::shockley;
    CircuitState s = initial_state(cfg);
    double t = 0.0;
    for (auto _ : state) {
        s = solve_step(cfg, 50.0, 0.0, 10.0 * std::sin(6.283 * 50.0 * t), s, 1e-5).state;
        t += 1e-5;
        benchmark::DoNotOptimize(s.cap_voltage);
    }
}
BENCHMARK(BM_CircuitStep)->Arg(0)->Arg(1);

void BM_Acceleration(benchmark::State& state) {
    HarvesterDesign d = reference_design().design;
    d.end_magnet_moment = 1e-3;
    double x = 0.001;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mech_acceleration(d, {x, 0.1}, -14.0, 0.01));
        x = -x;
    }
}
BENCHMARK(BM_Acceleration);

}  // namespace

BENCHMARK_MAIN();
