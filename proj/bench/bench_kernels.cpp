// Serial reference vs OpenMP kernels. Arg(0) = serial, Arg(1) = parallel.

#include "eptrack/lockin.hpp"
#include "eptrack/spectra.hpp"

#include <benchmark/benchmark.h>

using namespace eptrack;

namespace {

exec::Policy policy(const benchmark::State& state) {
    return state.range(0) == 0 ? exec::Policy::Serial : exec::Policy::Parallel;
}

void BM_Surfaces(benchmark::State& state) {
    const auto dev = model::default_device();
    const auto v = spectra::linspace(0.05, 0.5, 8);
    const auto d = spectra::linspace(-0.5, 0.5, 8);
    spectra::SurfaceOptions opt;
    opt.sweep.varphi = deg_to_rad(-65.0);
    opt.snr_db = 60.0;
    for (auto _ : state) {
        auto g = spectra::build_surfaces(dev, v, d, opt, policy(state));
        benchmark::DoNotOptimize(g.cells.data());
    }
    state.SetItemsProcessed(state.iterations() * 64);
}

void BM_MonteCarloFits(benchmark::State& state) {
    const auto dev = model::default_device();
    const auto h = model::build_hamiltonian(dev.modes, dev.pump(0.5, hz_to_rad(0.3)));
    const auto grid = spectra::default_grid(h);
    spectra::SweepConfig c;
    c.varphi = deg_to_rad(-65.0);
    c.noise_std = spectra::noise_for_snr(h, grid, c, 60.0);
    for (auto _ : state) {
        auto r = spectra::monte_carlo_fits(h, grid, c, 32, policy(state));
        benchmark::DoNotOptimize(r.data());
    }
    state.SetItemsProcessed(state.iterations() * 32);
}

void BM_ClosedLoopBatch(benchmark::State& state) {
    const auto dev = model::default_device();
    std::vector<paths::LoopSchedule> scheds;
    for (auto dir : {paths::Direction::Clockwise, paths::Direction::CounterClockwise}) {
        for (auto sheet : {model::SheetLabel::High, model::SheetLabel::Low}) {
            scheds.push_back(paths::schedule_phase_shifts(paths::pt_symmetric_rectangle(dir), dev, sheet));
            scheds.push_back(paths::schedule_phase_shifts(paths::reference_circle(dir), dev, sheet));
        }
    }
    lockin::ClosedLoopConfig cfg;
    cfg.device = dev;
    for (auto _ : state) {
        auto r = lockin::run_closed_loop_batch(scheds, cfg, policy(state));
        benchmark::DoNotOptimize(r.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(scheds.size()));
}

}  // namespace

BENCHMARK(BM_Surfaces)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MonteCarloFits)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ClosedLoopBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
