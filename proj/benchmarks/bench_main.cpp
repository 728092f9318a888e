#include <benchmark/benchmark.h>

#include <vector>

#include "ulrates/dms.hpp"
#include "ulrates/dynamics.hpp"
#include "ulrates/potentials.hpp"
#include "ulrates/rates.hpp"
#include "ulrates/spectral.hpp"

namespace {

void BM_MainRate(benchmark::State& state) {
    ulrates::RateInputs in;
    for (auto _ : state) {
        in.gamma += 1e-9;  // defeat CSE across iterations
        benchmark::DoNotOptimize(ulrates::main_rate(in).lambda);
    }
}
BENCHMARK(BM_MainRate);

void BM_GammaSweep200(benchmark::State& state) {
    std::vector<double> grid(200);
    for (int i = 0; i < 200; ++i) grid[static_cast<size_t>(i)] = 0.01 * std::pow(1e4, i / 199.0);
    for (auto _ : state) benchmark::DoNotOptimize(ulrates::gamma_sweep(1.0, 0.0, 1.0, grid));
}
BENCHMARK(BM_GammaSweep200);

void BM_DmsRate(benchmark::State& state) {
    ulrates::DmsInputs in;
    in.gamma = 2.0;
    in.m = 1.0;
    in.epsilon = 0.3;
    for (auto _ : state) {
        in.epsilon += 1e-12;
        benchmark::DoNotOptimize(ulrates::dms_rate(in));
    }
}
BENCHMARK(BM_DmsRate);

void BM_DmsOptimize(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(ulrates::dms_optimize(2.0, 1.0, ulrates::r_ham_bound(0.0)));
}
BENCHMARK(BM_DmsOptimize);

void BM_QuadraticSpectrum(benchmark::State& state) {
    const int nmax = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(ulrates::quadratic_spectrum(1.0, 1.0, nmax));
}
BENCHMARK(BM_QuadraticSpectrum)->Arg(10)->Arg(40);

void BM_BuildGenerator(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(ulrates::build_generator_hermite(1.0, 3.0, N));
}
BENCHMARK(BM_BuildGenerator)->Arg(20)->Arg(40);

void BM_MatrixGap(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    const auto gen = ulrates::build_generator_hermite(1.0, 3.0, N);
    for (auto _ : state) benchmark::DoNotOptimize(ulrates::matrix_gap(gen).gap);
}
BENCHMARK(BM_MatrixGap)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_PoincareFd(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto spec = ulrates::make_double_well(1);
    for (auto _ : state)
        benchmark::DoNotOptimize(ulrates::poincare_fd(spec, -3.0, 3.0, n).m_hat);
}
BENCHMARK(BM_PoincareFd)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_MomentFlow(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(
            ulrates::moment_flow_quadratic(1.0, 2.0, Eigen::Vector2d(1.0, 0.0),
                                           Eigen::Matrix2d::Zero(), 0.05, 20.0));
}
BENCHMARK(BM_MomentFlow)->Unit(benchmark::kMillisecond);

void BM_EnsembleSteps(benchmark::State& state) {
    const auto spec = ulrates::make_isotropic_quadratic(1.0, 1);
    ulrates::IntegratorConfig cfg;
    cfg.scheme = ulrates::Scheme::EulerMaruyama;
    cfg.dt = 1e-3;
    cfg.t_final = 1.0;
    cfg.gamma = 2.0;
    cfg.seed = 7;
    ulrates::InitialCondition init;
    init.kind = ulrates::InitialCondition::Kind::PointMass;
    init.mean = Eigen::Vector2d(1.0, 0.0);
    const std::vector<ulrates::Observable> obs{ulrates::observable_by_name("x")};
    for (auto _ : state)
        benchmark::DoNotOptimize(
            ulrates::simulate_ensemble(spec, cfg, 64, init, obs, 100, 1));
    state.SetItemsProcessed(state.iterations() * 64 * 1000);  // trajectory-steps
}
BENCHMARK(BM_EnsembleSteps)->Unit(benchmark::kMillisecond);

void BM_FitDecay(benchmark::State& state) {
    std::vector<double> t(2000), v(2000);
    for (int i = 0; i < 2000; ++i) {
        t[static_cast<size_t>(i)] = 0.01 * i;
        v[static_cast<size_t>(i)] = std::exp(-0.7 * t[static_cast<size_t>(i)]);
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(ulrates::fit_decay(t, v, ulrates::FitMode::TailLinear,
                                                    2.0, 18.0));
}
BENCHMARK(BM_FitDecay);

}  // namespace

BENCHMARK_MAIN();
