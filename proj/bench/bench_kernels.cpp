// Serial reference vs OpenMP kernels on representative grid sizes.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "emtwin/bessel.hpp"
#include "emtwin/kernels.hpp"
#include "emtwin/spectrum.hpp"

namespace {

using namespace emtwin;

const ResonatorGeometry geom{7803315344.518355, 245.72700618582053};
const SquidParams squid{0.44e-6, 0.0};
const LineshapeParams line{7.45e9, 0.45e6, 2.05e6};
constexpr double f_m = 6.34311e6;

template <bool Parallel>
void flux_sweep(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::vector<double> phi = linspace(-0.49, 0.49, n);
    std::vector<double> f(n), r(n);
    std::vector<std::uint8_t> d(n);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::omp::flux_sweep(geom, squid, phi, f, r, d);
        else kernels::serial::flux_sweep(geom, squid, phi, f, r, d);
        benchmark::DoNotOptimize(f.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <bool Parallel>
void suu(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::vector<double> f = linspace(f_m - 3e3, f_m + 3e3, n);
    const kernels::SuuModel m{1620, 607, f_m, 33.6, 4.02e-18, 4.98e-3, 5e-14};
    std::vector<double> out(n);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::omp::suu(f, m, out);
        else kernels::serial::suu(f, m, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <bool Parallel>
void gamma_noise(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::vector<double> clean(n, 1.0);
    std::vector<double> out(n);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::omp::gamma_noise(clean, 50, 7, out);
        else kernels::serial::gamma_noise(clean, 50, 7, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <bool Parallel>
void amplitude_scan(benchmark::State& state) {
    const std::vector<double> delta = linspace(-60e6, 60e6, 2001);
    const std::vector<double> y = s21_driven_trace(delta, line, 5.0, f_m, required_orders(5.0));
    std::vector<double> betas;
    for (double b = 0.05; b <= 25.0; b += 0.05) betas.push_back(b);
    std::vector<double> sse(betas.size());
    for (auto _ : state) {
        if constexpr (Parallel) kernels::omp::amplitude_scan(delta, y, line, f_m, betas, sse);
        else kernels::serial::amplitude_scan(delta, y, line, f_m, betas, sse);
        benchmark::DoNotOptimize(sse.data());
    }
}

}  // namespace

BENCHMARK(flux_sweep<false>)->Arg(10000);
BENCHMARK(flux_sweep<true>)->Arg(10000);
BENCHMARK(suu<false>)->Arg(1 << 16);
BENCHMARK(suu<true>)->Arg(1 << 16);
BENCHMARK(gamma_noise<false>)->Arg(1 << 16);
BENCHMARK(gamma_noise<true>)->Arg(1 << 16);
BENCHMARK(amplitude_scan<false>);
BENCHMARK(amplitude_scan<true>);

BENCHMARK_MAIN();
