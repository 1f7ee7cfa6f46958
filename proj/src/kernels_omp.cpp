#include "emtwin/kernels.hpp"

#include <omp.h>

#include <algorithm>

#include "kernels_detail.hpp"

namespace emtwin::kernels {

namespace {
int g_thread_cap = 0;

int team_size() {
    const int hw = omp_get_max_threads();
    return g_thread_cap > 0 ? std::min(g_thread_cap, hw) : hw;
}

std::ptrdiff_t ssize(std::span<const double> s) { return static_cast<std::ptrdiff_t>(s.size()); }
}  // namespace

void set_max_threads(int n) { g_thread_cap = n > 0 ? n : 0; }

int max_threads() { return team_size(); }

namespace omp {

void flux_sweep(const ResonatorGeometry& geom, const SquidParams& squid, std::span<const double> phi,
                std::span<double> f_c, std::span<double> resp, std::span<std::uint8_t> divergent) {
    const std::ptrdiff_t n = ssize(phi);
#pragma omp parallel for schedule(dynamic, 64) num_threads(team_size())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        detail::flux_point(geom, squid, phi[k], f_c[k], resp[k], divergent[k]);
    }
}

void suu(std::span<const double> f, const SuuModel& m, std::span<double> out) {
    const std::ptrdiff_t n = ssize(f);
#pragma omp parallel for schedule(static) num_threads(team_size())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = detail::suu_point(f[k], m);
    }
}

void s21_driven(std::span<const double> delta, const DrivenModel& m, std::span<double> out) {
    const std::ptrdiff_t n = ssize(delta);
#pragma omp parallel for schedule(static) num_threads(team_size())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = detail::s21_driven_point(delta[k], m);
    }
}

void gamma_noise(std::span<const double> clean, int n_avg, std::uint64_t seed, std::span<double> out) {
    const std::ptrdiff_t n = ssize(clean);
#pragma omp parallel for schedule(static) num_threads(team_size())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = detail::gamma_point(clean[k], n_avg, seed, k);
    }
}

void gaussian_noise(std::span<const double> clean, double sigma, std::uint64_t seed,
                    std::span<double> out) {
    const std::ptrdiff_t n = ssize(clean);
#pragma omp parallel for schedule(static) num_threads(team_size())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = detail::gaussian_point(clean[k], sigma, seed, k);
    }
}

void amplitude_scan(std::span<const double> delta, std::span<const double> y, const LineshapeParams& line,
                    double f_m, std::span<const double> betas, std::span<double> sse) {
    const std::ptrdiff_t n = ssize(betas);
#pragma omp parallel for schedule(dynamic, 4) num_threads(team_size())
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        sse[i] = detail::scan_point(delta, y, line, f_m, betas[i]);
    }
}

}  // namespace omp
}  // namespace emtwin::kernels
