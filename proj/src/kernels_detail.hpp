#pragma once

// Per-element bodies shared by the serial and OpenMP kernels.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "emtwin/bessel.hpp"
#include "emtwin/errors.hpp"
#include "emtwin/kernels.hpp"

namespace emtwin::kernels::detail {

inline void flux_point(const ResonatorGeometry& geom, const SquidParams& squid, double phi,
                       double& f_c, double& resp, std::uint8_t& divergent) {
    try {
        f_c = resonance_frequency(geom, squid, phi);
        resp = responsivity(geom, squid, phi);
        divergent = 0;
    } catch (const Error&) {
        f_c = std::numeric_limits<double>::quiet_NaN();
        resp = std::numeric_limits<double>::quiet_NaN();
        divergent = 1;
    }
}

inline double suu_point(double f, const SuuModel& m) {
    const double half = 0.5 * m.gamma_m;
    const double df = f - m.f_m;
    const double lor = (m.gamma_m / (2.0 * std::numbers::pi)) / (df * df + half * half);
    return m.gain * m.transfer_y * m.g0 * m.g0 * 2.0 * m.n_th * lor + m.s_imp;
}

inline double s21_driven_point(double delta, const DrivenModel& m) {
    const auto n_max = static_cast<long>(m.weights.size() / 2);
    const double half = 0.5 * m.kappa;
    // +n and -n summed as a pair so the result is exactly even in delta
    double sum = m.weights[static_cast<std::size_t>(n_max)] / (half * half + delta * delta);
    for (long n = n_max; n >= 1; --n) {
        const double shift = static_cast<double>(n) * m.f_m;
        const double up = delta + shift;
        const double down = delta - shift;
        sum += m.weights[static_cast<std::size_t>(n_max + n)] / (half * half + up * up) +
               m.weights[static_cast<std::size_t>(n_max - n)] / (half * half + down * down);
    }
    const double v = 1.0 - m.kappa_ext * (m.kappa - m.kappa_ext) * sum;
    return std::fmin(std::fmax(v, 0.0), 1.0);
}

inline double gamma_point(double mean, int n_avg, std::uint64_t seed, std::uint64_t bin) {
    if (!(mean > 0)) return 0.0;
    CounterRng rng(seed, bin);
    std::gamma_distribution<double> dist(n_avg, mean / n_avg);
    return dist(rng);
}

inline double gaussian_point(double clean, double sigma, std::uint64_t seed, std::uint64_t bin) {
    if (!(sigma > 0)) return clean;
    CounterRng rng(seed, bin);
    std::normal_distribution<double> dist(0.0, sigma);
    return clean + dist(rng);
}

// Residual sum of squares at one beta with the background scale solved in closed form.
inline double scan_point(std::span<const double> delta, std::span<const double> y,
                         const LineshapeParams& line, double f_m, double beta) {
    const int n_max = required_orders(beta);
    const std::vector<double> j = bessel_j_orders(n_max, beta);
    std::vector<double> w(static_cast<std::size_t>(2 * n_max + 1));
    for (int n = 0; n <= n_max; ++n) {
        const double jj = j[static_cast<std::size_t>(n)] * j[static_cast<std::size_t>(n)];
        w[static_cast<std::size_t>(n_max + n)] = jj;
        w[static_cast<std::size_t>(n_max - n)] = jj;
    }
    const DrivenModel m{line.kappa_ext, line.kappa(), f_m, w};
    double sym = 0, smm = 0, syy = 0;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double v = s21_driven_point(delta[i], m);
        sym += y[i] * v;
        smm += v * v;
        syy += y[i] * y[i];
    }
    return smm > 0 ? std::max(syy - sym * sym / smm, 0.0) : syy;
}

}  // namespace emtwin::kernels::detail
