#pragma once

// Data-parallel inner loops. `serial` is the reference implementation kept for
// tests and benchmarks; `omp` is the OpenMP version the library calls. Both must
// produce bit-identical output: every element is computed independently with the
// same operation order.

#include <cstdint>
#include <span>

#include "emtwin/lineshape.hpp"
#include "emtwin/squid_resonator.hpp"

namespace emtwin::kernels {

/// Continuous part of the voltage PSD: gain * Y * g0^2 * 2 n_th * L(f; f_m, gamma_m) + s_imp.
struct SuuModel {
    double g0;       // Hz
    double n_th;
    double f_m;      // Hz
    double gamma_m;  // Hz, FWHM
    double gain;
    double transfer_y;
    double s_imp;
};

/// Driven notch transmission with precomputed Bessel weights J_n(beta)^2, n = -n_max..n_max.
struct DrivenModel {
    double kappa_ext;  // Hz
    double kappa;      // Hz
    double f_m;        // Hz
    std::span<const double> weights;  // length 2 n_max + 1, index 0 is n = -n_max
};

/// Counter-based generator: output depends only on (key, counter), so each
/// bin owns an independent stream regardless of which thread evaluates it.
class CounterRng {
public:
    using result_type = std::uint64_t;
    CounterRng(std::uint64_t seed, std::uint64_t stream);
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

namespace serial {
/// divergent[i] = 1 where the SQUID inductance diverges; f_c, resp are NaN there.
void flux_sweep(const ResonatorGeometry& geom, const SquidParams& squid, std::span<const double> phi,
                std::span<double> f_c, std::span<double> resp, std::span<std::uint8_t> divergent);
void suu(std::span<const double> f, const SuuModel& m, std::span<double> out);
void s21_driven(std::span<const double> delta, const DrivenModel& m, std::span<double> out);
/// Each output bin ~ Gamma(shape n_avg, mean clean[i]).
void gamma_noise(std::span<const double> clean, int n_avg, std::uint64_t seed, std::span<double> out);
/// out[i] = clean[i] + N(0, sigma^2).
void gaussian_noise(std::span<const double> clean, double sigma, std::uint64_t seed, std::span<double> out);
/// sse[k] = min_A sum_i (y_i - A * s21_driven(delta_i; betas[k]))^2.
void amplitude_scan(std::span<const double> delta, std::span<const double> y, const LineshapeParams& line,
                    double f_m, std::span<const double> betas, std::span<double> sse);
}  // namespace serial

namespace omp {
void flux_sweep(const ResonatorGeometry& geom, const SquidParams& squid, std::span<const double> phi,
                std::span<double> f_c, std::span<double> resp, std::span<std::uint8_t> divergent);
void suu(std::span<const double> f, const SuuModel& m, std::span<double> out);
void s21_driven(std::span<const double> delta, const DrivenModel& m, std::span<double> out);
void gamma_noise(std::span<const double> clean, int n_avg, std::uint64_t seed, std::span<double> out);
void gaussian_noise(std::span<const double> clean, double sigma, std::uint64_t seed, std::span<double> out);
/// sse[k] = min_A sum_i (y_i - A * s21_driven(delta_i; betas[k]))^2.
void amplitude_scan(std::span<const double> delta, std::span<const double> y, const LineshapeParams& line,
                    double f_m, std::span<const double> betas, std::span<double> sse);
}  // namespace omp

/// Caps the OpenMP team size used by the `omp` kernels (<= 0 restores the default).
void set_max_threads(int n);
int max_threads();

}  // namespace emtwin::kernels
