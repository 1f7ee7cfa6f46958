#pragma once

// Large-amplitude response: a resonator frequency modulated at f_m with index
// beta splits into Bessel-weighted copies separated by f_m.

#include <span>
#include <string>
#include <vector>

#include "emtwin/lineshape.hpp"
#include "emtwin/spectrum.hpp"
#include "emtwin/units.hpp"

namespace emtwin {

inline constexpr int default_sideband_orders = 14;

/// J_0(x) .. J_n_max(x) by normalised downward (Miller) recurrence.
std::vector<double> bessel_j_orders(int n_max, double x);

/// J_n(x) for integer n (negative n allowed).
double bessel_j(int n, double x);

/// 1 - sum_{|n| <= n_max} J_n(beta)^2.
double sum_rule_deficit(double beta, int n_max);

/// Smallest n_max >= max(14, ceil(beta + 10)) whose sum-rule deficit is below `tol`.
int required_orders(double beta, double tol = 1e-6);

/// beta = g0 x0 / (x_zpf f_m), all frequencies in Hz.
double modulation_index(double g0, double x0, double x_zpf, double f_m);

/// |S21|^2 = 1 - kappa_ext (kappa - kappa_ext) sum_n J_n^2 / ((kappa/2)^2 + (delta + n f_m)^2),
/// clamped to [0, 1]. Throws NonConvergedSum when the truncation misses more than 1e-6
/// of the Bessel weight.
double s21_driven(double delta, const LineshapeParams& line, double beta, double f_m,
                  int n_max = default_sideband_orders);

/// Vectorised form over a detuning grid (OpenMP kernel).
std::vector<double> s21_driven_trace(std::span<const double> delta, const LineshapeParams& line,
                                     double beta, double f_m, int n_max = default_sideband_orders);

/// n_phon = (x0 / 2 x_zpf)^2.
double coherent_phonon_number(double x0, double x_zpf);

struct DriveSweep {
    double v_piezo;  // V
    Spectrum trace;  // |S21|^2 vs absolute frequency
};

struct AmplitudeFitOptions {
    double beta_max = 25.0;
    double scan_step = 0.05;
};

struct AmplitudeFit {
    double x0 = 0;  // m
    double x0_err = 0;
    double beta = 0;
    double beta_err = 0;
    double background = 1;
    double background_err = 0;
    int n_max = default_sideband_orders;
    double residual_rms = 0;
    int iterations = 0;
};

/// Fits beta (and a background scale) with the linewidths and f_c held at `line`,
/// then converts to x0. Throws BelowSplittingThreshold for beta < 0.3, FitDiverged.
AmplitudeFit fit_amplitude(const Spectrum& trace, const LineshapeParams& line, double g0,
                           const MechanicalMode& mode, const AmplitudeFitOptions& options = {});

/// Residual sum of squares after the optimal background scale, for each beta on the grid.
std::vector<double> amplitude_scan(std::span<const double> delta, std::span<const double> y,
                                   const LineshapeParams& line, double f_m, std::span<const double> betas);

/// Least-squares line through (ln x, ln y): y = c x^exponent.
struct PowerLawFit {
    double exponent = 0;
    double exponent_err = 0;
    double prefactor = 0;
    double r_squared = 0;
    std::size_t n = 0;
};

PowerLawFit power_law_regression(std::span<const double> x, std::span<const double> y);

struct SweepRow {
    double v_piezo;
    AmplitudeFit fit;
    double n_phon;
};

struct SweepFailure {
    double v_piezo;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepFailure> failures;
};

/// Fits every trace; failures are recorded and the sweep continues.
SweepResult fit_sweep(std::span<const DriveSweep> sweep, const LineshapeParams& line, double g0,
                      const MechanicalMode& mode, const AmplitudeFitOptions& options = {});

}  // namespace emtwin
