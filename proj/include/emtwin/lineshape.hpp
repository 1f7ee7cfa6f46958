#pragma once

// Undriven notch-type transmission and its fit.

#include <optional>

#include "emtwin/spectrum.hpp"

namespace emtwin {

/// All rates are ordinary-frequency values (kappa / 2 pi) in Hz.
struct LineshapeParams {
    double f_c;
    double kappa_ext;
    double kappa_int;

    double kappa() const { return kappa_ext + kappa_int; }
    /// On-resonance extinction 1 - |S21|^2(0) = 4 (kappa_ext/kappa)(1 - kappa_ext/kappa).
    double depth() const;
    void validate() const;
};

/// |S21|^2(delta) = 1 - kappa_ext (kappa - kappa_ext) / ((kappa/2)^2 + delta^2); delta in Hz.
double s21_squared(double delta, const LineshapeParams& p);

enum class CouplingRoot { Undercoupled, Overcoupled };

struct ResonanceFitOptions {
    CouplingRoot prefer = CouplingRoot::Undercoupled;
    /// When set, the fit reports whether f_m exceeds the total linewidth.
    std::optional<double> mechanical_frequency;
};

struct ResonanceFit {
    LineshapeParams params;     // root selected by `prefer`
    LineshapeParams alternate;  // kappa_ext and kappa_int swapped
    double f_c_err = 0;
    double kappa_ext_err = 0;
    double kappa_int_err = 0;
    double kappa_err = 0;
    double background = 1;  // off-resonant transmission scale
    double background_err = 0;
    double residual_rms = 0;
    int iterations = 0;
    /// Both roots fit the magnitude data equally well and are distinguishable
    /// beyond their errors; the choice came from `prefer`.
    bool coupling_ambiguous = false;
    std::optional<bool> resolved_sideband;
};

/// Rough starting point from the trace minimum and half-depth width.
LineshapeParams guess_resonance(const Spectrum& trace);

/// Least-squares fit of background * s21_squared(f - f_c).
/// Throws InsufficientSpan (< 5 linewidths of data), InvalidArgument (values outside
/// [-0.1, 1.1]), FitDiverged.
ResonanceFit fit_resonance(const Spectrum& trace, const LineshapeParams& guess,
                           const ResonanceFitOptions& options = {});

}  // namespace emtwin
