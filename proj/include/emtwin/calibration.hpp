#pragma once

// Inverse analysis of measured spectra: peak fits, g0 via the calibration tone,
// drive and back-action estimates, susceptibility and force sensitivity.

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "emtwin/lineshape.hpp"
#include "emtwin/spectra.hpp"
#include "emtwin/units.hpp"

namespace emtwin {

struct ProbeTone {
    double f_p;       // Hz
    double power;     // W at the device
    double detuning;  // Hz, f_p - f_c; +f_m is the blue sideband
};

struct PeakWindow {
    double f_lo;
    double f_hi;
    std::vector<std::pair<double, double>> exclude;  // [lo, hi] ranges dropped from the fit
};

struct LorentzianPeakFit {
    double f0 = 0;
    double fwhm = 0;
    double area = 0;   // integral of the peak above the floor
    double peak = 0;   // 2 area / (pi fwhm)
    double floor = 0;
    double f0_err = 0;
    double fwhm_err = 0;
    double area_err = 0;
    double peak_err = 0;
    double floor_err = 0;
    double reduced_chi2 = 0;  // under sigma_i = model_i / sqrt(n_avg) when weighted
    bool weighted = false;
    int iterations = 0;
};

/// Fits floor + area * L(f; f0, fwhm) inside the window.
/// Throws PeakTooNarrow (fwhm < 3 bins), FitDiverged (no convergence, or a single
/// Lorentzian that does not describe the window), InvalidArgument (window too small).
LorentzianPeakFit fit_lorentzian_peak(const Spectrum& spec, const PeakWindow& window);

/// Shape known from elsewhere; used to bound the mechanical peak when it is buried in noise.
struct PeakHint {
    double f_m;
    double gamma_m;
};

struct GZeroResult {
    double g0 = 0;       // Hz
    double std_err = 0;  // Hz
    double gamma_m_fit = 0;
    double f_m_fit = 0;
    double area = 0;       // V^2 under the mechanical peak
    double area_err = 0;
    double cal_excess = 0; // V^2/Hz in the calibration bin above floor and tail
    double floor = 0;
    bool peak_significant = true;
};

/// g0^2 = area * phi0^2 f_mod^2 / (4 Y n_th enbw S_cal), the inverse of suu_forward.
/// Throws MissingCalTone, FitDiverged.
GZeroResult extract_g0(const Spectrum& spec, const CalibrationTone& tone, double n_th, double transfer_y,
                       std::optional<PeakHint> hint = {});

/// Mean intracavity photon number, (P / hbar w_p) kappa_ext / ((kappa/2)^2 + Delta^2).
double photon_number(const ProbeTone& tone, const LineshapeParams& line);

/// Back-action damping in Hz (negative is anti-damping). `detuning` = f_p - f_c in Hz.
double gamma_em(double g0, double n_cav, const LineshapeParams& line, double detuning, double f_m);

/// n_th * gamma_m / (gamma_m + gamma_em). Throws InstabilityThreshold when gamma_m + gamma_em <= 0.
double effective_occupation(double n_th, double gamma_m, double gamma_em);

/// chi(f) = 1 / (m_eff (W^2 - W_m^2 - i G_m W)), angular W, in m/N.
std::complex<double> susceptibility(double f, const MechanicalMode& mode);

/// S_FF = 2 S_xx / |chi|^2 pointwise. Throws UnitMismatch unless the input is m^2/Hz.
Spectrum force_sensitivity(const Spectrum& sxx, const MechanicalMode& mode);

/// Thermal-limit closed form of force_sensitivity at resonance, 16 pi k_B T m_eff gamma_m.
double thermal_force_psd(double temperature, const MechanicalMode& mode);

}  // namespace emtwin
