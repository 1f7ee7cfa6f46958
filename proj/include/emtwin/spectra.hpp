#pragma once

// Forward models of the measured spectral densities and synthetic periodogram noise.

#include <cstdint>
#include <span>

#include "emtwin/lineshape.hpp"
#include "emtwin/spectrum.hpp"
#include "emtwin/units.hpp"

namespace emtwin {

/// Phase-modulation calibration tone.
struct CalibrationTone {
    double f_mod;  // Hz, absolute
    double phi0;   // rad, modulation depth (< 0.1)

    void validate() const;
    /// Frequency-deviation variance phi0^2 f_mod^2 / 2, Hz^2.
    double variance() const { return 0.5 * phi0 * phi0 * f_mod * f_mod; }
};

/// Collapsed detection chain from resonator frequency noise to voltage PSD.
struct DetectionChain {
    double gain;                 // (V^2/Hz) per (Hz^2/Hz)
    double s_imp;                // V^2/Hz
    double transfer_ratio_Y = 1; // mechanical vs calibration transfer

    void validate() const;
};

/// Unit-area Lorentzian, FWHM `fwhm`, in 1/Hz.
double lorentzian(double f, double f0, double fwhm);

/// Thermal displacement PSD x_zpf^2 * 2 n_th * L(f), m^2/Hz.
double sxx_thermal(double f, const MechanicalMode& mode, const ThermalState& th);

/// Resonator frequency-noise PSD from the mechanics, g0^2 * 2 n_th * L(f), Hz^2/Hz.
double s_freq_mech(double f, double g0, const MechanicalMode& mode, const ThermalState& th);

/// Single-bin PSD value of the calibration tone, variance / enbw.
double s_freq_cal(const CalibrationTone& tone, double enbw);

/// Places the calibration tone into the bin nearest f_mod. Throws InvalidArgument
/// when f_mod is outside the axis.
std::size_t calibration_bin(std::span<const double> f, const CalibrationTone& tone);

/// S_UU(f) = gain [Y S_mech(f) + S_cal(f)] + s_imp on the given axis.
Spectrum suu_forward(std::span<const double> f, double enbw, double g0, const MechanicalMode& mode,
                     const ThermalState& th, const CalibrationTone& tone, const DetectionChain& chain);

/// Averaged-periodogram statistics: every bin ~ Gamma(n_avg, mean = clean value).
/// Bit-reproducible for a seed. Throws InvalidArgument for n_avg < 1.
Spectrum synthesize_noise(const Spectrum& clean, int n_avg, std::uint64_t seed);

/// Additive white Gaussian noise of standard deviation sigma (for |S21|^2 traces).
Spectrum add_gaussian_noise(const Spectrum& clean, double sigma, std::uint64_t seed);

struct DisplacementSpectrum {
    Spectrum sxx;              // m^2/Hz
    std::size_t clipped = 0;   // bins where S_UU fell below the floor
};

/// Converts a V^2/Hz spectrum back to displacement units:
/// S_xx = (S_UU - floor) x_zpf^2 / (gain Y g0^2). `floor` defaults to chain.s_imp.
DisplacementSpectrum suu_to_sxx(const Spectrum& meas, double g0, const MechanicalMode& mode,
                                const DetectionChain& chain, std::optional<double> floor = {});

/// Optional estimate of Y as |H(f_m)|^2 / |H(f_mod)|^2 with H the cavity
/// response seen by the lower sideband of a probe at detuning `detuning` (Hz).
double transfer_ratio_estimate(const LineshapeParams& line, double detuning, double f_m, double f_mod);

}  // namespace emtwin
