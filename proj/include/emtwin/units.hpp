#pragma once

// Physical constants and the mechanical/thermal types shared across the library.
//
// Conventions used everywhere in emtwin:
//   * frequencies and linewidths stored in Hz (ordinary frequency, FWHM);
//     formulas that need angular rates multiply by 2*pi locally,
//   * spectral densities are one-sided, per Hz.

#include <numbers>

namespace emtwin {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double k_B = 1.380649e-23;          // J/K
inline constexpr double h = 6.62607015e-34;          // J s
inline constexpr double e_charge = 1.602176634e-19;  // C
inline constexpr double Phi0 = h / (2.0 * e_charge); // Wb
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace constants

inline constexpr double angular(double f_hz) { return constants::two_pi * f_hz; }

/// String oscillator. All frequencies in Hz, linewidth is the FWHM.
class MechanicalMode {
public:
    /// Throws InvalidArgument unless every field is positive, 0 < modeshape <= 1
    /// and gamma_m < f_m / 10.
    MechanicalMode(double f_m, double gamma_m, double m_eff, double length,
                   double modeshape_factor);

    double f_m() const { return f_m_; }
    double gamma_m() const { return gamma_m_; }
    double m_eff() const { return m_eff_; }
    double length() const { return length_; }
    double modeshape_factor() const { return modeshape_; }

    MechanicalMode with_gamma(double gamma_m) const;

private:
    double f_m_;
    double gamma_m_;
    double m_eff_;
    double length_;
    double modeshape_;
};

struct ThermalState {
    double temperature;  // K
    double n_th;         // mean phonon occupation

    /// Bose occupation of `f_m` at temperature T.
    static ThermalState at(double f_m, double temperature);
};

/// x_zpf = sqrt(hbar / (2 m_eff Omega_m)), in metres.
double zero_point_fluctuation(const MechanicalMode& mode);

/// Bose factor 1/(exp(hbar Omega / k_B T) - 1). Throws for T <= 0 or f_m <= 0.
double thermal_occupation(double f_m, double temperature);

}  // namespace emtwin
