#pragma once

// Flux-tunable quarter-wave resonator shunted by a dc-SQUID.
//
// The SQUID acts as a flux-dependent inductance L_J(phi); the resonance is the
// root of tan(pi f / 2 f0) = Z0 / (2 pi f L_J) on (0, f0). Flux `phi` is always
// in units of the flux quantum.

#include <span>
#include <vector>

#include "emtwin/units.hpp"

namespace emtwin {

struct SquidParams {
    double i_c;              // single-junction critical current, A
    double asymmetry_d = 0;  // junction imbalance in [0, 1)

    void validate() const;
};

struct ResonatorGeometry {
    double f0_bare;  // quarter-wave frequency with L_J = 0, Hz
    double z0;       // line impedance, ohm

    void validate() const;
};

/// Affine map from applied field to reduced flux: phi = (area_eff * B - offset) / Phi0.
struct FluxAxis {
    double offset;    // Wb
    double area_eff;  // m^2

    void validate() const;
    double phi(double b_ext) const;
    double b_ext(double phi) const;
};

/// L_J(phi) = Phi0 / (2 pi I_c,eff), I_c,eff = 2 i_c sqrt(cos^2(pi phi) + d^2 sin^2(pi phi)).
/// Throws DivergentInductance once I_c,eff drops below 1e-6 of its maximum.
double josephson_inductance(const SquidParams& squid, double phi);

/// Resonance frequency in Hz. L_J = 0 returns f0_bare.
double resonance_frequency(const ResonatorGeometry& geom, const SquidParams& squid, double phi);

/// Same, for an explicit inductance (H).
double resonance_frequency_for_inductance(const ResonatorGeometry& geom, double l_j);

/// d f_c / d phi in Hz per flux quantum, by implicit differentiation.
double responsivity(const ResonatorGeometry& geom, const SquidParams& squid, double phi);

/// g0 / 2 pi = |df/dPhi| * modeshape * |B| * length * x_zpf / Phi0, in Hz.
double coupling_g0(double responsivity_hz_per_phi0, double b_ext, const MechanicalMode& mode);

struct FluxPoint {
    double b_ext;  // T
    double f_c;    // Hz
};

struct FluxMapFit {
    SquidParams squid;
    ResonatorGeometry geometry;
    FluxAxis axis;
    // standard errors, same units as the fields above
    double i_c_err = 0;
    double f0_bare_err = 0;
    double offset_err = 0;
    double area_eff_err = 0;
    double residual_rms = 0;  // Hz
    int iterations = 0;
};

struct FluxMapFitOptions {
    /// Fit z0 together with i_c. Only their product is observable, so this
    /// raises SingularNormalEquations; exposed for diagnostics.
    bool fit_z0 = false;
};

/// Least-squares fit of the resonance model composed with the flux axis.
/// z0 and asymmetry_d are held at the guesses unless requested.
/// Throws InsufficientSpan (< 10 points or < 0.3 Phi0 span), FitDiverged.
FluxMapFit fit_flux_map(std::span<const FluxPoint> map, const ResonatorGeometry& geom_guess,
                        const SquidParams& squid_guess, const FluxAxis& axis_guess,
                        const FluxMapFitOptions& options = {});

}  // namespace emtwin
