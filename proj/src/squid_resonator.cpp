#include "emtwin/squid_resonator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <numbers>

#include "emtwin/errors.hpp"
#include "emtwin/fit_engine.hpp"

namespace emtwin {

using std::numbers::pi;

void SquidParams::validate() const {
    if (!(i_c > 0)) throw Error(Errc::InvalidArgument, "critical current must be positive");
    if (!(asymmetry_d >= 0 && asymmetry_d < 1))
        throw Error(Errc::InvalidArgument, "junction asymmetry must lie in [0, 1)");
}

void ResonatorGeometry::validate() const {
    if (!(f0_bare > 0) || !(z0 > 0))
        throw Error(Errc::InvalidArgument, "f0_bare and z0 must be positive");
}

void FluxAxis::validate() const {
    if (!(area_eff > 0)) throw Error(Errc::InvalidArgument, "effective area must be positive");
}

double FluxAxis::phi(double b) const { return (area_eff * b - offset) / constants::Phi0; }

double FluxAxis::b_ext(double phi) const { return (phi * constants::Phi0 + offset) / area_eff; }

double josephson_inductance(const SquidParams& squid, double phi) {
    const double c = std::cos(pi * phi);
    const double s = std::sin(pi * phi);
    const double d = squid.asymmetry_d;
    const double ratio = std::sqrt(c * c + d * d * s * s);
    if (!(ratio >= 1e-6))
        throw Error(Errc::DivergentInductance, "SQUID critical current vanishes near phi = " +
                                                   std::to_string(phi));
    return constants::Phi0 / (constants::two_pi * 2.0 * squid.i_c * ratio);
}

double resonance_frequency_for_inductance(const ResonatorGeometry& geom, double l_j) {
    if (l_j <= 0) return geom.f0_bare;
    // h(f) = 2 pi f L sin(x) - Z0 cos(x), x = pi f / 2 f0; strictly increasing,
    // h(0) = -Z0 < 0 and h(f0) = 2 pi f0 L > 0.
    const double f0 = geom.f0_bare;
    auto h = [&](double f) {
        const double x = 0.5 * pi * f / f0;
        return constants::two_pi * f * l_j * std::sin(x) - geom.z0 * std::cos(x);
    };
    double lo = 0.0;
    double hi = f0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) return mid;
        if (h(mid) < 0)
            lo = mid;
        else
            hi = mid;
    }
    throw Error(Errc::NoConvergence, "resonance bisection exceeded 200 iterations");
}

double resonance_frequency(const ResonatorGeometry& geom, const SquidParams& squid, double phi) {
    return resonance_frequency_for_inductance(geom, josephson_inductance(squid, phi));
}

double responsivity(const ResonatorGeometry& geom, const SquidParams& squid, double phi) {
    const double L = josephson_inductance(squid, phi);
    const double f = resonance_frequency_for_inductance(geom, L);
    const double d = squid.asymmetry_d;
    const double c = std::cos(pi * phi);
    const double s = std::sin(pi * phi);
    const double s2 = c * c + d * d * s * s;
    // dL/dphi = L * pi (1 - d^2) sin(2 pi phi) / (2 s2)
    const double dL = L * pi * (1.0 - d * d) * std::sin(2.0 * pi * phi) / (2.0 * s2);
    const double k = 0.5 * pi / geom.f0_bare;
    const double x = k * f;
    const double sx = std::sin(x);
    const double cx = std::cos(x);
    const double dF_df = constants::two_pi * L * (sx + f * k * cx) + geom.z0 * k * sx;
    const double dF_dL = constants::two_pi * f * sx;
    return -dF_dL * dL / dF_df;
}

double coupling_g0(double resp, double b_ext, const MechanicalMode& mode) {
    return std::abs(resp) * mode.modeshape_factor() * std::abs(b_ext) * mode.length() *
           zero_point_fluctuation(mode) / constants::Phi0;
}

FluxMapFit fit_flux_map(std::span<const FluxPoint> map, const ResonatorGeometry& geom_guess,
                        const SquidParams& squid_guess, const FluxAxis& axis_guess,
                        const FluxMapFitOptions& options) {
    geom_guess.validate();
    squid_guess.validate();
    axis_guess.validate();
    if (map.size() < 10)
        throw Error(Errc::InsufficientSpan, "flux map needs at least 10 points");
    const auto [bmin, bmax] = std::minmax_element(map.begin(), map.end(),
        [](const FluxPoint& a, const FluxPoint& b) { return a.b_ext < b.b_ext; });
    const double span = std::abs(axis_guess.phi(bmax->b_ext) - axis_guess.phi(bmin->b_ext));
    if (span < 0.3)
        throw Error(Errc::InsufficientSpan,
                    "flux map spans " + std::to_string(span) + " Phi0 (< 0.3) after axis calibration");

    std::vector<double> b(map.size());
    std::vector<double> f(map.size());
    double f_max = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
        b[i] = map[i].b_ext;
        f[i] = map[i].f_c;
        f_max = std::max(f_max, f[i]);
    }

    // parameters: i_c, f0_bare, offset, area_eff [, z0]
    const int np = options.fit_z0 ? 5 : 4;
    fit::Problem prob;
    prob.initial.resize(np);
    prob.lower.resize(np);
    prob.upper.resize(np);
    prob.scale.resize(np);
    prob.initial << squid_guess.i_c, std::max(geom_guess.f0_bare, f_max * (1 + 1e-9)), axis_guess.offset, axis_guess.area_eff,
        Eigen::VectorXd::Constant(np - 4, geom_guess.z0);
    prob.lower << 0.0, f_max, -fit::unbounded, 0.0, Eigen::VectorXd::Constant(np - 4, 0.0);
    prob.upper << fit::unbounded, fit::unbounded, fit::unbounded, fit::unbounded,
        Eigen::VectorXd::Constant(np - 4, fit::unbounded);
    prob.scale << squid_guess.i_c, geom_guess.f0_bare, constants::Phi0, axis_guess.area_eff,
        Eigen::VectorXd::Constant(np - 4, geom_guess.z0);

    const double d = squid_guess.asymmetry_d;
    prob.residuals = [&, d](const fit::Vector& p) {
        const SquidParams sq{p[0], d};
        const ResonatorGeometry g{p[1], np == 5 ? p[4] : geom_guess.z0};
        const FluxAxis ax{p[2], p[3]};
        fit::Vector r(static_cast<Eigen::Index>(b.size()));
        for (std::size_t i = 0; i < b.size(); ++i) {
            double model;
            try {
                model = resonance_frequency(g, sq, ax.phi(b[i]));
            } catch (const Error&) {
                model = std::numeric_limits<double>::quiet_NaN();
            }
            r[static_cast<Eigen::Index>(i)] = model - f[i];
        }
        return r;
    };

    const fit::Outcome out = fit::solve(prob);
    if (!out.converged())
        throw Error(Errc::FitDiverged, "flux map fit did not converge");
    const auto err = out.std_errors();
    FluxMapFit res;
    res.squid = {out.params[0], d};
    res.geometry = {out.params[1], np == 5 ? out.params[4] : geom_guess.z0};
    res.axis = {out.params[2], out.params[3]};
    res.i_c_err = err[0];
    res.f0_bare_err = err[1];
    res.offset_err = err[2];
    res.area_eff_err = err[3];
    res.residual_rms = out.rms;
    res.iterations = out.iterations;
    return res;
}

}  // namespace emtwin
