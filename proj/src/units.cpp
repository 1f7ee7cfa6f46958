#include "emtwin/units.hpp"

#include "emtwin/errors.hpp"

#include <cmath>
#include <string>

namespace emtwin {

MechanicalMode::MechanicalMode(double f_m, double gamma_m, double m_eff, double length,
                               double modeshape_factor)
    : f_m_(f_m), gamma_m_(gamma_m), m_eff_(m_eff), length_(length), modeshape_(modeshape_factor) {
    if (!(f_m > 0) || !(gamma_m > 0) || !(m_eff > 0) || !(length > 0))
        throw Error(Errc::InvalidArgument, "mechanical mode fields must be positive");
    if (!(modeshape_factor > 0 && modeshape_factor <= 1))
        throw Error(Errc::InvalidArgument, "modeshape factor must lie in (0, 1]");
    if (!(gamma_m < f_m / 10))
        throw Error(Errc::InvalidArgument,
                    "linewidth " + std::to_string(gamma_m) + " Hz violates gamma_m < f_m/10");
}

MechanicalMode MechanicalMode::with_gamma(double gamma_m) const {
    return {f_m_, gamma_m, m_eff_, length_, modeshape_};
}

ThermalState ThermalState::at(double f_m, double temperature) {
    return {temperature, thermal_occupation(f_m, temperature)};
}

double zero_point_fluctuation(const MechanicalMode& mode) {
    return std::sqrt(constants::hbar / (2.0 * mode.m_eff() * angular(mode.f_m())));
}

double thermal_occupation(double f_m, double temperature) {
    if (!(temperature > 0) || !(f_m > 0))
        throw Error(Errc::InvalidArgument, "thermal occupation needs T > 0 and f > 0");
    const double x = constants::hbar * angular(f_m) / (constants::k_B * temperature);
    // expm1 keeps full precision in the high-temperature limit x -> 0
    return 1.0 / std::expm1(x);
}

}  // namespace emtwin
