#include "emtwin/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emtwin/errors.hpp"
#include "emtwin/kernels.hpp"

namespace emtwin {

std::string_view to_string(SpectrumUnit unit) {
    switch (unit) {
    case SpectrumUnit::VoltsSquaredPerHz: return "V^2/Hz";
    case SpectrumUnit::MetresSquaredPerHz: return "m^2/Hz";
    case SpectrumUnit::HzSquaredPerHz: return "Hz^2/Hz";
    case SpectrumUnit::NewtonsSquaredPerHz: return "N^2/Hz";
    case SpectrumUnit::Dimensionless: return "1";
    }
    return "?";
}

SpectrumUnit parse_spectrum_unit(std::string_view text) {
    for (auto u : {SpectrumUnit::VoltsSquaredPerHz, SpectrumUnit::MetresSquaredPerHz,
                   SpectrumUnit::HzSquaredPerHz, SpectrumUnit::NewtonsSquaredPerHz,
                   SpectrumUnit::Dimensionless})
        if (text == to_string(u)) return u;
    if (text == "dimensionless") return SpectrumUnit::Dimensionless;
    throw Error(Errc::Parse, "unknown spectrum unit '" + std::string(text) + "'");
}

void Spectrum::validate() const {
    if (f.size() != values.size())
        throw Error(Errc::InvalidArgument, "frequency and value arrays differ in length");
    if (f.empty()) throw Error(Errc::InvalidArgument, "empty spectrum");
    if (n_avg < 1) throw Error(Errc::InvalidArgument, "n_avg must be >= 1");
    for (std::size_t i = 1; i < f.size(); ++i)
        if (!(f[i] > f[i - 1])) throw Error(Errc::InvalidArgument, "frequency axis not strictly increasing");
    if (is_psd()) {
        for (double v : values)
            if (!(v >= 0)) throw Error(Errc::InvalidArgument, "PSD values must be non-negative");
        if (f.size() > 1 && !(enbw >= max_spacing() * (1.0 - 1e-9)))
            throw Error(Errc::InvalidArgument, "enbw smaller than the bin spacing");
    }
}

double Spectrum::max_spacing() const {
    double m = 0;
    for (std::size_t i = 1; i < f.size(); ++i) m = std::max(m, f[i] - f[i - 1]);
    return m;
}

std::size_t Spectrum::nearest_bin(double freq) const {
    const auto it = std::lower_bound(f.begin(), f.end(), freq);
    if (it == f.begin()) return 0;
    if (it == f.end()) return f.size() - 1;
    const auto i = static_cast<std::size_t>(it - f.begin());
    return (freq - f[i - 1] <= f[i] - freq) ? i - 1 : i;
}

bool Spectrum::contains(double freq) const {
    if (f.empty()) return false;
    const double half = 0.5 * (f.size() > 1 ? max_spacing() : enbw);
    return freq >= f.front() - half && freq <= f.back() + half;
}

std::vector<double> linspace(double start, double stop, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = start;
        return v;
    }
    const double step = (stop - start) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = start + step * static_cast<double>(i);
    v.back() = stop;
    return v;
}

void CalibrationTone::validate() const {
    if (!(f_mod > 0)) throw Error(Errc::InvalidArgument, "calibration f_mod must be positive");
    if (!(phi0 >= 0 && phi0 < 0.1))
        throw Error(Errc::InvalidArgument, "calibration phi0 must lie in [0, 0.1)");
}

void DetectionChain::validate() const {
    if (!(gain > 0) || !(s_imp >= 0) || !(transfer_ratio_Y > 0))
        throw Error(Errc::InvalidArgument, "detection chain needs gain > 0, s_imp >= 0, Y > 0");
}

double lorentzian(double f, double f0, double fwhm) {
    const double half = 0.5 * fwhm;
    const double d = f - f0;
    return (fwhm / (2.0 * std::numbers::pi)) / (d * d + half * half);
}

double sxx_thermal(double f, const MechanicalMode& mode, const ThermalState& th) {
    const double x = zero_point_fluctuation(mode);
    return x * x * 2.0 * th.n_th * lorentzian(f, mode.f_m(), mode.gamma_m());
}

double s_freq_mech(double f, double g0, const MechanicalMode& mode, const ThermalState& th) {
    return g0 * g0 * 2.0 * th.n_th * lorentzian(f, mode.f_m(), mode.gamma_m());
}

double s_freq_cal(const CalibrationTone& tone, double enbw) {
    if (!(enbw > 0)) throw Error(Errc::InvalidArgument, "enbw must be positive");
    return tone.variance() / enbw;
}

std::size_t calibration_bin(std::span<const double> f, const CalibrationTone& tone) {
    Spectrum probe;
    probe.f.assign(f.begin(), f.end());
    probe.enbw = 0;
    if (!probe.contains(tone.f_mod))
        throw Error(Errc::InvalidArgument, "calibration tone outside the spectrum range");
    return probe.nearest_bin(tone.f_mod);
}

Spectrum suu_forward(std::span<const double> f, double enbw, double g0, const MechanicalMode& mode,
                     const ThermalState& th, const CalibrationTone& tone, const DetectionChain& chain) {
    chain.validate();
    tone.validate();
    Spectrum s;
    s.f.assign(f.begin(), f.end());
    s.values.resize(f.size());
    s.unit = SpectrumUnit::VoltsSquaredPerHz;
    s.enbw = enbw;
    s.n_avg = 1;
    const kernels::SuuModel m{g0, th.n_th, mode.f_m(), mode.gamma_m(), chain.gain,
                              chain.transfer_ratio_Y, chain.s_imp};
    kernels::omp::suu(s.f, m, s.values);
    if (tone.phi0 > 0) s.values[calibration_bin(s.f, tone)] += chain.gain * s_freq_cal(tone, enbw);
    s.validate();
    return s;
}

Spectrum synthesize_noise(const Spectrum& clean, int n_avg, std::uint64_t seed) {
    if (n_avg < 1) throw Error(Errc::InvalidArgument, "n_avg must be >= 1");
    Spectrum out = clean;
    out.n_avg = n_avg;
    kernels::omp::gamma_noise(clean.values, n_avg, seed, out.values);
    return out;
}

Spectrum add_gaussian_noise(const Spectrum& clean, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0)) throw Error(Errc::InvalidArgument, "noise sigma must be >= 0");
    Spectrum out = clean;
    kernels::omp::gaussian_noise(clean.values, sigma, seed, out.values);
    return out;
}

DisplacementSpectrum suu_to_sxx(const Spectrum& meas, double g0, const MechanicalMode& mode,
                                const DetectionChain& chain, std::optional<double> floor) {
    if (meas.unit != SpectrumUnit::VoltsSquaredPerHz)
        throw Error(Errc::UnitMismatch, "expected a V^2/Hz spectrum");
    if (!(g0 > 0) || !(chain.gain > 0))
        throw Error(Errc::InvalidArgument, "g0 and chain gain must be known and positive");
    const double x = zero_point_fluctuation(mode);
    const double scale = x * x / (chain.gain * chain.transfer_ratio_Y * g0 * g0);
    const double bg = floor.value_or(chain.s_imp);
    DisplacementSpectrum out;
    out.sxx = meas;
    out.sxx.unit = SpectrumUnit::MetresSquaredPerHz;
    for (double& v : out.sxx.values) {
        const double excess = v - bg;
        if (excess < 0) {
            ++out.clipped;
            v = 0;
        } else {
            v = excess * scale;
        }
    }
    return out;
}

double transfer_ratio_estimate(const LineshapeParams& line, double detuning, double f_m, double f_mod) {
    const double half = 0.5 * line.kappa();
    const double dm = detuning - f_m;
    const double dc = detuning - f_mod;
    return (half * half + dc * dc) / (half * half + dm * dm);
}

}  // namespace emtwin
