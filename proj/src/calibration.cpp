#include "emtwin/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emtwin/errors.hpp"
#include "emtwin/fit_engine.hpp"

namespace emtwin {

namespace {

struct WindowData {
    std::vector<double> f;
    std::vector<double> y;
};

WindowData select(const Spectrum& spec, const PeakWindow& w) {
    WindowData d;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double f = spec.f[i];
        if (f < w.f_lo || f > w.f_hi) continue;
        bool skip = false;
        for (const auto& [lo, hi] : w.exclude) skip = skip || (f >= lo && f <= hi);
        if (skip) continue;
        d.f.push_back(f);
        d.y.push_back(spec.values[i]);
    }
    return d;
}

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// p = [f0 - f_ref, fwhm, area, floor]
double peak_model(const fit::Vector& p, double f_ref, double f) {
    return p[3] + p[2] * lorentzian(f, f_ref + p[0], p[1]);
}

}  // namespace

LorentzianPeakFit fit_lorentzian_peak(const Spectrum& spec, const PeakWindow& window) {
    spec.validate();
    const WindowData d = select(spec, window);
    if (d.f.size() < 8) throw Error(Errc::InvalidArgument, "peak window holds fewer than 8 bins");
    const double spacing = spec.max_spacing();

    // starting point: floor from the median, peak from the maximum, width from the half-max count
    const double floor0 = median(d.y);
    const auto imax = static_cast<std::size_t>(std::max_element(d.y.begin(), d.y.end()) - d.y.begin());
    const double height0 = d.y[imax] - floor0;
    if (!(height0 > 0)) throw Error(Errc::FitDiverged, "no peak above the floor in the window");
    std::size_t above = 0;
    for (double v : d.y) above += (v - floor0 > 0.5 * height0) ? 1 : 0;
    const double fwhm0 = std::max(static_cast<double>(above) * spacing, 2.0 * spacing);
    const double f_ref = d.f[imax];

    fit::Problem prob;
    prob.initial = fit::Vector(4);
    prob.initial << 0.0, fwhm0, 0.5 * std::numbers::pi * fwhm0 * height0, floor0;
    prob.lower = fit::Vector(4);
    prob.lower << -fit::unbounded, 0.0, 0.0, -fit::unbounded;
    prob.upper = fit::Vector::Constant(4, fit::unbounded);
    prob.scale = fit::Vector(4);
    prob.scale << fwhm0, fwhm0, prob.initial[2], std::max(std::abs(floor0), height0);

    const auto n = static_cast<Eigen::Index>(d.f.size());
    std::vector<double> weight(d.f.size(), 1.0);
    prob.residuals = [&](const fit::Vector& p) {
        fit::Vector r(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            r[i] = weight[k] * (peak_model(p, f_ref, d.f[k]) - d.y[k]);
        }
        return r;
    };

    fit::Outcome out = fit::solve(prob);
    if (!out.converged()) throw Error(Errc::FitDiverged, "Lorentzian fit did not converge");

    // second pass with sigma_i = model_i / sqrt(n_avg) frozen from the first pass
    bool weighted = false;
    double min_model = fit::unbounded;
    for (double f : d.f) min_model = std::min(min_model, peak_model(out.params, f_ref, f));
    if (min_model > 0) {
        const double rt = std::sqrt(static_cast<double>(spec.n_avg));
        for (std::size_t k = 0; k < d.f.size(); ++k) weight[k] = rt / peak_model(out.params, f_ref, d.f[k]);
        prob.initial = out.params;
        prob.initial[1] = std::max(prob.initial[1], 1e-3 * fwhm0);
        prob.initial[2] = std::max(prob.initial[2], 1e-9 * prob.scale[2]);
        out = fit::solve(prob);
        if (!out.converged()) throw Error(Errc::FitDiverged, "weighted Lorentzian fit did not converge");
        weighted = true;
    }

    LorentzianPeakFit res;
    res.f0 = f_ref + out.params[0];
    res.fwhm = out.params[1];
    res.area = out.params[2];
    res.floor = out.params[3];
    res.peak = 2.0 * res.area / (std::numbers::pi * res.fwhm);
    const auto err = out.std_errors();
    res.f0_err = err[0];
    res.fwhm_err = err[1];
    res.area_err = err[2];
    res.floor_err = err[3];
    // peak = 2 A / (pi w): relative errors add with the A-w correlation
    const double ra = res.area > 0 ? 1.0 / res.area : 0.0;
    const double rw = 1.0 / res.fwhm;
    const double rel_var = out.covariance(2, 2) * ra * ra + out.covariance(1, 1) * rw * rw -
                           2.0 * out.covariance(1, 2) * ra * rw;
    res.peak_err = res.peak * std::sqrt(std::max(rel_var, 0.0));
    res.reduced_chi2 = out.reduced_chi2;
    res.weighted = weighted;
    res.iterations = out.iterations;

    if (res.fwhm < 3.0 * spacing)
        throw Error(Errc::PeakTooNarrow, "fitted FWHM " + std::to_string(res.fwhm) +
                                             " Hz spans fewer than 3 bins");
    if (res.f0 < window.f_lo || res.f0 > window.f_hi)
        throw Error(Errc::FitDiverged, "fitted centre left the window");
    const bool inadequate = weighted ? res.reduced_chi2 > 4.0 : out.rms > 1e-3 * res.peak;
    if (inadequate)
        throw Error(Errc::FitDiverged, "a single Lorentzian does not describe the window (reduced chi2 " +
                                           std::to_string(res.reduced_chi2) + ")");
    if (weighted) {
        // local excess: chi2 over sliding blocks one linewidth wide
        const double rt = std::sqrt(static_cast<double>(spec.n_avg));
        fit::Vector z(static_cast<Eigen::Index>(d.f.size()));
        for (std::size_t i = 0; i < d.f.size(); ++i) {
            const double m = peak_model(out.params, f_ref, d.f[i]);
            z[static_cast<Eigen::Index>(i)] = rt * (d.y[i] - m) / m;
        }
        const auto k = std::min<Eigen::Index>(
            z.size(), std::max<Eigen::Index>(3, static_cast<Eigen::Index>(std::lround(res.fwhm / spacing))));
        const double limit = static_cast<double>(k) + 15.0 * std::sqrt(2.0 * static_cast<double>(k));
        double block = z.head(k).squaredNorm();
        double worst = block;
        for (Eigen::Index i = k; i < z.size(); ++i) {
            block += z[i] * z[i] - z[i - k] * z[i - k];
            worst = std::max(worst, block);
        }
        if (worst > limit)
            throw Error(Errc::FitDiverged, "residuals cluster above a single Lorentzian (block chi2 " +
                                               std::to_string(worst) + " over " + std::to_string(k) + " bins)");
    }
    return res;
}

namespace {

// area and floor only, shape fixed by the hint; linear least squares
std::pair<LorentzianPeakFit, bool> fixed_shape_fit(const Spectrum& spec, const PeakWindow& window,
                                                   const PeakHint& hint) {
    const WindowData d = select(spec, window);
    const auto n = static_cast<Eigen::Index>(d.f.size());
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        X(i, 0) = lorentzian(d.f[k], hint.f_m, hint.gamma_m);
        X(i, 1) = 1.0;
        y[i] = d.y[k];
    }
    // weights from the floor level: the peak is insignificant by assumption
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd resid = y - X * beta;
    const double s2 = resid.squaredNorm() / static_cast<double>(n - 2);
    const Eigen::MatrixXd cov = s2 * (X.transpose() * X).inverse();
    LorentzianPeakFit res;
    res.f0 = hint.f_m;
    res.fwhm = hint.gamma_m;
    res.area = beta[0];
    res.floor = beta[1];
    res.area_err = std::sqrt(cov(0, 0));
    res.floor_err = std::sqrt(cov(1, 1));
    res.peak = 2.0 * res.area / (std::numbers::pi * res.fwhm);
    return {res, res.area > 3.0 * res.area_err};
}

}  // namespace

GZeroResult extract_g0(const Spectrum& spec, const CalibrationTone& tone, double n_th, double transfer_y,
                       std::optional<PeakHint> hint) {
    if (spec.unit != SpectrumUnit::VoltsSquaredPerHz)
        throw Error(Errc::UnitMismatch, "extract_g0 expects a V^2/Hz spectrum");
    spec.validate();
    tone.validate();
    if (!(n_th > 0) || !(transfer_y > 0))
        throw Error(Errc::InvalidArgument, "n_th and Y must be positive");
    if (!spec.contains(tone.f_mod))
        throw Error(Errc::MissingCalTone, "calibration frequency outside the spectrum");
    if (!(tone.phi0 > 0)) throw Error(Errc::MissingCalTone, "calibration tone has zero depth");

    const std::size_t cal = spec.nearest_bin(tone.f_mod);
    const double spacing = spec.max_spacing();
    PeakWindow window{spec.f.front(), spec.f.back(),
                      {{spec.f[cal] - 2.5 * spacing, spec.f[cal] + 2.5 * spacing}}};

    LorentzianPeakFit peak;
    bool significant = true;
    try {
        peak = fit_lorentzian_peak(spec, window);
        significant = peak.area > 3.0 * peak.area_err;
    } catch (const Error&) {
        if (!hint) throw;
        significant = false;
    }
    if (!significant && hint) std::tie(peak, significant) = fixed_shape_fit(spec, window, *hint);

    const double tail = peak.area * lorentzian(spec.f[cal], peak.f0, peak.fwhm);
    const double background = peak.floor + std::max(tail, 0.0);
    const double excess = spec.values[cal] - background;
    const double rt = std::sqrt(static_cast<double>(spec.n_avg));
    const double sigma_bin = std::abs(background) / rt;
    if (!(excess > 5.0 * sigma_bin) || !(excess > 0))
        throw Error(Errc::MissingCalTone, "no calibration peak above the floor at f_mod");

    const double k = tone.phi0 * tone.phi0 * tone.f_mod * tone.f_mod /
                     (4.0 * transfer_y * n_th * spec.enbw * excess);
    GZeroResult res;
    res.area = peak.area;
    res.area_err = peak.area_err;
    res.cal_excess = excess;
    res.floor = peak.floor;
    res.f_m_fit = peak.f0;
    res.gamma_m_fit = peak.fwhm;
    res.peak_significant = significant;
    res.g0 = std::sqrt(std::max(peak.area, 0.0) * k);
    const double excess_err = spec.values[cal] / rt;
    if (significant) {
        const double ra = peak.area_err / peak.area;
        const double rc = excess_err / excess;
        res.std_err = 0.5 * res.g0 * std::sqrt(ra * ra + rc * rc);
    } else {
        // g0^2 is uncertain by k * area_err; quote the matching g0 scale
        res.std_err = std::sqrt(k * peak.area_err);
    }
    return res;
}

double photon_number(const ProbeTone& tone, const LineshapeParams& line) {
    const double half = 0.5 * line.kappa();
    const double flux = tone.power / (constants::hbar * angular(tone.f_p));  // photons / s
    return flux * line.kappa_ext / (constants::two_pi * (half * half + tone.detuning * tone.detuning));
}

double gamma_em(double g0, double n_cav, const LineshapeParams& line, double detuning, double f_m) {
    // angular rates: Gamma = g^2 n [k/((k/2)^2+(D+W)^2) - k/((k/2)^2+(D-W)^2)];
    // the 2 pi factors cancel to leave the same expression in Hz.
    const double k = line.kappa();
    const double h2 = 0.25 * k * k;
    const double plus = detuning + f_m;
    const double minus = detuning - f_m;
    return g0 * g0 * n_cav * (k / (h2 + plus * plus) - k / (h2 + minus * minus));
}

double effective_occupation(double n_th, double gamma_m, double gamma_em_hz) {
    const double total = gamma_m + gamma_em_hz;
    if (!(total > 0))
        throw Error(Errc::InstabilityThreshold, "gamma_m + gamma_em <= 0: parametric instability");
    return n_th * gamma_m / total;
}

std::complex<double> susceptibility(double f, const MechanicalMode& mode) {
    const double w = angular(f);
    const double wm = angular(mode.f_m());
    const double g = angular(mode.gamma_m());
    return 1.0 / (mode.m_eff() * std::complex<double>(w * w - wm * wm, -g * w));
}

Spectrum force_sensitivity(const Spectrum& sxx, const MechanicalMode& mode) {
    if (sxx.unit != SpectrumUnit::MetresSquaredPerHz)
        throw Error(Errc::UnitMismatch, "force sensitivity needs an m^2/Hz spectrum");
    Spectrum out = sxx;
    out.unit = SpectrumUnit::NewtonsSquaredPerHz;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = 2.0 * sxx.values[i] / std::norm(susceptibility(sxx.f[i], mode));
    return out;
}

double thermal_force_psd(double temperature, const MechanicalMode& mode) {
    return 16.0 * std::numbers::pi * constants::k_B * temperature * mode.m_eff() * mode.gamma_m();
}

}  // namespace emtwin
