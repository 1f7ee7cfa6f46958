#include "emtwin/lineshape.hpp"

#include <algorithm>
#include <cmath>

#include "emtwin/errors.hpp"
#include "emtwin/fit_engine.hpp"

namespace emtwin {

double LineshapeParams::depth() const {
    const double k = kappa();
    return 4.0 * kappa_ext * kappa_int / (k * k);
}

void LineshapeParams::validate() const {
    if (!(kappa_ext > 0) || !(kappa_int >= 0))
        throw Error(Errc::InvalidArgument, "need kappa_ext > 0 and kappa_int >= 0");
}

double s21_squared(double delta, const LineshapeParams& p) {
    const double k = p.kappa();
    const double half = 0.5 * k;
    return 1.0 - p.kappa_ext * (k - p.kappa_ext) / (half * half + delta * delta);
}

LineshapeParams guess_resonance(const Spectrum& trace) {
    if (trace.size() < 5) throw Error(Errc::InvalidArgument, "trace too short to guess a resonance");
    const auto imin = static_cast<std::size_t>(
        std::min_element(trace.values.begin(), trace.values.end()) - trace.values.begin());
    // baseline from the outer tenth of the trace on both sides
    const std::size_t edge = std::max<std::size_t>(1, trace.size() / 10);
    double base = 0;
    for (std::size_t i = 0; i < edge; ++i) base += trace.values[i] + trace.values[trace.size() - 1 - i];
    base /= static_cast<double>(2 * edge);
    const double vmin = trace.values[imin];
    const double depth = std::clamp(1.0 - vmin / base, 0.05, 1.0);
    const double half_level = base - 0.5 * (base - vmin);
    std::size_t lo = imin;
    while (lo > 0 && trace.values[lo] < half_level) --lo;
    std::size_t hi = imin;
    while (hi + 1 < trace.size() && trace.values[hi] < half_level) ++hi;
    const double kappa = std::max(trace.f[hi] - trace.f[lo], 2.0 * trace.max_spacing());
    const double s = std::sqrt(1.0 - depth);
    return {trace.f[imin], 0.5 * kappa * (1.0 - s), 0.5 * kappa * (1.0 + s)};
}

ResonanceFit fit_resonance(const Spectrum& trace, const LineshapeParams& guess,
                           const ResonanceFitOptions& options) {
    trace.validate();
    guess.validate();
    const double k0 = guess.kappa();
    if (trace.size() < 8 || trace.f.back() - trace.f.front() < 5.0 * k0)
        throw Error(Errc::InsufficientSpan, "trace must span at least 5 linewidths");
    for (double v : trace.values)
        if (!(v >= -0.1 && v <= 1.1))
            throw Error(Errc::InvalidArgument, "transmission values must lie in [0, 1] (+-0.1)");

    const double f_ref = guess.f_c;
    const Eigen::Index n = static_cast<Eigen::Index>(trace.size());
    // p = [f_c - f_ref, kappa, depth, background]
    fit::Problem prob;
    prob.initial = fit::Vector(4);
    prob.initial << 0.0, k0, std::clamp(guess.depth(), 1e-6, 1.0), 1.0;
    prob.lower = fit::Vector(4);
    prob.lower << -fit::unbounded, 0.0, 0.0, 0.0;
    prob.upper = fit::Vector(4);
    prob.upper << fit::unbounded, fit::unbounded, 1.0, fit::unbounded;
    prob.scale = fit::Vector(4);
    prob.scale << k0, k0, 1.0, 1.0;
    prob.residuals = [&](const fit::Vector& p) {
        fit::Vector r(n);
        const double half = 0.5 * p[1];
        const double h2 = half * half;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = trace.f[static_cast<std::size_t>(i)] - f_ref - p[0];
            const double model = p[3] * (1.0 - p[2] * h2 / (h2 + d * d));
            r[i] = model - trace.values[static_cast<std::size_t>(i)];
        }
        return r;
    };
    const fit::Outcome out = fit::solve(prob);
    if (!out.converged()) throw Error(Errc::FitDiverged, "resonance fit did not converge");

    const double kappa = out.params[1];
    const double depth = out.params[2];
    const double s = std::sqrt(std::max(1.0 - depth, 0.0));
    const double k_small = 0.5 * kappa * (1.0 - s);
    const double k_large = 0.5 * kappa * (1.0 + s);
    const double f_c = f_ref + out.params[0];

    // first-order propagation from (kappa, depth) to the two roots
    const double c_kk = out.covariance(1, 1);
    const double c_dd = out.covariance(2, 2);
    const double c_kd = out.covariance(1, 2);
    const double ds = s > 1e-12 ? kappa / (4.0 * s) : 0.0;
    auto var = [&](double a, double b) { return a * a * c_kk + b * b * c_dd + 2 * a * b * c_kd; };
    const double var_small = var(0.5 * (1.0 - s), ds);
    const double var_large = var(0.5 * (1.0 + s), -ds);
    const double var_diff = var(s, s > 1e-12 ? -kappa / (2.0 * s) : 0.0);

    ResonanceFit res;
    const bool under = options.prefer == CouplingRoot::Undercoupled;
    res.params = {f_c, under ? k_small : k_large, under ? k_large : k_small};
    res.alternate = {f_c, res.params.kappa_int, res.params.kappa_ext};
    res.kappa_ext_err = std::sqrt(std::max(under ? var_small : var_large, 0.0));
    res.kappa_int_err = std::sqrt(std::max(under ? var_large : var_small, 0.0));
    res.kappa_err = std::sqrt(std::max(c_kk, 0.0));
    res.f_c_err = std::sqrt(std::max(out.covariance(0, 0), 0.0));
    res.background = out.params[3];
    res.background_err = std::sqrt(std::max(out.covariance(3, 3), 0.0));
    res.residual_rms = out.rms;
    res.iterations = out.iterations;
    res.coupling_ambiguous = (k_large - k_small) > std::sqrt(std::max(var_diff, 0.0));
    if (options.mechanical_frequency) res.resolved_sideband = *options.mechanical_frequency > kappa;
    return res;
}

}  // namespace emtwin
