#include "emtwin/bessel.hpp"

#include <algorithm>
#include <cmath>

#include "emtwin/errors.hpp"
#include "emtwin/fit_engine.hpp"
#include "emtwin/kernels.hpp"
#include "kernels_detail.hpp"

namespace emtwin {

std::vector<double> bessel_j_orders(int n_max, double x) {
    if (n_max < 0) throw Error(Errc::InvalidArgument, "Bessel order must be >= 0");
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const double ax = std::abs(x);
    // start well above both the largest order and the argument
    const double top = std::max(static_cast<double>(n_max), ax);
    int m = static_cast<int>(top + 30.0 + std::sqrt(60.0 * top));
    m += m % 2;

    double j_next = 0.0;
    double j_cur = 1e-300;
    double norm = 0.0;  // J_0 + 2 sum J_2k
    for (int k = m; k >= 1; --k) {
        const double j_prev = 2.0 * k / ax * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if (k - 1 <= n_max) out[static_cast<std::size_t>(k - 1)] = j_cur;
        if ((k - 1) % 2 == 0) norm += (k - 1 == 0) ? j_cur : 2.0 * j_cur;
        if (std::abs(j_cur) > 1e250) {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            for (int i = k - 1; i <= n_max; ++i) out[static_cast<std::size_t>(i)] *= 1e-250;
        }
    }
    // the ordering guarantees out[m..] never written; orders above m are zero to working precision
    for (double& v : out) v /= norm;
    if (x < 0)
        for (int n = 1; n <= n_max; n += 2) out[static_cast<std::size_t>(n)] = -out[static_cast<std::size_t>(n)];
    return out;
}

double bessel_j(int n, double x) {
    const int an = std::abs(n);
    const double v = bessel_j_orders(an, x)[static_cast<std::size_t>(an)];
    return (n < 0 && (an % 2)) ? -v : v;
}

double sum_rule_deficit(double beta, int n_max) {
    const auto j = bessel_j_orders(n_max, beta);
    double s = j[0] * j[0];
    for (int n = 1; n <= n_max; ++n) s += 2.0 * j[static_cast<std::size_t>(n)] * j[static_cast<std::size_t>(n)];
    return 1.0 - s;
}

int required_orders(double beta, double tol) {
    int n = std::max(default_sideband_orders, static_cast<int>(std::ceil(std::abs(beta) + 10.0)));
    while (sum_rule_deficit(beta, n) >= tol) n += 2;
    return n;
}

double modulation_index(double g0, double x0, double x_zpf, double f_m) {
    return g0 * x0 / (x_zpf * f_m);
}

namespace {

std::vector<double> ladder_weights(double beta, int n_max) {
    const auto j = bessel_j_orders(n_max, beta);
    std::vector<double> w(static_cast<std::size_t>(2 * n_max + 1));
    double total = 0;
    for (int n = 0; n <= n_max; ++n) {
        const double jj = j[static_cast<std::size_t>(n)] * j[static_cast<std::size_t>(n)];
        w[static_cast<std::size_t>(n_max + n)] = jj;
        w[static_cast<std::size_t>(n_max - n)] = jj;
        total += n == 0 ? jj : 2.0 * jj;
    }
    if (total < 1.0 - 1e-6)
        throw Error(Errc::NonConvergedSum, "|n| <= " + std::to_string(n_max) + " keeps only " +
                                               std::to_string(total) + " of the Bessel weight at beta = " +
                                               std::to_string(beta));
    return w;
}

}  // namespace

double s21_driven(double delta, const LineshapeParams& line, double beta, double f_m, int n_max) {
    const auto w = ladder_weights(beta, n_max);
    return kernels::detail::s21_driven_point(delta, {line.kappa_ext, line.kappa(), f_m, w});
}

std::vector<double> s21_driven_trace(std::span<const double> delta, const LineshapeParams& line,
                                     double beta, double f_m, int n_max) {
    const auto w = ladder_weights(beta, n_max);
    std::vector<double> out(delta.size());
    kernels::omp::s21_driven(delta, {line.kappa_ext, line.kappa(), f_m, w}, out);
    return out;
}

double coherent_phonon_number(double x0, double x_zpf) {
    const double r = x0 / (2.0 * x_zpf);
    return r * r;
}

std::vector<double> amplitude_scan(std::span<const double> delta, std::span<const double> y,
                                   const LineshapeParams& line, double f_m, std::span<const double> betas) {
    std::vector<double> sse(betas.size());
    kernels::omp::amplitude_scan(delta, y, line, f_m, betas, sse);
    return sse;
}

AmplitudeFit fit_amplitude(const Spectrum& trace, const LineshapeParams& line, double g0,
                           const MechanicalMode& mode, const AmplitudeFitOptions& options) {
    trace.validate();
    line.validate();
    if (!(g0 > 0)) throw Error(Errc::InvalidArgument, "g0 must be positive");
    const double f_m = mode.f_m();
    std::vector<double> delta(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) delta[i] = trace.f[i] - line.f_c;

    const auto n_grid = static_cast<std::size_t>(std::floor(options.beta_max / options.scan_step)) + 1;
    std::vector<double> betas(n_grid);
    for (std::size_t k = 0; k < n_grid; ++k) betas[k] = options.scan_step * static_cast<double>(k);
    const auto sse = amplitude_scan(delta, trace.values, line, f_m, betas);
    const auto best = static_cast<std::size_t>(std::min_element(sse.begin(), sse.end()) - sse.begin());
    const double beta0 = betas[best];
    if (beta0 < 0.3)
        throw Error(Errc::BelowSplittingThreshold,
                    "best modulation index " + std::to_string(beta0) + " < 0.3; splitting not resolved");

    const auto n = static_cast<Eigen::Index>(trace.size());
    const double k = line.kappa();
    const double h2 = 0.25 * k * k;
    const double coupling = line.kappa_ext * (k - line.kappa_ext);

    AmplitudeFit res;
    int n_max = required_orders(beta0 + 2.0 * options.scan_step);
    for (int attempt = 0; attempt < 8; ++attempt) {
        fit::Problem prob;
        prob.initial = fit::Vector(2);
        prob.initial << std::max(beta0, options.scan_step), 1.0;
        prob.lower = fit::Vector::Zero(2);
        prob.upper = fit::Vector::Constant(2, fit::unbounded);
        prob.scale = fit::Vector::Ones(2);
        prob.residuals = [&, n_max](const fit::Vector& p) {
            const auto j = bessel_j_orders(n_max, p[0]);
            fit::Vector r(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d0 = delta[static_cast<std::size_t>(i)];
                double sum = 0;
                for (int m = -n_max; m <= n_max; ++m) {
                    const double jm = j[static_cast<std::size_t>(std::abs(m))];
                    const double d = d0 + m * f_m;
                    sum += jm * jm / (h2 + d * d);
                }
                const double model = std::clamp(1.0 - coupling * sum, 0.0, 1.0);
                r[i] = p[1] * model - trace.values[static_cast<std::size_t>(i)];
            }
            return r;
        };
        const fit::Outcome out = fit::solve(prob);
        if (!out.converged()) throw Error(Errc::FitDiverged, "amplitude fit did not converge");
        const double beta = out.params[0];
        if (sum_rule_deficit(beta, n_max) >= 1e-6) {
            n_max = required_orders(beta);
            continue;
        }
        const auto err = out.std_errors();
        res.beta = beta;
        res.beta_err = err[0];
        res.background = out.params[1];
        res.background_err = err[1];
        res.n_max = n_max;
        res.residual_rms = out.rms;
        res.iterations = out.iterations;
        break;
    }
    if (res.beta == 0) throw Error(Errc::FitDiverged, "could not meet the Bessel sum rule");
    if (res.beta < 0.3)
        throw Error(Errc::BelowSplittingThreshold,
                    "fitted modulation index " + std::to_string(res.beta) + " < 0.3");
    const double x_zpf = zero_point_fluctuation(mode);
    res.x0 = res.beta * x_zpf * f_m / g0;
    res.x0_err = res.beta_err * x_zpf * f_m / g0;
    return res;
}

PowerLawFit power_law_regression(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3)
        throw Error(Errc::InvalidArgument, "power-law regression needs >= 3 paired points");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !(y[i] > 0))
            throw Error(Errc::InvalidArgument, "power-law regression needs positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    PowerLawFit fit;
    fit.n = x.size();
    fit.exponent = sxy / sxx;
    const double intercept = my - fit.exponent * mx;
    fit.prefactor = std::exp(intercept);
    const double ssr = std::max(syy - fit.exponent * sxy, 0.0);
    fit.r_squared = syy > 0 ? 1.0 - ssr / syy : 1.0;
    fit.exponent_err = std::sqrt(ssr / (n - 2.0) / sxx);
    return fit;
}

SweepResult fit_sweep(std::span<const DriveSweep> sweep, const LineshapeParams& line, double g0,
                      const MechanicalMode& mode, const AmplitudeFitOptions& options) {
    SweepResult result;
    const double x_zpf = zero_point_fluctuation(mode);
    for (const auto& item : sweep) {
        try {
            const AmplitudeFit fit = fit_amplitude(item.trace, line, g0, mode, options);
            result.rows.push_back({item.v_piezo, fit, coherent_phonon_number(fit.x0, x_zpf)});
        } catch (const Error& e) {
            result.failures.push_back({item.v_piezo, e.what()});
        }
    }
    return result;
}

}  // namespace emtwin
