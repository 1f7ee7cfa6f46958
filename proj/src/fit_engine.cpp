#include "emtwin/fit_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace emtwin::fit {

const char* to_string(Termination t) {
    switch (t) {
    case Termination::Gradient: return "gradient";
    case Termination::Step: return "step";
    case Termination::Cost: return "cost";
    case Termination::ZeroResidual: return "zero_residual";
    case Termination::Stalled: return "stalled";
    case Termination::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

namespace {

enum class BoundKind { None, Lower, Upper, Both };

// Smooth map between the solver's unconstrained variable u and a parameter p.
struct Transform {
    BoundKind kind = BoundKind::None;
    double lo = -unbounded;
    double hi = unbounded;
    double scale = 1;

    double to_external(double u) const {
        switch (kind) {
        case BoundKind::None: return scale * u;
        case BoundKind::Lower: return lo + scale * (std::sqrt(u * u + 1.0) - 1.0);
        case BoundKind::Upper: return hi - scale * (std::sqrt(u * u + 1.0) - 1.0);
        case BoundKind::Both: return lo + (hi - lo) * 0.5 * (std::sin(u) + 1.0);
        }
        return u;
    }

    // dp/du and d2p/du2
    double d1(double u) const {
        switch (kind) {
        case BoundKind::None: return scale;
        case BoundKind::Lower: return scale * u / std::sqrt(u * u + 1.0);
        case BoundKind::Upper: return -scale * u / std::sqrt(u * u + 1.0);
        case BoundKind::Both: return 0.5 * (hi - lo) * std::cos(u);
        }
        return 1.0;
    }

    double d2(double u) const {
        const double c = std::pow(u * u + 1.0, -1.5);
        switch (kind) {
        case BoundKind::None: return 0.0;
        case BoundKind::Lower: return scale * c;
        case BoundKind::Upper: return -scale * c;
        case BoundKind::Both: return -0.5 * (hi - lo) * std::sin(u);
        }
        return 0.0;
    }

    double to_internal(double p) const {
        switch (kind) {
        case BoundKind::None: return p / scale;
        case BoundKind::Lower: {
            const double t = 1.0 + (p - lo) / scale;
            return std::sqrt(std::max(t * t - 1.0, 0.0));
        }
        case BoundKind::Upper: {
            const double t = 1.0 + (hi - p) / scale;
            return std::sqrt(std::max(t * t - 1.0, 0.0));
        }
        case BoundKind::Both: {
            const double t = std::clamp(2.0 * (p - lo) / (hi - lo) - 1.0, -1.0, 1.0);
            return std::asin(t);
        }
        }
        return p;
    }
};

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

Matrix forward_jacobian(const ResidualFn& fn, const Vector& params, const Vector& r0,
                        const Vector& scale) {
    const Eigen::Index n = params.size();
    Matrix jac(r0.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector p = params;
        const double h = std::max(1e-6 * std::abs(params[j]), 1e-9 * scale[j]);
        p[j] += h;
        const double step = p[j] - params[j];  // representable step
        jac.col(j) = (fn(p) - r0) / step;
    }
    return jac;
}

Outcome solve(const Problem& problem) {
    const Eigen::Index n = problem.initial.size();
    if (n == 0) throw Error(Errc::InvalidArgument, "fit problem has no parameters");
    if ((problem.lower.size() != 0 && problem.lower.size() != n) ||
        (problem.upper.size() != 0 && problem.upper.size() != n) ||
        (problem.scale.size() != 0 && problem.scale.size() != n))
        throw Error(Errc::InvalidArgument, "bounds/scale length does not match parameter count");

    std::vector<Transform> tf(static_cast<std::size_t>(n));
    Vector scale(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        auto& t = tf[static_cast<std::size_t>(j)];
        t.lo = problem.lower.size() ? problem.lower[j] : -unbounded;
        t.hi = problem.upper.size() ? problem.upper[j] : unbounded;
        if (!(t.lo <= t.hi) || t.lo == t.hi)
            throw Error(Errc::InvalidArgument, "bounds must satisfy lower < upper");
        const double p0 = problem.initial[j];
        if (!(p0 >= t.lo && p0 <= t.hi))
            throw Error(Errc::InvalidArgument, "initial parameter outside its bounds");
        double s = problem.scale.size() ? problem.scale[j] : std::abs(p0);
        if (!(s > 0) || !std::isfinite(s)) s = 1.0;
        t.scale = s;
        scale[j] = s;
        const bool has_lo = std::isfinite(t.lo);
        const bool has_hi = std::isfinite(t.hi);
        t.kind = has_lo && has_hi ? BoundKind::Both
                 : has_lo         ? BoundKind::Lower
                 : has_hi         ? BoundKind::Upper
                                  : BoundKind::None;
    }

    auto external = [&](const Vector& u) {
        Vector p(n);
        for (Eigen::Index j = 0; j < n; ++j) p[j] = tf[static_cast<std::size_t>(j)].to_external(u[j]);
        return p;
    };

    Outcome out;
    Vector u(n);
    for (Eigen::Index j = 0; j < n; ++j) u[j] = tf[static_cast<std::size_t>(j)].to_internal(problem.initial[j]);

    Vector p = external(u);
    Vector r = problem.residuals(p);
    ++out.evaluations;
    if (!all_finite(r)) throw Error(Errc::NonFiniteResidual, "residuals not finite at initial parameters");
    if (r.size() < n) throw Error(Errc::InvalidArgument, "fewer residuals than parameters");
    double cost = r.squaredNorm();
    out.cost_history.push_back(cost);

    double lambda = 1e-6;
    out.reason = Termination::MaxIterations;
    bool done = false;
    while (!done && out.iterations < problem.max_iterations) {
        if (cost == 0.0) {
            out.reason = Termination::ZeroResidual;
            break;
        }
        // Jacobian in external coordinates, chained through the transforms. Steps
        // that would leave a bound are taken backwards instead.
        Matrix Jp(r.size(), n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& t = tf[static_cast<std::size_t>(j)];
            Vector ph = p;
            double h = std::max(1e-6 * std::abs(p[j]), 1e-9 * t.scale);
            if (p[j] + h > t.hi) h = -h;
            ph[j] += h;
            Jp.col(j) = (problem.residuals(ph) - r) / (ph[j] - p[j]);
        }
        out.evaluations += static_cast<int>(n);
        if (!Jp.allFinite()) throw Error(Errc::NonFiniteResidual, "non-finite Jacobian");
        Vector dp(n), d2p(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            dp[j] = tf[static_cast<std::size_t>(j)].d1(u[j]);
            d2p[j] = tf[static_cast<std::size_t>(j)].d2(u[j]);
        }
        const Matrix J = Jp * dp.asDiagonal();
        Matrix JtJ = J.transpose() * J;
        const Vector g = J.transpose() * r;
        // curvature of the transform itself; keeps Newton steps sane where dp/du -> 0 at a bound
        const Vector gp = Jp.transpose() * r;
        for (Eigen::Index j = 0; j < n; ++j) JtJ(j, j) += std::max(gp[j] * d2p[j], 0.0);
        if (g.lpNorm<Eigen::Infinity>() < problem.gradient_tol) {
            out.reason = Termination::Gradient;
            break;
        }
        const double diag_floor = 1e-12 * std::max(JtJ.diagonal().maxCoeff(), 1e-300);

        // inner loop: raise damping until a step reduces the cost
        bool accepted = false;
        while (!accepted) {
            Matrix A = JtJ;
            for (Eigen::Index j = 0; j < n; ++j) A(j, j) += lambda * std::max(JtJ(j, j), diag_floor);
            const Vector delta = A.ldlt().solve(-g);
            const Vector u_new = u + delta;
            const Vector p_new = external(u_new);
            const Vector r_new = problem.residuals(p_new);
            ++out.evaluations;
            const double cost_new = r_new.allFinite() ? r_new.squaredNorm() : unbounded;
            if (delta.allFinite() && cost_new < cost) {
                const double reduction = cost - cost_new;
                const double step_rel = delta.norm() / (u.norm() + problem.step_tol);
                u = u_new;
                p = p_new;
                r = r_new;
                cost = cost_new;
                ++out.iterations;
                out.cost_history.push_back(cost);
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (step_rel < problem.step_tol) {
                    out.reason = Termination::Step;
                    done = true;
                } else if (reduction <= problem.cost_tol * (cost + reduction)) {
                    out.reason = Termination::Cost;
                    done = true;
                }
            } else {
                lambda *= 10.0;
                if (lambda > 1e16) {
                    out.reason = Termination::Stalled;
                    done = true;
                    break;
                }
            }
        }
    }

    out.params = p;
    out.cost = cost;
    out.n_residuals = static_cast<std::size_t>(r.size());
    out.rms = std::sqrt(cost / static_cast<double>(r.size()));
    const auto dof = static_cast<double>(r.size() - n);
    out.reduced_chi2 = dof > 0 ? cost / dof : 0.0;

    // covariance in external coordinates, columns normalised for the rank test
    const Matrix Jp = forward_jacobian(problem.residuals, p, r, scale);
    out.evaluations += static_cast<int>(n);
    Vector colnorm = Jp.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < n; ++j)
        if (!(colnorm[j] > 0)) colnorm[j] = 1.0;
    const Matrix Js = Jp * colnorm.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Matrix> svd(Js, Eigen::ComputeThinV);
    const Vector sv = svd.singularValues();
    const double tol = 1e-9 * sv[0];
    std::vector<Vector> null_dirs;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (!(sv[k] > tol)) null_dirs.push_back(svd.matrixV().col(k));
    if (!null_dirs.empty() || !(sv[0] > 0)) {
        std::ostringstream msg;
        msg << "Jacobian rank " << (sv.size() - static_cast<Eigen::Index>(null_dirs.size())) << " of "
            << n << "; null directions (column-scaled):";
        for (const auto& v : null_dirs) {
            msg << " [";
            for (Eigen::Index j = 0; j < v.size(); ++j) msg << (j ? ", " : "") << v[j];
            msg << "]";
        }
        throw SingularFit(msg.str(), std::move(null_dirs));
    }
    Vector inv_sv2 = sv.array().square().inverse();
    const Matrix cov_scaled = svd.matrixV() * inv_sv2.asDiagonal() * svd.matrixV().transpose();
    const Matrix Dinv = colnorm.cwiseInverse().asDiagonal();
    out.covariance = out.reduced_chi2 * (Dinv * cov_scaled * Dinv);
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

}  // namespace emtwin::fit
