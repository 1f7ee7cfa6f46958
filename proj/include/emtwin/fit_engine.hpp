#pragma once

// Levenberg-Marquardt least squares shared by every fitting routine.

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "emtwin/errors.hpp"

namespace emtwin::fit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Maps a parameter vector to the residual vector. Length must not change between calls.
using ResidualFn = std::function<Vector(const Vector& params)>;

inline constexpr double unbounded = std::numeric_limits<double>::infinity();

struct Problem {
    ResidualFn residuals;
    Vector initial;
    /// Empty means unbounded; otherwise one entry per parameter (+-infinity allowed).
    Vector lower;
    Vector upper;
    /// Typical magnitude per parameter. Defaults to |initial| (or 1 where initial is 0).
    Vector scale;
    int max_iterations = 500;
    double gradient_tol = 1e-10;
    double step_tol = 1e-12;
    double cost_tol = 1e-12;
};

enum class Termination {
    Gradient,
    Step,
    Cost,
    ZeroResidual,
    Stalled,        // damping exhausted with no further descent: precision floor
    MaxIterations,
};

const char* to_string(Termination t);

struct Outcome {
    Vector params;
    Matrix covariance;  // reduced_chi2 * pinv(J^T J), external parameters
    double cost = 0;    // sum of squared residuals
    double rms = 0;     // sqrt(cost / N)
    double reduced_chi2 = 0;  // cost / (N - p)
    std::size_t n_residuals = 0;
    int iterations = 0;       // accepted steps
    int evaluations = 0;
    Termination reason = Termination::MaxIterations;
    std::vector<double> cost_history;  // cost after every accepted step, starting with the initial cost

    bool converged() const { return reason != Termination::MaxIterations; }
    Vector std_errors() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Rank-deficient Jacobian at the solution. `null_directions` are unit vectors in
/// parameter space (column-scaled) along which the residuals do not change.
class SingularFit : public Error {
public:
    SingularFit(const std::string& what, std::vector<Vector> null_directions)
        : Error(Errc::SingularNormalEquations, what), null_directions_(std::move(null_directions)) {}

    const std::vector<Vector>& null_directions() const { return null_directions_; }

private:
    std::vector<Vector> null_directions_;
};

/// Runs damped Gauss-Newton with a forward-difference Jacobian. Bounds are enforced
/// by a smooth reparametrisation, so the solver itself is unconstrained.
///
/// Throws NonFiniteResidual if the residuals are not finite at the initial point,
/// InvalidArgument on malformed bounds, and SingularFit when the Jacobian at the
/// solution is rank deficient.
Outcome solve(const Problem& problem);

/// Forward-difference Jacobian in external coordinates, step max(1e-6 |p|, 1e-9 scale).
Matrix forward_jacobian(const ResidualFn& fn, const Vector& params, const Vector& r0,
                        const Vector& scale);

}  // namespace emtwin::fit
