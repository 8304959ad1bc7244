#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace floral {

/// Euclidean projection onto S(y) = { lambda : y' lambda = 0, 0 <= lambda <= C }.
/// The solution has the form Clip_[0,C](z - mu * y).
struct ProjectionResult {
    std::vector<double> lambda;
    double mu = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// |y' lambda|
double hyperplane_residual(std::span<const double> lambda, std::span<const int> labels);

/// Default feasibility tolerance 1e-8 * n * C.
double default_feasibility_tolerance(std::size_t n, double C);

/// Exact projection. g(mu) = y' Clip(z - mu y) is nonincreasing and piecewise
/// linear; the crossing is located by sorting its breakpoints and solving the
/// bracketing linear piece in closed form.
ProjectionResult project_exact(std::span<const double> z, std::span<const int> labels, double C);

struct FixedPointOptions {
    double eps = 1e-21;
    std::size_t max_iter = 1000;
    /// |y' lambda_t| at or below this counts as the exact-zero early exit.
    double zero_tolerance = 1e-12;
};

/// Multiplier iteration: clip at the current mu, split indices into the upper
/// bound set and the free set, and re-solve mu from the free set.
/// Non-convergence is reported through `converged`, never thrown.
ProjectionResult project_fixed_point(std::span<const double> z, std::span<const int> labels, double C,
                                     const FixedPointOptions &options = {});

}  // namespace floral
