#include "floral/projection.hpp"

#include "floral/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace floral {

namespace {

double clip(double v, double C) { return std::min(std::max(v, 0.0), C); }

void clip_shifted(std::span<const double> z, std::span<const int> labels, double C, double mu,
                  std::vector<double> &out) {
    out.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = clip(z[i] - mu * labels[i], C);
    }
}

/// g(mu) = y' Clip(z - mu y)
double crossing(std::span<const double> z, std::span<const int> labels, double C, double mu) {
    double g = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        g += labels[i] * clip(z[i] - mu * labels[i], C);
    }
    return g;
}

void check_inputs(std::span<const double> z, std::span<const int> labels, double C) {
    require(z.size() == labels.size(), "projection: label count mismatch");
    require(C > 0.0, "projection: C must be positive");
}

}  // namespace

double hyperplane_residual(std::span<const double> lambda, std::span<const int> labels) {
    double r = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        r += labels[i] * lambda[i];
    }
    return std::abs(r);
}

double default_feasibility_tolerance(std::size_t n, double C) {
    return 1e-8 * static_cast<double>(std::max<std::size_t>(n, 1)) * C;
}

ProjectionResult project_exact(std::span<const double> z, std::span<const int> labels, double C) {
    check_inputs(z, labels, C);
    ProjectionResult result;
    result.converged = true;
    const std::size_t n = z.size();
    if (n == 0 || crossing(z, labels, C, 0.0) == 0.0) {
        clip_shifted(z, labels, C, 0.0, result.lambda);
        return result;
    }

    // Coordinate i leaves the lower bound at mu = y_i z_i and reaches the upper
    // bound at mu = y_i (z_i - C).
    std::vector<double> breaks;
    breaks.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        breaks.push_back(labels[i] * z[i]);
        breaks.push_back(labels[i] * (z[i] - C));
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    // Largest breakpoint with g >= 0. g(front) = C * #positives >= 0 always.
    std::size_t lo = 0;
    std::size_t hi = breaks.size() - 1;
    if (crossing(z, labels, C, breaks[hi]) >= 0.0) {
        lo = hi;
    } else {
        while (hi - lo > 1) {
            const std::size_t mid = lo + (hi - lo) / 2;
            ++result.iterations;
            if (crossing(z, labels, C, breaks[mid]) >= 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    double mu = breaks[lo];
    if (lo != hi && crossing(z, labels, C, breaks[lo]) != 0.0) {
        // g is linear on (breaks[lo], breaks[hi]); the active sets are those at
        // the midpoint.
        const double probe = 0.5 * (breaks[lo] + breaks[hi]);
        double fixed = 0.0;
        double free_sum = 0.0;
        std::size_t free_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = z[i] - probe * labels[i];
            if (v >= C) {
                fixed += C * labels[i];
            } else if (v > 0.0) {
                free_sum += labels[i] * z[i];
                ++free_count;
            }
        }
        if (free_count > 0) {
            mu = std::clamp((fixed + free_sum) / static_cast<double>(free_count), breaks[lo], breaks[hi]);
        }
    }
    result.mu = mu;
    clip_shifted(z, labels, C, mu, result.lambda);
    return result;
}

ProjectionResult project_fixed_point(std::span<const double> z, std::span<const int> labels, double C,
                                     const FixedPointOptions &options) {
    check_inputs(z, labels, C);
    require(options.eps > 0.0, "project_fixed_point: eps must be positive");
    ProjectionResult result;
    const double feas_tol = default_feasibility_tolerance(z.size(), C);

    double mu_prev = 0.0;
    for (std::size_t t = 1; t <= options.max_iter; ++t) {
        result.iterations = t;
        clip_shifted(z, labels, C, mu_prev, result.lambda);
        double upper_sum = 0.0;
        double free_sum = 0.0;
        double residual = 0.0;
        std::size_t free_count = 0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double v = result.lambda[i];
            residual += labels[i] * v;
            if (v >= C) {
                upper_sum += C * labels[i];
            } else if (v > 0.0) {
                free_sum += v * labels[i];
                ++free_count;
            }
        }
        if (residual == 0.0 || std::abs(residual) <= options.zero_tolerance) {
            result.mu = mu_prev;
            result.converged = true;
            return result;
        }

        // split_count plays the role of the damping denominator; it is unrelated
        // to the training learning rate.
        const double split_count = static_cast<double>(std::max<std::size_t>(free_count, 1));
        const double mu = (split_count - static_cast<double>(free_count)) / split_count * mu_prev +
                          (upper_sum + free_sum) / split_count;
        if (std::abs(mu - mu_prev) <= options.eps) {
            clip_shifted(z, labels, C, mu, result.lambda);
            result.mu = mu;
            result.converged = hyperplane_residual(result.lambda, labels) <= feas_tol;
            return result;
        }
        mu_prev = mu;
    }
    clip_shifted(z, labels, C, mu_prev, result.lambda);
    result.mu = mu_prev;
    result.converged = false;
    return result;
}

}  // namespace floral
