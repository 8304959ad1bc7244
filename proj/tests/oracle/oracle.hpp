#pragma once

// Brute-force references for the tests. Nothing here includes or calls the
// library under test; everything is plain loops over std::vector.

#include <cstddef>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

Mat rbf_gram(const Mat &points, double gamma);

/// out[i][j] = y[i] y[j] K[i][j]
Mat signed_matrix(const Mat &k, const std::vector<int> &y);

/// 0.5 l'Ql - sum(l)
double objective(const Mat &q, const Vec &lambda);

/// Bisection on mu for y' Clip(z - mu y) = 0 over [-(|z|_inf + C), |z|_inf + C],
/// 200 halvings.
Vec project(const Vec &z, const std::vector<int> &y, double C);

struct DualSolution {
    Vec lambda;
    std::size_t steps = 0;
    /// |lambda_t - lambda_{t-1}|_inf at the last step.
    double last_change = 0.0;
    bool converged = false;
};

/// PGD with step 1/(n max|Q_ij|) and the bisection projection, until the
/// iterate moves by at most 1e-10 or 1e6 steps are spent.
DualSolution solve_dual(const Mat &q, const std::vector<int> &y, double C);

/// Largest KKT violation of lambda for the dual with box [0, C] and y'l = 0,
/// using the multiplier that best fits the free coordinates.
double kkt_violation(const Mat &q, const std::vector<int> &y, double C, const Vec &lambda);

}  // namespace oracle
