#include "oracle.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

Mat rbf_gram(const Mat &points, double gamma) {
    const std::size_t n = points.size();
    Mat k(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < points[i].size(); ++c) {
                const double d = points[i][c] - points[j][c];
                d2 += d * d;
            }
            k[i][j] = std::exp(-gamma * d2);
        }
    }
    return k;
}

Mat signed_matrix(const Mat &k, const std::vector<int> &y) {
    Mat q = k;
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            q[i][j] = y[i] * y[j] * k[i][j];
        }
    }
    return q;
}

double objective(const Mat &q, const Vec &lambda) {
    double quad = 0.0;
    double lin = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        for (std::size_t j = 0; j < lambda.size(); ++j) {
            quad += lambda[i] * q[i][j] * lambda[j];
        }
        lin += lambda[i];
    }
    return 0.5 * quad - lin;
}

namespace {

double clip(double v, double C) {
    if (v < 0.0) {
        return 0.0;
    }
    if (v > C) {
        return C;
    }
    return v;
}

double hyperplane(const Vec &z, const std::vector<int> &y, double C, double mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        s += y[i] * clip(z[i] - mu * y[i], C);
    }
    return s;
}

}  // namespace

Vec project(const Vec &z, const std::vector<int> &y, double C) {
    double zmax = 0.0;
    for (double v : z) {
        zmax = std::max(zmax, std::fabs(v));
    }
    double lo = -(zmax + C);
    double hi = zmax + C;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hyperplane(z, y, C, mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double mu = 0.5 * (lo + hi);
    Vec out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = clip(z[i] - mu * y[i], C);
    }
    return out;
}

DualSolution solve_dual(const Mat &q, const std::vector<int> &y, double C) {
    const std::size_t n = q.size();
    double qmax = 0.0;
    for (const auto &row : q) {
        for (double v : row) {
            qmax = std::max(qmax, std::fabs(v));
        }
    }
    const double eta = 1.0 / (static_cast<double>(n) * qmax);
    DualSolution sol;
    sol.lambda.assign(n, 0.0);
    Vec z(n);
    for (std::size_t step = 1; step <= 1000000; ++step) {
        for (std::size_t i = 0; i < n; ++i) {
            double g = -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                g += q[i][j] * sol.lambda[j];
            }
            z[i] = sol.lambda[i] - eta * g;
        }
        const Vec next = project(z, y, C);
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            change = std::max(change, std::fabs(next[i] - sol.lambda[i]));
        }
        sol.lambda = next;
        sol.steps = step;
        sol.last_change = change;
        if (change <= 1e-10) {
            sol.converged = true;
            break;
        }
    }
    return sol;
}

double kkt_violation(const Mat &q, const std::vector<int> &y, double C, const Vec &lambda) {
    const std::size_t n = lambda.size();
    const double tol = 1e-9 * C;
    Vec g(n, -1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            g[i] += q[i][j] * lambda[j];
        }
    }
    auto violation = [&](double b) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = g[i] + b * y[i];
            if (lambda[i] <= tol) {
                worst = std::max(worst, -r);
            } else if (lambda[i] >= C - tol) {
                worst = std::max(worst, r);
            } else {
                worst = std::max(worst, std::fabs(r));
            }
        }
        return worst;
    };
    double best = violation(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        best = std::min(best, violation(-g[i] * y[i]));
    }
    double eq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        eq += y[i] * lambda[i];
    }
    return std::max(best, std::fabs(eq));
}

}  // namespace oracle
