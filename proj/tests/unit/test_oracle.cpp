// Checks on the brute-force references themselves, then the trainer against them.
#include "floral/trainer.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace floral;
using namespace test_support;

TEST_SUITE("oracle") {
    TEST_CASE("two-point dual has the textbook solution") {
        // Points at distance 1, opposite labels: lambda_1 = lambda_2 = 1 / (1 - e^-1) when below C.
        const oracle::Mat k = oracle::rbf_gram({{0.0, 0.0}, {1.0, 0.0}}, 1.0);
        const std::vector<int> y{1, -1};
        const oracle::DualSolution s = oracle::solve_dual(oracle::signed_matrix(k, y), y, 10.0);
        REQUIRE(s.converged);
        const double expected = 1.0 / (1.0 - std::exp(-1.0));
        CHECK(std::abs(s.lambda[0] - expected) <= 1e-6);
        CHECK(std::abs(s.lambda[1] - expected) <= 1e-6);
        CHECK(oracle::kkt_violation(oracle::signed_matrix(k, y), y, 10.0, s.lambda) <= 1e-6);
    }

    TEST_CASE("oracle solution beats random feasible points") {
        Rng rng(5);
        const Matrix x = random_matrix(rng, 12, 2, -1.5, 1.5);
        const Labels y = random_labels(rng, 12);
        const oracle::Mat q = oracle::signed_matrix(oracle::rbf_gram(to_rows(x), 1.0), y);
        const double C = 2.0;
        const oracle::DualSolution s = oracle::solve_dual(q, y, C);
        REQUIRE(s.converged);
        CHECK(oracle::kkt_violation(q, y, C, s.lambda) <= 1e-5);
        const double best = oracle::objective(q, s.lambda);
        for (int i = 0; i < 1000; ++i) {
            const oracle::Vec cand = oracle::project(random_vector(rng, 12, 0.0, C), y, C);
            CHECK(best <= oracle::objective(q, cand) + 1e-9);
        }
    }

    TEST_CASE("bisection projection basics") {
        const std::vector<int> y{1, -1, 1, -1};
        const oracle::Vec feasible{1.0, 2.0, 3.0, 2.0};
        CHECK(max_abs_diff(oracle::project(feasible, y, 5.0), feasible) <= 1e-12);
        const std::vector<int> same{1, 1, 1};
        CHECK(max_abs_diff(oracle::project({0.3, 2.0, 0.7}, same, 5.0), {0.0, 0.0, 0.0}) <= 1e-12);
    }

    TEST_CASE("trainer reaches the oracle optimum on small instances") {
        Rng rng(123);
        for (int inst = 0; inst < 6; ++inst) {
            const Matrix x = random_matrix(rng, 20, 2, -2.0, 2.0);
            Labels y(20, -1);
            std::fill(y.begin(), y.begin() + 10, 1);
            const double C = inst % 2 == 0 ? 1.0 : 10.0;
            const double gamma = 0.5 + rng.uniform();
            const oracle::Mat q = oracle::signed_matrix(oracle::rbf_gram(to_rows(x), gamma), y);
            const oracle::DualSolution s = oracle::solve_dual(q, y, C);
            REQUIRE(s.converged);

            double row_sum = 0.0;
            for (const auto &row : q) {
                double r = 0.0;
                for (double v : row) {
                    r += std::abs(v);
                }
                row_sum = std::max(row_sum, r);
            }
            TrainConfig cfg;
            cfg.C = C;
            cfg.eta = 1.0 / row_sum;
            cfg.rounds = 20000;
            cfg.eval_every = 1000000;
            const TrainResult r = train_vanilla(dataset_from(x, y), KernelSpec{KernelKind::Rbf, gamma}, cfg);
            CHECK(std::abs(oracle::objective(q, r.model.lambda) - oracle::objective(q, s.lambda)) <= 1e-4);
        }
    }
}
