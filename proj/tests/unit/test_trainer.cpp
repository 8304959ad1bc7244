#include "floral/trainer.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace floral;
using namespace test_support;

namespace {

TrainConfig quick_config(std::size_t rounds, double eta) {
    TrainConfig cfg;
    cfg.rounds = rounds;
    cfg.eta = eta;
    cfg.eval_every = rounds;
    return cfg;
}

Dataset separable_toy() {
    Matrix x(4, 2);
    x(0, 0) = -2.0;
    x(0, 1) = 0.0;
    x(1, 0) = -1.5;
    x(1, 1) = 0.5;
    x(2, 0) = 2.0;
    x(2, 1) = 0.0;
    x(3, 0) = 1.5;
    x(3, 1) = -0.5;
    return dataset_from(x, Labels{1, 1, -1, -1});
}

double train_accuracy(const SvmModel &m, const Dataset &ds) { return accuracy(m, ds); }

}  // namespace

TEST_SUITE("trainer") {
    TEST_CASE("learning rate schedule") {
        TrainConfig cfg;
        cfg.eta = 1e-3;
        CHECK(lr_at(cfg, 1) == 1e-3);
        CHECK(lr_at(cfg, 400) == 1e-3);
        cfg.lr_decay = LrDecay{0.1, {100, 200}};
        CHECK(lr_at(cfg, 99) == 1e-3);
        CHECK(lr_at(cfg, 100) == doctest::Approx(1e-4).epsilon(1e-12));
        CHECK(lr_at(cfg, 150) == doctest::Approx(1e-4).epsilon(1e-12));
        CHECK(lr_at(cfg, 250) == doctest::Approx(1e-5).epsilon(1e-12));
    }

    TEST_CASE("config validation") {
        TrainConfig cfg;
        cfg.C = 0.0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg = TrainConfig{};
        cfg.rounds = 0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg = TrainConfig{};
        cfg.eta = -1.0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }

    TEST_CASE("zero flips reproduce vanilla training exactly") {
        const Dataset ds = poison_by_boundary_distance(generate_moons(80, 0.2, 3), 0.1, 3);
        const TrainConfig cfg = quick_config(60, 0.01);
        const TrainResult v = train_vanilla(ds, KernelSpec{}, cfg);
        const TrainResult f = train_floral(ds, KernelSpec{}, cfg, AttackSpec{10, 0, 99});
        CHECK(v.model.lambda == f.model.lambda);
        CHECK(v.model.bias == f.model.bias);
        for (const auto &t : f.traces) {
            CHECK(t.flipped_indices.empty());
        }
    }

    TEST_CASE("single warm-up round is one projected step from zero") {
        Rng rng(3);
        const Dataset ds = dataset_from(random_matrix(rng, 12, 2, -1.0, 1.0), random_labels(rng, 12));
        TrainConfig cfg = quick_config(1, 0.05);
        cfg.C = 0.5;
        const TrainResult r = train_floral(ds, KernelSpec{}, cfg, AttackSpec{4, 2, 1});
        const std::vector<double> z(12, 0.05);
        CHECK(r.model.lambda == project_exact(z, ds.labels, cfg.C).lambda);
        CHECK(r.traces.at(0).flipped_indices.empty());
    }

    TEST_CASE("separable toy is fitted") {
        const Dataset ds = separable_toy();
        const TrainResult r = train_vanilla(ds, KernelSpec{}, quick_config(200, 0.1));
        CHECK(train_accuracy(r.model, ds) == 1.0);
    }

    TEST_CASE("objective does not increase without an attacker") {
        const Dataset ds = generate_moons(60, 0.2, 5);
        const TrainResult r = train_vanilla(ds, KernelSpec{}, quick_config(300, 0.005));
        for (std::size_t i = 1; i < r.traces.size(); ++i) {
            CHECK(r.traces[i].objective <= r.traces[i - 1].objective + 1e-8);
        }
    }

    TEST_CASE("exact and fixed-point projections give the same trajectory") {
        const Dataset ds = poison_by_boundary_distance(generate_moons(50, 0.2, 7), 0.1, 7);
        TrainConfig exact = quick_config(100, 0.02);
        TrainConfig fixed = exact;
        fixed.projection = ProjectionMethod::FixedPoint;
        fixed.fixed_point = {1e-12, 1000, 1e-12};
        const TrainResult a = train_floral(ds, KernelSpec{}, exact, AttackSpec{4, 2, 5});
        const TrainResult b = train_floral(ds, KernelSpec{}, fixed, AttackSpec{4, 2, 5});
        CHECK(max_abs_diff(a.model.lambda, b.model.lambda) <= 1e-6);
    }

    TEST_CASE("seeded runs are deterministic") {
        const Dataset ds = poison_by_boundary_distance(generate_moons(80, 0.2, 2), 0.1, 2);
        const TrainConfig cfg = quick_config(50, 0.01);
        const TrainResult a = train_floral(ds, KernelSpec{}, cfg, AttackSpec{8, 4, 11});
        const TrainResult b = train_floral(ds, KernelSpec{}, cfg, AttackSpec{8, 4, 11});
        CHECK(a.model.lambda == b.model.lambda);
        for (std::size_t i = 0; i < a.traces.size(); ++i) {
            CHECK(a.traces[i].flipped_indices == b.traces[i].flipped_indices);
        }
        const TrainResult c = train_floral(ds, KernelSpec{}, cfg, AttackSpec{8, 4, 12});
        CHECK(c.model.lambda != a.model.lambda);
    }

    TEST_CASE("iterates stay feasible and flips start after warm-up") {
        const Dataset ds = poison_by_boundary_distance(generate_moons(100, 0.2, 9), 0.2, 9);
        TrainConfig cfg = quick_config(120, 0.05);
        cfg.C = 2.0;
        cfg.warmup_rounds = 5;
        const TrainResult r = train_floral(ds, KernelSpec{}, cfg, AttackSpec{10, 5, 3});
        for (const auto &t : r.traces) {
            CHECK(t.lambda_min >= 0.0);
            CHECK(t.lambda_inf_norm <= cfg.C);
            CHECK(t.hyperplane_residual <= 1e-6);
            if (t.round <= 5) {
                CHECK(t.flipped_indices.empty());
            } else {
                CHECK(t.flipped_indices.size() == 5);
            }
        }
    }

    TEST_CASE("a copied trainer continues the same trajectory") {
        const Dataset ds = poison_by_boundary_distance(generate_moons(60, 0.2, 1), 0.1, 1);
        BinaryTrainer a(ds, KernelSpec{}, quick_config(40, 0.02), AttackSpec{6, 3, 8});
        for (int i = 0; i < 10; ++i) {
            a.step();
        }
        BinaryTrainer b = a;
        while (!a.done()) {
            const RoundTrace ta = a.step();
            const RoundTrace tb = b.step();
            CHECK(ta.flipped_indices == tb.flipped_indices);
        }
        CHECK(a.lambda() == b.lambda());
        CHECK(b.done());
    }

    TEST_CASE("perturbed continuation bookkeeping") {
        const Dataset ds = poison_by_boundary_distance(generate_moons(60, 0.2, 2), 0.1, 2);
        BinaryTrainer base(ds, KernelSpec{}, quick_config(80, 0.02), AttackSpec{6, 3, 2});
        for (int i = 0; i < 30; ++i) {
            base.step();
        }
        const ContinuationTrace still = perturbed_continuation(base, 0.002, 0.0, 20, 1);
        CHECK(still.initial_gap <= 1e-12);
        REQUIRE(still.gaps.size() == 20);
        for (std::size_t i = 0; i < 20; ++i) {
            CHECK(still.gaps[i] <= 1e-12);
            CHECK(still.same_flips[i]);
        }
        CHECK(continuation_settles(still, 1e-6));

        const ContinuationTrace moved = perturbed_continuation(base, 0.002, 1e-4, 20, 1);
        CHECK(moved.initial_gap > 0.0);
        CHECK(moved.initial_gap <= 2e-4);
        // The base trainer is untouched.
        CHECK(base.round() == 30);
    }

    TEST_CASE("without an attacker the continuation gap stays within the nonexpansive bound") {
        // Projected gradient steps with eta below 2 / |Q| are nonexpansive in the 2-norm,
        // so the max-norm gap can never exceed sqrt(n) times the starting one.
        const Dataset ds = generate_moons(60, 0.2, 3);
        BinaryTrainer base(ds, KernelSpec{}, quick_config(300, 0.01), std::nullopt);
        for (int i = 0; i < 100; ++i) {
            base.step();
        }
        const ContinuationTrace t = perturbed_continuation(base, 0.01, 1e-4, 100, 4);
        const double bound = std::sqrt(60.0) * t.initial_gap * (1.0 + 1e-9);
        for (std::size_t i = 0; i < t.gaps.size(); ++i) {
            CHECK(t.gaps[i] <= bound);
            CHECK(t.same_flips[i]);
        }

        ContinuationTrace growing;
        growing.gaps = {1e-5, 2e-5, 1e-7};
        growing.same_flips = {true, true, true};
        CHECK_FALSE(continuation_settles(growing, 1e-6));
        growing.same_flips = {false, false, true};
        CHECK(continuation_settles(growing, 1e-6));
    }

    TEST_CASE("evaluation hook runs on schedule") {
        const Dataset ds = generate_moons(40, 0.2, 1);
        TrainConfig cfg = quick_config(25, 0.02);
        cfg.eval_every = 10;
        std::vector<std::size_t> seen;
        const TrainResult r = train_vanilla(ds, KernelSpec{}, cfg, [&](const RoundView &v) {
            seen.push_back(v.round);
            return std::optional<MetricsRecord>(MetricsRecord{v.round, 0.5, 0.0, std::nullopt});
        });
        CHECK(seen == std::vector<std::size_t>{10, 20, 25});
        CHECK(r.metrics().size() == 3);
    }

    TEST_CASE("non-converging projection on a large problem aborts") {
        const Dataset ds = poison_by_boundary_distance(generate_moons(40, 0.2, 1), 0.1, 1);
        TrainConfig cfg = quick_config(10, 0.5);
        cfg.projection = ProjectionMethod::FixedPoint;
        cfg.fixed_point = {1e-300, 1, 0.0};
        cfg.exact_fallback_cap = 0;
        CHECK_THROWS_AS(train_floral(ds, KernelSpec{}, cfg, AttackSpec{4, 2, 1}), ProjectionFailure);
        cfg.exact_fallback_cap = 40;
        const TrainResult r = train_floral(ds, KernelSpec{}, cfg, AttackSpec{4, 2, 1});
        bool fell_back = false;
        for (const auto &t : r.traces) {
            fell_back = fell_back || !t.projection_converged;
        }
        CHECK(fell_back);
    }

    TEST_CASE("fixed-point projection converges during moons training") {
        const Dataset ds = poison_by_boundary_distance(generate_moons(300, 0.2, 4), 0.1, 4);
        TrainConfig cfg = quick_config(300, 7e-4);
        cfg.projection = ProjectionMethod::FixedPoint;
        cfg.lr_decay = LrDecay{0.1, {100, 200}};
        const TrainResult r = train_floral(ds, KernelSpec{}, cfg, AttackSpec{12, 6, 4});
        std::size_t converged = 0;
        for (const auto &t : r.traces) {
            converged += t.projection_converged ? 1 : 0;
        }
        const double rate = static_cast<double>(converged) / static_cast<double>(r.traces.size());
        MESSAGE("fixed-point convergence rate " << rate);
        CHECK(rate >= 0.95);
    }

    TEST_CASE("two-class multiclass training mirrors the binary trainer") {
        const Dataset bin = generate_moons(60, 0.2, 6);
        MulticlassDataset mc;
        mc.features = bin.features;
        mc.num_classes = 2;
        for (int y : bin.labels) {
            mc.class_labels.push_back(y == 1 ? 1 : 2);
        }
        const TrainConfig cfg = quick_config(80, 0.02);
        const MulticlassTrainResult r = train_multiclass(mc, KernelSpec{}, cfg, MulticlassAttackSpec{});
        const TrainResult b = train_vanilla(bin, KernelSpec{}, cfg);
        CHECK(max_abs_diff(r.models[0].lambda, b.model.lambda) <= 1e-12);
        CHECK(max_abs_diff(r.models[1].lambda, b.model.lambda) <= 1e-12);
    }

    TEST_CASE("multiclass attacker flips exactly k labels after warm-up") {
        const MulticlassDataset ds = generate_blobs(20, 3, 3.0, 0.4, 3);
        TrainConfig cfg = quick_config(30, 0.02);
        cfg.warmup_rounds = 2;
        const MulticlassTrainResult r = train_multiclass(ds, KernelSpec{}, cfg, MulticlassAttackSpec{{6, 6, 6}, 4, {}, 9});
        for (std::size_t t = 0; t < r.traces.size(); ++t) {
            std::size_t changed = 0;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                changed += r.round_labels[t][i] != ds.class_labels[i] ? 1 : 0;
            }
            CHECK(changed == (t < 2 ? 0U : 4U));
            CHECK(changed == r.traces[t].flipped_indices.size());
        }
    }

    TEST_CASE("multiclass blobs are learned under attack") {
        const MulticlassDataset all = generate_blobs(100, 3, 3.0, 0.6, 5);
        auto [train, test] = train_test_split(all, 150, 5);
        TrainConfig cfg = quick_config(300, 0.01);
        const MulticlassTrainResult r =
            train_multiclass(train, KernelSpec{}, cfg, MulticlassAttackSpec{{6, 6, 6}, 3, {}, 5});
        CHECK(multiclass_accuracy(r.models, test) >= 0.9);
    }
}
