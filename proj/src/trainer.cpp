#include "floral/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace floral {

void TrainConfig::validate() const {
    require(C > 0.0, "train config: C must be positive");
    require(eta > 0.0, "train config: eta must be positive");
    require(rounds >= warmup_rounds, "train config: rounds must be at least warmup_rounds");
    require(eval_every >= 1, "train config: eval_every must be at least 1");
    if (projection == ProjectionMethod::FixedPoint) {
        require(fixed_point.eps > 0.0, "train config: fixed-point eps must be positive");
        require(fixed_point.max_iter >= 1, "train config: fixed-point max_iter must be at least 1");
    }
    if (lr_decay) {
        require(lr_decay->factor > 0.0, "train config: decay factor must be positive");
    }
}

double lr_at(const TrainConfig &config, std::size_t round) {
    if (!config.lr_decay) {
        return config.eta;
    }
    double lr = config.eta;
    for (std::size_t milestone : config.lr_decay->at_rounds) {
        if (milestone <= round) {
            lr *= config.lr_decay->factor;
        }
    }
    return lr;
}

ProjectionFailure::ProjectionFailure(std::size_t round)
    : std::runtime_error("projection did not converge in round " + std::to_string(round) +
                         " and the problem is too large for the exact fallback"),
      round_(round) {}

std::vector<MetricsRecord> TrainResult::metrics() const {
    std::vector<MetricsRecord> out;
    for (const auto &t : traces) {
        if (t.metrics) {
            out.push_back(*t.metrics);
        }
    }
    return out;
}

std::vector<MetricsRecord> MulticlassTrainResult::metrics() const {
    std::vector<MetricsRecord> out;
    for (const auto &t : traces) {
        if (t.metrics) {
            out.push_back(*t.metrics);
        }
    }
    return out;
}

Labels one_vs_all_labels(const std::vector<int> &class_labels, int cls) {
    Labels out(class_labels.size());
    std::transform(class_labels.begin(), class_labels.end(), out.begin(), [cls](int c) { return c == cls ? 1 : -1; });
    return out;
}

namespace {

struct StepOutcome {
    std::vector<double> lambda;
    std::size_t iterations = 0;
    bool converged = true;
};

/// One PGD step z = lambda - lr (Q~ lambda - 1) followed by the projection.
StepOutcome pgd_step(const SignedKernel &q, std::span<const double> lambda, std::span<const int> labels,
                     const TrainConfig &config, std::size_t round) {
    const std::size_t n = lambda.size();
    std::vector<double> z(n);
    q.apply(lambda, z);
    const double lr = lr_at(config, round);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = lambda[i] - lr * (z[i] - 1.0);
    }

    StepOutcome out;
    if (config.projection == ProjectionMethod::Exact) {
        out.lambda = project_exact(z, labels, config.C).lambda;
        return out;
    }
    ProjectionResult fp = project_fixed_point(z, labels, config.C, config.fixed_point);
    out.iterations = fp.iterations;
    out.converged = fp.converged;
    if (fp.converged) {
        out.lambda = std::move(fp.lambda);
    } else if (n <= config.exact_fallback_cap) {
        out.lambda = project_exact(z, labels, config.C).lambda;
    } else {
        throw ProjectionFailure(round);
    }
    return out;
}

bool is_eval_round(const TrainConfig &config, std::size_t round) {
    return round % config.eval_every == 0 || round == config.rounds;
}

}  // namespace

BinaryTrainer::BinaryTrainer(const Dataset &ds, const KernelSpec &kspec, const TrainConfig &config,
                             std::optional<AttackSpec> attack)
    : config_(config),
      kspec_(kspec),
      attack_(std::move(attack)),
      features_(std::make_shared<const Matrix>(ds.features)),
      base_labels_(ds.labels),
      kernel_(make_kernel_operator(kspec, features_, config.gram_memory_cap_bytes)),
      signed_(kernel_, ds.labels),
      current_labels_(ds.labels),
      lambda_(ds.size(), 0.0),
      rng_(attack_ ? attack_->seed : 0) {
    ds.validate();
    config_.validate();
    if (attack_) {
        attack_->validate(ds.size());
    }
}

RoundTrace BinaryTrainer::step() {
    const std::size_t t = ++round_;
    RoundTrace trace;
    trace.round = t;

    if (attack_ && t > config_.warmup_rounds) {
        FlipResult flip = randomized_topk_flip(base_labels_, lambda_, *attack_, rng_);
        current_labels_ = std::move(flip.labels);
        trace.flipped_indices = std::move(flip.flipped);
        trace.candidate_tie = flip.boundary_tie;
    } else {
        current_labels_ = base_labels_;
    }
    signed_.set_labels(current_labels_);

    StepOutcome next = pgd_step(signed_, lambda_, current_labels_, config_, t);
    lambda_ = std::move(next.lambda);
    trace.projection_iterations = next.iterations;
    trace.projection_converged = next.converged;

    const auto [lo, hi] = std::minmax_element(lambda_.begin(), lambda_.end());
    trace.lambda_min = *lo;
    trace.lambda_inf_norm = std::max(std::abs(*lo), std::abs(*hi));
    trace.objective = signed_.objective(lambda_);
    trace.hyperplane_residual = hyperplane_residual(lambda_, current_labels_);
    return trace;
}

void BinaryTrainer::set_lambda(std::vector<double> lambda) {
    require(lambda.size() == lambda_.size(), "set_lambda: size mismatch");
    lambda_ = std::move(lambda);
}

void BinaryTrainer::set_eta(double eta) {
    require(eta > 0.0, "set_eta: eta must be positive");
    config_.eta = eta;
    config_.lr_decay.reset();
}

SvmModel BinaryTrainer::model() const {
    SvmModel m;
    m.lambda = lambda_;
    m.train_features = features_;
    m.train_labels = current_labels_;
    m.spec = kspec_;
    m.C = config_.C;
    SignedKernel q(kernel_, current_labels_);
    m.bias = recover_bias(m.lambda, m.train_labels, m.C, q.expansion(m.lambda));
    return m;
}

ContinuationTrace perturbed_continuation(const BinaryTrainer &base, double eta, double radius, std::size_t rounds,
                                         std::uint64_t perturbation_seed) {
    BinaryTrainer a = base;
    BinaryTrainer b = base;
    a.set_eta(eta);
    b.set_eta(eta);
    Rng noise(perturbation_seed);
    std::vector<double> moved = base.lambda();
    for (double &v : moved) {
        v += radius * (2.0 * noise.uniform() - 1.0);
    }
    b.set_lambda(project_exact(moved, b.adversarial_labels(), b.config().C).lambda);

    auto gap = [&] {
        double g = 0.0;
        for (std::size_t i = 0; i < a.lambda().size(); ++i) {
            g = std::max(g, std::abs(a.lambda()[i] - b.lambda()[i]));
        }
        return g;
    };
    ContinuationTrace out;
    out.initial_gap = gap();
    for (std::size_t t = 0; t < rounds && !a.done(); ++t) {
        const RoundTrace ta = a.step();
        const RoundTrace tb = b.step();
        out.gaps.push_back(gap());
        out.same_flips.push_back(ta.flipped_indices == tb.flipped_indices);
    }
    return out;
}

bool continuation_settles(const ContinuationTrace &trace, double target) {
    if (trace.gaps.empty()) {
        return trace.initial_gap < target;
    }
    const auto first = std::find(trace.same_flips.begin(), trace.same_flips.end(), true);
    for (auto i = static_cast<std::size_t>(first - trace.same_flips.begin()) + 1; i < trace.gaps.size(); ++i) {
        // Growth below 1e-12 is floating-point drift, not divergence.
        if (trace.gaps[i] > trace.gaps[i - 1] + 1e-12) {
            return false;
        }
    }
    return trace.gaps.back() < target;
}

namespace {

TrainResult run_binary(BinaryTrainer trainer, const EvalHook &hook) {
    TrainResult result;
    result.traces.reserve(trainer.config().rounds);
    while (!trainer.done()) {
        RoundTrace trace = trainer.step();
        if (hook && is_eval_round(trainer.config(), trace.round)) {
            const SvmModel view = trainer.model();
            trace.metrics = hook(RoundView{trace.round, view, trainer.adversarial_labels()});
        }
        result.traces.push_back(std::move(trace));
    }
    result.model = trainer.model();
    return result;
}

}  // namespace

TrainResult train_floral(const Dataset &ds, const KernelSpec &kspec, const TrainConfig &config,
                         const AttackSpec &attack, const EvalHook &hook) {
    return run_binary(BinaryTrainer(ds, kspec, config, attack), hook);
}

TrainResult train_vanilla(const Dataset &ds, const KernelSpec &kspec, const TrainConfig &config,
                          const EvalHook &hook) {
    return run_binary(BinaryTrainer(ds, kspec, config, std::nullopt), hook);
}

MulticlassTrainResult train_multiclass(const MulticlassDataset &ds, const KernelSpec &kspec,
                                       const TrainConfig &config, const MulticlassAttackSpec &attack,
                                       const MulticlassEvalHook &hook) {
    ds.validate();
    config.validate();
    const std::size_t classes = static_cast<std::size_t>(ds.num_classes);
    const std::size_t n = ds.size();
    require(attack.flips_k == 0 || attack.budgets.size() == classes,
            "train_multiclass: one attacker budget per class required");
    for (std::size_t b : attack.budgets) {
        require(b <= n, "train_multiclass: budget exceeds training size");
    }

    auto features = std::make_shared<const Matrix>(ds.features);
    auto kernel = make_kernel_operator(kspec, features, config.gram_memory_cap_bytes);
    std::vector<std::vector<double>> lambdas(classes, std::vector<double>(n, 0.0));
    std::vector<Labels> binary(classes);
    for (std::size_t m = 0; m < classes; ++m) {
        binary[m] = one_vs_all_labels(ds.class_labels, static_cast<int>(m) + 1);
    }
    std::vector<int> current = ds.class_labels;
    Rng rng(attack.seed);

    auto build_models = [&] {
        std::vector<SvmModel> models(classes);
        for (std::size_t m = 0; m < classes; ++m) {
            models[m].lambda = lambdas[m];
            models[m].train_features = features;
            models[m].train_labels = binary[m];
            models[m].spec = kspec;
            models[m].C = config.C;
            SignedKernel q(kernel, binary[m]);
            models[m].bias = recover_bias(lambdas[m], binary[m], config.C, q.expansion(lambdas[m]));
        }
        return models;
    };

    MulticlassTrainResult result;
    for (std::size_t t = 1; t <= config.rounds; ++t) {
        RoundTrace trace;
        trace.round = t;
        if (attack.flips_k > 0 && t > config.warmup_rounds) {
            MulticlassFlipResult flip =
                multiclass_flip(ds.class_labels, lambdas, attack.budgets, attack.flips_k, attack.q, rng);
            current = std::move(flip.class_labels);
            trace.flipped_indices = std::move(flip.flipped);
        } else {
            current = ds.class_labels;
        }

        for (std::size_t m = 0; m < classes; ++m) {
            binary[m] = one_vs_all_labels(current, static_cast<int>(m) + 1);
            const SignedKernel q(kernel, binary[m]);
            StepOutcome next = pgd_step(q, lambdas[m], binary[m], config, t);
            lambdas[m] = std::move(next.lambda);
            trace.projection_iterations = std::max(trace.projection_iterations, next.iterations);
            trace.projection_converged = trace.projection_converged && next.converged;
            const auto [lo, hi] = std::minmax_element(lambdas[m].begin(), lambdas[m].end());
            trace.lambda_min = m == 0 ? *lo : std::min(trace.lambda_min, *lo);
            trace.lambda_inf_norm = std::max({trace.lambda_inf_norm, std::abs(*lo), std::abs(*hi)});
            trace.objective += q.objective(lambdas[m]);
            trace.hyperplane_residual = std::max(trace.hyperplane_residual, hyperplane_residual(lambdas[m], binary[m]));
        }

        if (hook && is_eval_round(config, t)) {
            const std::vector<SvmModel> models = build_models();
            trace.metrics = hook(MulticlassRoundView{t, models, current});
        }
        result.round_labels.push_back(current);
        result.traces.push_back(std::move(trace));
    }
    result.models = build_models();
    return result;
}

}  // namespace floral
