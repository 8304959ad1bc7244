#pragma once

#include "floral/attacker.hpp"
#include "floral/dataset.hpp"
#include "floral/kernel.hpp"
#include "floral/metrics.hpp"
#include "floral/projection.hpp"
#include "floral/svm.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace floral {

enum class ProjectionMethod { Exact, FixedPoint };

/// eta is multiplied by `factor` once for every milestone <= the current round.
struct LrDecay {
    double factor = 0.1;
    std::vector<std::size_t> at_rounds;
};

struct TrainConfig {
    double C = 10.0;
    std::size_t rounds = 500;
    double eta = 3e-4;
    std::optional<LrDecay> lr_decay;
    std::size_t warmup_rounds = 1;
    ProjectionMethod projection = ProjectionMethod::Exact;
    FixedPointOptions fixed_point;
    /// A non-converged fixed-point projection falls back to the exact one up to
    /// this many training rows; above it the run aborts.
    std::size_t exact_fallback_cap = 5000;
    std::size_t eval_every = 10;
    /// The Gram matrix is stored densely while it fits in this many bytes and
    /// streamed in row blocks otherwise.
    std::size_t gram_memory_cap_bytes = std::size_t{1} << 31;

    void validate() const;
};

/// Learning rate used in `round` (rounds count from 1).
double lr_at(const TrainConfig &config, std::size_t round);

struct RoundTrace {
    std::size_t round = 0;
    double lambda_inf_norm = 0.0;
    double lambda_min = 0.0;
    double objective = 0.0;
    /// |y~' lambda_t| under the round's labels.
    double hyperplane_residual = 0.0;
    IndexList flipped_indices;
    /// The attacker's candidate pool was cut inside a run of equal lambda values.
    bool candidate_tie = false;
    std::size_t projection_iterations = 0;
    /// False when a fixed-point projection had to fall back to the exact one.
    bool projection_converged = true;
    std::optional<MetricsRecord> metrics;
};

class ProjectionFailure : public std::runtime_error {
  public:
    explicit ProjectionFailure(std::size_t round);
    [[nodiscard]] std::size_t round() const noexcept { return round_; }

  private:
    std::size_t round_;
};

struct RoundView {
    std::size_t round;
    const SvmModel &model;
    const Labels &adversarial_labels;
};

/// Called on evaluation rounds; must not mutate training state.
using EvalHook = std::function<std::optional<MetricsRecord>(const RoundView &)>;

struct TrainResult {
    SvmModel model;
    std::vector<RoundTrace> traces;

    [[nodiscard]] std::vector<MetricsRecord> metrics() const;
};

/// Projected gradient descent on the SVM dual, optionally against the
/// randomized top-k label attacker. Each round: attacker relabels from the
/// dataset labels, gradient Q~ lambda - 1 under the new labels, step, and
/// projection onto S(y~).
///
/// The object is copyable; a copy continues the same trajectory, including the
/// attacker's random stream.
class BinaryTrainer {
  public:
    BinaryTrainer(const Dataset &ds, const KernelSpec &kspec, const TrainConfig &config,
                  std::optional<AttackSpec> attack);

    RoundTrace step();
    [[nodiscard]] bool done() const noexcept { return round_ >= config_.rounds; }
    [[nodiscard]] std::size_t round() const noexcept { return round_; }

    [[nodiscard]] const std::vector<double> &lambda() const noexcept { return lambda_; }
    void set_lambda(std::vector<double> lambda);
    /// Uses a constant learning rate for the remaining rounds, dropping any
    /// decay schedule.
    void set_eta(double eta);
    /// Labels of the most recent round (the dataset labels before round 1).
    [[nodiscard]] const Labels &adversarial_labels() const noexcept { return current_labels_; }
    [[nodiscard]] const Rng &rng() const noexcept { return rng_; }
    [[nodiscard]] const TrainConfig &config() const noexcept { return config_; }

    /// Current iterate with the bias recovered under the current labels.
    [[nodiscard]] SvmModel model() const;

  private:
    TrainConfig config_;
    KernelSpec kspec_;
    std::optional<AttackSpec> attack_;
    std::shared_ptr<const Matrix> features_;
    Labels base_labels_;
    std::shared_ptr<const KernelOperator> kernel_;
    SignedKernel signed_;
    Labels current_labels_;
    std::vector<double> lambda_;
    Rng rng_;
    std::size_t round_ = 0;
};

/// Gap between a trainer and a perturbed copy, one entry per continued round.
struct ContinuationTrace {
    double initial_gap = 0.0;
    /// |lambda_t - lambda'_t|_inf after each continued round.
    std::vector<double> gaps;
    /// Whether both copies flipped the same indices in that round.
    std::vector<bool> same_flips;
};

/// Copies `base` twice, sets both to learning rate `eta`, moves one copy's
/// iterate by a uniform draw from [-radius, radius]^n (re-projected onto the
/// current feasible set) and steps both for `rounds` rounds. The two copies
/// share the attacker's random stream position.
ContinuationTrace perturbed_continuation(const BinaryTrainer &base, double eta, double radius, std::size_t rounds,
                                         std::uint64_t perturbation_seed);

/// True when the gap never grows (beyond 1e-12 of rounding drift) from the
/// first round with matching flip sets onward, and the last gap is below
/// `target`.
bool continuation_settles(const ContinuationTrace &trace, double target);

TrainResult train_floral(const Dataset &ds, const KernelSpec &kspec, const TrainConfig &config,
                         const AttackSpec &attack, const EvalHook &hook = {});

TrainResult train_vanilla(const Dataset &ds, const KernelSpec &kspec, const TrainConfig &config,
                          const EvalHook &hook = {});

/// Multi-class attacker: per-class candidate pools, k flips drawn from their
/// union, new classes drawn from q (uniform when empty).
struct MulticlassAttackSpec {
    std::vector<std::size_t> budgets;
    std::size_t flips_k = 0;
    std::vector<double> q;
    std::uint64_t seed = 0;
};

struct MulticlassRoundView {
    std::size_t round;
    const std::vector<SvmModel> &models;
    const std::vector<int> &class_labels;
};

using MulticlassEvalHook = std::function<std::optional<MetricsRecord>(const MulticlassRoundView &)>;

struct MulticlassTrainResult {
    std::vector<SvmModel> models;
    /// lambda_inf_norm, hyperplane_residual: max over classes; objective: sum.
    std::vector<RoundTrace> traces;
    /// Class labels used in each round, for flip accounting.
    std::vector<std::vector<int>> round_labels;

    [[nodiscard]] std::vector<MetricsRecord> metrics() const;
};

/// One-vs-all training with a shared adversarial class labelling per round.
MulticlassTrainResult train_multiclass(const MulticlassDataset &ds, const KernelSpec &kspec,
                                       const TrainConfig &config, const MulticlassAttackSpec &attack,
                                       const MulticlassEvalHook &hook = {});

/// +1 where class_labels == cls, -1 elsewhere.
Labels one_vs_all_labels(const std::vector<int> &class_labels, int cls);

}  // namespace floral
