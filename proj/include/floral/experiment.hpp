#pragma once

#include "floral/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace floral {

/// Flip count for a poison fraction on n training rows: 1% of n up to 5%
/// poison, 2% up to 10%, 5% up to 20%, 10% beyond. Never below 1.
std::size_t auto_flips(double poison_fraction, std::size_t n);

/// Moons train/test pair for one seed: generate, split, poison the train part.
struct MoonsSplit {
    Dataset train;
    Dataset test;
};

struct MoonsSource {
    std::size_t generate_n = 2000;
    std::size_t train_n = 500;
    double noise = 0.2;
};

MoonsSplit prepare_moons(const MoonsSource &source, double poison_fraction, std::uint64_t seed);

struct RunSpec {
    bool vanilla = false;
    KernelSpec kernel;
    TrainConfig train;
    /// Absent: auto_flips. Ignored for vanilla runs.
    std::optional<std::size_t> flips_k;
    /// Absent: 2k, capped at n.
    std::optional<std::size_t> budget_B;
    std::uint64_t seed = 0;
};

struct RunOutcome {
    TrainResult result;
    BestLast summary;
    std::size_t flips_k = 0;
    std::size_t budget_B = 0;
};

/// Trains on `split.train`, scoring every eval round on `split.test`.
/// `poison_fraction` only feeds the automatic flip count.
RunOutcome run_on_split(const MoonsSplit &split, const RunSpec &spec, double poison_fraction);

/// Thrown with one message per offending key.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(std::vector<std::string> problems);
    [[nodiscard]] const std::vector<std::string> &problems() const noexcept { return problems_; }

  private:
    std::vector<std::string> problems_;
};

enum class Method { Floral, Vanilla };

/// Sweep description read from a `key = value` file; see README for the keys.
struct ExperimentConfig {
    MoonsSource source;
    std::vector<double> fractions{0.0};
    std::vector<Method> methods{Method::Floral, Method::Vanilla};
    std::vector<double> C{10.0};
    std::vector<double> gamma{1.0};
    std::vector<double> eta{7e-4};
    std::size_t rounds = 500;
    std::optional<LrDecay> lr_decay;
    std::size_t warmup_rounds = 1;
    std::size_t eval_every = 10;
    /// Absent means auto_flips per fraction.
    std::optional<std::size_t> flips_k;
    std::optional<std::size_t> budget_B;
    /// Absent means exact up to 2000 training rows, fixed-point beyond.
    std::optional<ProjectionMethod> projection;
    FixedPointOptions fixed_point;
    std::vector<std::uint64_t> seeds{1};
    std::size_t jobs = 1;
    std::filesystem::path output_dir = "experiment_out";
};

ExperimentConfig parse_experiment_config(std::istream &in);
ExperimentConfig load_experiment_config(const std::filesystem::path &path);

ProjectionMethod default_projection(std::size_t train_n);

struct CellSummary {
    Method method = Method::Floral;
    double fraction = 0.0;
    double C = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
    std::size_t flips_k = 0;
    std::size_t budget_B = 0;
    std::size_t runs = 0;
    double mean_best = 0.0;
    double mean_last = 0.0;
    /// Mean final recovery rate; absent when nothing was poisoned.
    std::optional<double> mean_recovery;
};

/// Runs the full cross-product, writing `summary.csv` and one metrics file per
/// run under `runs/` in the output directory. Cells are returned in config
/// order regardless of `jobs`.
std::vector<CellSummary> run_experiment(const ExperimentConfig &config, std::ostream *progress = nullptr);

std::string method_name(Method m);

}  // namespace floral
