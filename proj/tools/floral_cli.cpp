// Command-line front end: data generation, poisoning, training and sweeps.
//
// Exit codes: 0 success, 1 I/O or other runtime error, 2 usage or validation,
// 3 numerical failure (projection did not converge).

#include "floral/experiment.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <iostream>

namespace {

using namespace floral;

constexpr int kUsage = 2;
constexpr int kNumerical = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// gen-data

struct GenArgs {
    std::string kind;
    std::size_t n = 0;
    double noise = 0.2;
    std::size_t per_class = 100;
    int classes = 3;
    double radius = 5.0;
    double sd = 1.0;
    std::uint64_t seed = 0;
    std::string out;
};

void add_gen_data(CLI::App &app, GenArgs &a) {
    auto *cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset as CSV");
    cmd->add_option("kind", a.kind, "moons or blobs")->required()->check(CLI::IsMember({"moons", "blobs"}));
    cmd->add_option("--n", a.n, "Number of rows (moons)");
    cmd->add_option("--noise", a.noise, "Gaussian noise sd (moons)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--per-class", a.per_class, "Rows per class (blobs)");
    cmd->add_option("--classes", a.classes, "Number of classes (blobs)");
    cmd->add_option("--radius", a.radius, "Radius of the circle holding the class centres (blobs)");
    cmd->add_option("--sd", a.sd, "Per-class sd (blobs)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", a.seed, "Random seed");
    cmd->add_option("--out", a.out, "Output CSV path")->required();
}

int run_gen_data(const GenArgs &a) {
    if (a.kind == "moons") {
        if (a.n < 2) {
            throw UsageError("gen-data moons: --n must be at least 2");
        }
        save_csv(generate_moons(a.n, a.noise, a.seed), a.out);
    } else {
        if (a.classes < 2 || a.per_class < 1) {
            throw UsageError("gen-data blobs: need --classes >= 2 and --per-class >= 1");
        }
        save_multiclass_csv(generate_blobs(a.per_class, a.classes, a.radius, a.sd, a.seed), a.out);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
    std::string in;
    std::size_t train_size = 0;
    std::uint64_t seed = 0;
    std::string out_train;
    std::string out_test;
    bool multiclass = false;
};

void add_split(CLI::App &app, SplitArgs &a) {
    auto *cmd = app.add_subcommand("split", "Shuffle a dataset into train and test parts");
    cmd->add_option("--in", a.in, "Input CSV")->required();
    cmd->add_option("--train-size", a.train_size, "Rows in the train part")->required();
    cmd->add_option("--seed", a.seed, "Shuffle seed");
    cmd->add_option("--out-train", a.out_train, "Train CSV path")->required();
    cmd->add_option("--out-test", a.out_test, "Test CSV path")->required();
    cmd->add_flag("--multiclass", a.multiclass, "Input uses class ids 1..M");
}

int run_split(const SplitArgs &a) {
    if (a.multiclass) {
        const auto ds = load_multiclass_csv(a.in, {.header = true});
        if (a.train_size > ds.size()) {
            throw UsageError("split: --train-size exceeds the number of rows");
        }
        auto [train, test] = train_test_split(ds, a.train_size, a.seed);
        save_multiclass_csv(train, a.out_train);
        save_multiclass_csv(test, a.out_test);
        return 0;
    }
    const Dataset ds = load_csv(a.in, {.header = true});
    if (a.train_size > ds.size()) {
        throw UsageError("split: --train-size exceeds the number of rows");
    }
    auto [train, test] = train_test_split(ds, a.train_size, a.seed);
    save_csv(train, a.out_train);
    save_csv(test, a.out_test);
    return 0;
}

// ---------------------------------------------------------------------------
// poison

struct PoisonArgs {
    std::string in;
    double fraction = 0.0;
    std::uint64_t seed = 0;
    std::string out;
};

void add_poison(CLI::App &app, PoisonArgs &a) {
    auto *cmd = app.add_subcommand("poison", "Flip the labels farthest from a linear separator");
    cmd->add_option("--in", a.in, "Clean CSV")->required();
    cmd->add_option("--fraction", a.fraction, "Share of rows to flip, in [0, 1]")->required();
    cmd->add_option("--seed", a.seed, "Accepted for symmetry; the procedure is deterministic");
    cmd->add_option("--out", a.out, "Output CSV with a poisoned column")->required();
}

int run_poison(const PoisonArgs &a) {
    if (!(a.fraction >= 0.0 && a.fraction <= 1.0)) {
        throw UsageError("poison: --fraction must lie in [0, 1]");
    }
    const Dataset ds = load_csv(a.in, {.header = true});
    save_csv(poison_by_boundary_distance(ds, a.fraction, a.seed), a.out);
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data;
    std::string test;
    double C = 10.0;
    double gamma = 1.0;
    double eta = 3e-4;
    std::size_t rounds = 500;
    std::optional<std::size_t> budget_B;
    std::string k = "auto";
    std::string projection = "auto";
    double eps = 1e-21;
    std::size_t max_iter = 1000;
    std::size_t fallback_cap = 5000;
    std::uint64_t seed = 0;
    std::string out_model;
    std::string out_metrics;
    bool vanilla = false;
    bool multiclass = false;
    double decay_factor = 0.1;
    std::vector<std::size_t> decay_at;
    std::size_t warmup = 1;
    std::size_t eval_every = 10;
    CLI::Option *k_opt = nullptr;
};

void add_train(CLI::App &app, TrainArgs &a) {
    auto *cmd = app.add_subcommand("train", "Train a kernel SVM, adversarially unless --vanilla");
    cmd->add_option("--data", a.data, "Training CSV")->required();
    cmd->add_option("--test", a.test, "Clean-labelled test CSV")->required();
    cmd->add_option("--C", a.C, "Box constraint")->check(CLI::PositiveNumber);
    cmd->add_option("--gamma", a.gamma, "RBF width")->check(CLI::PositiveNumber);
    cmd->add_option("--eta", a.eta, "Learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--rounds", a.rounds, "Training rounds");
    cmd->add_option("--budget-B", a.budget_B, "Attacker candidate pool size (default 2k)");
    a.k_opt = cmd->add_option("--k", a.k, "Flips per round, or 'auto' to pick from the poisoned share");
    cmd->add_option("--projection", a.projection, "exact, fixed-point or auto")
        ->check(CLI::IsMember({"exact", "fixed-point", "auto"}));
    cmd->add_option("--eps", a.eps, "Fixed-point stopping tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", a.max_iter, "Fixed-point iteration cap");
    cmd->add_option("--fallback-cap", a.fallback_cap,
                    "Largest training set for which a failed fixed-point projection falls back to the exact one");
    cmd->add_option("--seed", a.seed, "Attacker seed");
    cmd->add_option("--out-model", a.out_model, "Model JSON path");
    cmd->add_option("--out-metrics", a.out_metrics, "Metrics CSV path");
    cmd->add_flag("--vanilla", a.vanilla, "Plain PGD training without the attacker");
    cmd->add_flag("--multiclass", a.multiclass, "One-vs-all training on class ids 1..M");
    cmd->add_option("--lr-decay-factor", a.decay_factor, "Learning-rate decay factor")->check(CLI::PositiveNumber);
    cmd->add_option("--lr-decay-at", a.decay_at, "Rounds at which the decay applies")->delimiter(',');
    cmd->add_option("--warmup", a.warmup, "Rounds without attacks at the start");
    cmd->add_option("--eval-every", a.eval_every, "Evaluation period in rounds");
}

TrainConfig train_config(const TrainArgs &a, std::size_t n) {
    TrainConfig cfg;
    cfg.C = a.C;
    cfg.eta = a.eta;
    cfg.rounds = a.rounds;
    cfg.warmup_rounds = a.warmup;
    cfg.eval_every = a.eval_every;
    if (!a.decay_at.empty()) {
        cfg.lr_decay = LrDecay{a.decay_factor, a.decay_at};
    }
    if (a.projection == "exact") {
        cfg.projection = ProjectionMethod::Exact;
    } else if (a.projection == "fixed-point") {
        cfg.projection = ProjectionMethod::FixedPoint;
    } else {
        cfg.projection = default_projection(n);
    }
    cfg.fixed_point.eps = a.eps;
    cfg.fixed_point.max_iter = a.max_iter;
    cfg.exact_fallback_cap = a.fallback_cap;
    cfg.validate();
    return cfg;
}

std::size_t parse_count(const std::string &text, const char *flag) {
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw UsageError(std::string("train: ") + flag + " expects a nonnegative integer");
    }
    return v;
}

void print_summary(const std::vector<MetricsRecord> &records) {
    const BestLast bl = best_last(records);
    std::cout << "best_accuracy=" << format_double(bl.best) << '\n';
    std::cout << "last_accuracy=" << format_double(bl.last) << '\n';
}

int run_train_binary(const TrainArgs &a) {
    const Dataset train = load_csv(a.data, {.header = true});
    const Dataset test = load_csv(a.test, {.header = true});
    const TrainConfig cfg = train_config(a, train.size());
    KernelSpec ks;
    ks.gamma = a.gamma;
    const TestSetEvaluator evaluator(train, test, ks);
    const EvalHook hook = [&](const RoundView &v) -> std::optional<MetricsRecord> {
        return evaluator.evaluate(v.round, v.model, v.adversarial_labels);
    };

    TrainResult result;
    if (a.vanilla) {
        result = train_vanilla(train, ks, cfg, hook);
    } else {
        const std::size_t n = train.size();
        const double share = static_cast<double>(train.poisoned_indices.size()) / static_cast<double>(n);
        const std::size_t k = a.k == "auto" ? auto_flips(share, n) : parse_count(a.k, "--k");
        const std::size_t B = a.budget_B.value_or(std::min(2 * k, n));
        if (k > B || B > n) {
            throw UsageError("train: need k <= budget-B <= number of training rows");
        }
        result = train_floral(train, ks, cfg, AttackSpec{B, k, a.seed}, hook);
    }
    if (!a.out_model.empty()) {
        save_model(result.model, a.out_model);
    }
    if (!a.out_metrics.empty()) {
        write_metrics_csv(result.metrics(), a.out_metrics);
    }
    print_summary(result.metrics());
    return 0;
}

int run_train_multiclass(const TrainArgs &a) {
    const MulticlassDataset train = load_multiclass_csv(a.data, {.header = true});
    const MulticlassDataset test = load_multiclass_csv(a.test, {.header = true});
    require(test.num_classes <= train.num_classes, "train: test set has classes unseen in training");
    const TrainConfig cfg = train_config(a, train.size());
    KernelSpec ks;
    ks.gamma = a.gamma;
    const MulticlassEvaluator evaluator(train, test, ks);
    const MulticlassEvalHook hook = [&](const MulticlassRoundView &v) -> std::optional<MetricsRecord> {
        return evaluator.evaluate(v.round, v.models);
    };

    MulticlassAttackSpec attack;
    attack.seed = a.seed;
    if (!a.vanilla) {
        const std::size_t n = train.size();
        attack.flips_k = a.k == "auto" ? auto_flips(0.0, n) : parse_count(a.k, "--k");
        const std::size_t B = a.budget_B.value_or(std::min(2 * attack.flips_k, n));
        if (attack.flips_k > B || B > n) {
            throw UsageError("train: need k <= budget-B <= number of training rows");
        }
        attack.budgets.assign(static_cast<std::size_t>(train.num_classes), B);
    }
    const MulticlassTrainResult result = train_multiclass(train, ks, cfg, attack, hook);
    if (!a.out_model.empty()) {
        save_multiclass_model(result.models, a.out_model);
    }
    if (!a.out_metrics.empty()) {
        write_metrics_csv(result.metrics(), a.out_metrics);
    }
    print_summary(result.metrics());
    return 0;
}

int run_train(const TrainArgs &a) {
    if (a.vanilla && (a.budget_B || a.k_opt->count() > 0)) {
        throw UsageError("train: --vanilla cannot be combined with --budget-B or --k");
    }
    return a.multiclass ? run_train_multiclass(a) : run_train_binary(a);
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
    std::string config;
    std::optional<std::size_t> jobs;
};

void add_experiment(CLI::App &app, ExperimentArgs &a) {
    auto *cmd = app.add_subcommand("experiment", "Run a sweep described by a key = value config file");
    cmd->add_option("config", a.config, "Config file")->required();
    cmd->add_option("--jobs", a.jobs, "Parallel runs (overrides the config)");
}

int run_experiment_cmd(const ExperimentArgs &a) {
    ExperimentConfig cfg;
    try {
        cfg = load_experiment_config(a.config);
    } catch (const ConfigError &e) {
        std::cerr << "experiment: invalid config " << a.config << '\n';
        for (const auto &p : e.problems()) {
            std::cerr << "  " << p << '\n';
        }
        return kUsage;
    }
    if (a.jobs) {
        if (*a.jobs == 0) {
            throw UsageError("experiment: --jobs must be positive");
        }
        cfg.jobs = *a.jobs;
    }
    const auto cells = run_experiment(cfg, &std::cerr);
    std::cout << "summary=" << (cfg.output_dir / "summary.csv").string() << '\n';
    for (const auto &c : cells) {
        std::cout << method_name(c.method) << " fraction=" << format_double(c.fraction)
                  << " mean_best=" << format_double(c.mean_best) << " mean_last=" << format_double(c.mean_last)
                  << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Adversarial kernel SVM training against label poisoning"};
    app.require_subcommand(1);
    GenArgs gen;
    SplitArgs split;
    PoisonArgs poison;
    TrainArgs train;
    ExperimentArgs experiment;
    add_gen_data(app, gen);
    add_split(app, split);
    add_poison(app, poison);
    add_train(app, train);
    add_experiment(app, experiment);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kUsage;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "gen-data") {
            return run_gen_data(gen);
        }
        if (name == "split") {
            return run_split(split);
        }
        if (name == "poison") {
            return run_poison(poison);
        }
        if (name == "train") {
            return run_train(train);
        }
        return run_experiment_cmd(experiment);
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const CsvError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ProjectionFailure &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
