#include "floral/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace floral {

std::size_t auto_flips(double poison_fraction, std::size_t n) {
    double percent = 10.0;
    if (poison_fraction <= 0.05) {
        percent = 1.0;
    } else if (poison_fraction <= 0.10) {
        percent = 2.0;
    } else if (poison_fraction <= 0.20) {
        percent = 5.0;
    }
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * percent / 100.0 + 1e-9));
    return std::max<std::size_t>(k, 1);
}

MoonsSplit prepare_moons(const MoonsSource &source, double poison_fraction, std::uint64_t seed) {
    const Dataset all = generate_moons(source.generate_n, source.noise, seed);
    auto [train, test] = train_test_split(all, source.train_n, seed);
    return {poison_by_boundary_distance(train, poison_fraction, seed), std::move(test)};
}

RunOutcome run_on_split(const MoonsSplit &split, const RunSpec &spec, double poison_fraction) {
    const TestSetEvaluator evaluator(split.train, split.test, spec.kernel);
    const EvalHook hook = [&](const RoundView &view) -> std::optional<MetricsRecord> {
        return evaluator.evaluate(view.round, view.model, view.adversarial_labels);
    };
    RunOutcome out;
    if (spec.vanilla) {
        out.result = train_vanilla(split.train, spec.kernel, spec.train, hook);
    } else {
        const std::size_t n = split.train.size();
        out.flips_k = spec.flips_k.value_or(auto_flips(poison_fraction, n));
        out.budget_B = spec.budget_B.value_or(std::min(2 * out.flips_k, n));
        const AttackSpec attack{out.budget_B, out.flips_k, spec.seed};
        out.result = train_floral(split.train, spec.kernel, spec.train, attack, hook);
    }
    out.summary = best_last(out.result.metrics());
    return out;
}

namespace {

std::string join(const std::vector<std::string> &parts) {
    std::string out;
    for (const auto &p : parts) {
        out += out.empty() ? "" : "; ";
        out += p;
    }
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid experiment config: " + join(problems)), problems_(std::move(problems)) {}

std::string method_name(Method m) { return m == Method::Floral ? "floral" : "vanilla"; }

ProjectionMethod default_projection(std::size_t train_n) {
    return train_n <= 2000 ? ProjectionMethod::Exact : ProjectionMethod::FixedPoint;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string &value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(trim(item));
    }
    return out;
}

template <typename T>
std::optional<T> parse_number(const std::string &s) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

template <typename T>
std::optional<std::vector<T>> parse_list(const std::string &value) {
    std::vector<T> out;
    for (const auto &item : split_list(value)) {
        auto v = parse_number<T>(item);
        if (!v) {
            return std::nullopt;
        }
        out.push_back(*v);
    }
    if (out.empty()) {
        return std::nullopt;
    }
    return out;
}

class Parser {
  public:
    explicit Parser(std::map<std::string, std::pair<std::size_t, std::string>> entries)
        : entries_(std::move(entries)) {}

    std::vector<std::string> problems;

    /// Returns the raw value and marks the key as known.
    std::optional<std::pair<std::size_t, std::string>> take(const std::string &key) {
        known_.push_back(key);
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    void bad(const std::string &key, std::size_t line, const std::string &why) {
        problems.push_back("line " + std::to_string(line) + ": " + key + ": " + why);
    }

    template <typename T, typename Check>
    void list(const std::string &key, std::vector<T> &target, Check ok, const char *why) {
        if (auto raw = take(key)) {
            auto values = parse_list<T>(raw->second);
            if (!values || !std::all_of(values->begin(), values->end(), ok)) {
                bad(key, raw->first, why);
            } else {
                target = std::move(*values);
            }
        }
    }

    template <typename T, typename Check>
    void scalar(const std::string &key, T &target, Check ok, const char *why) {
        if (auto raw = take(key)) {
            auto v = parse_number<T>(raw->second);
            if (!v || !ok(*v)) {
                bad(key, raw->first, why);
            } else {
                target = *v;
            }
        }
    }

    void report_unknown() {
        for (const auto &[key, entry] : entries_) {
            if (std::find(known_.begin(), known_.end(), key) == known_.end()) {
                bad(key, entry.first, "unknown key");
            }
        }
    }

  private:
    std::map<std::string, std::pair<std::size_t, std::string>> entries_;
    std::vector<std::string> known_;
};

}  // namespace

ExperimentConfig parse_experiment_config(std::istream &in) {
    std::map<std::string, std::pair<std::size_t, std::string>> entries;
    std::vector<std::string> problems;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(line.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) {
            problems.push_back("line " + std::to_string(line_no) + ": empty key");
        } else if (!entries.emplace(key, std::make_pair(line_no, value)).second) {
            problems.push_back("line " + std::to_string(line_no) + ": " + key + ": duplicate key");
        }
    }

    ExperimentConfig cfg;
    Parser p(std::move(entries));
    p.problems = std::move(problems);
    const auto positive = [](auto v) { return v > 0; };
    const auto any = [](auto) { return true; };

    if (auto raw = p.take("dataset"); raw && raw->second != "moons") {
        p.bad("dataset", raw->first, "only 'moons' is supported");
    }
    p.scalar("generate_n", cfg.source.generate_n, [](std::size_t v) { return v >= 2; }, "expected an integer >= 2");
    p.scalar("train_n", cfg.source.train_n, positive, "expected a positive integer");
    p.scalar("noise", cfg.source.noise, [](double v) { return v >= 0.0; }, "expected a nonnegative number");
    p.list("fractions", cfg.fractions, [](double f) { return f >= 0.0 && f <= 1.0; },
           "expected numbers in [0, 1]");
    if (auto raw = p.take("methods")) {
        cfg.methods.clear();
        for (const auto &m : split_list(raw->second)) {
            if (m == "floral") {
                cfg.methods.push_back(Method::Floral);
            } else if (m == "vanilla") {
                cfg.methods.push_back(Method::Vanilla);
            } else {
                p.bad("methods", raw->first, "unknown method '" + m + "' (floral, vanilla)");
            }
        }
    }
    p.list("C", cfg.C, positive, "expected positive numbers");
    p.list("gamma", cfg.gamma, positive, "expected positive numbers");
    p.list("eta", cfg.eta, positive, "expected positive numbers");
    p.scalar("rounds", cfg.rounds, positive, "expected a positive integer");
    p.scalar("warmup_rounds", cfg.warmup_rounds, any, "expected an integer");
    p.scalar("eval_every", cfg.eval_every, positive, "expected a positive integer");

    const auto factor = p.take("lr_decay_factor");
    const auto at = p.take("lr_decay_at");
    if (factor || at) {
        LrDecay decay;
        auto f = factor ? parse_number<double>(factor->second) : std::optional<double>(decay.factor);
        if (!f || *f <= 0.0) {
            p.bad("lr_decay_factor", factor->first, "expected a positive number");
        } else {
            decay.factor = *f;
        }
        if (at) {
            if (auto rounds = parse_list<std::size_t>(at->second)) {
                decay.at_rounds = std::move(*rounds);
            } else {
                p.bad("lr_decay_at", at->first, "expected a list of round numbers");
            }
        }
        cfg.lr_decay = std::move(decay);
    }

    if (auto raw = p.take("k"); raw && raw->second != "auto") {
        if (auto v = parse_number<std::size_t>(raw->second)) {
            cfg.flips_k = *v;
        } else {
            p.bad("k", raw->first, "expected 'auto' or an integer");
        }
    }
    if (auto raw = p.take("budget_B")) {
        if (auto v = parse_number<std::size_t>(raw->second)) {
            cfg.budget_B = *v;
        } else {
            p.bad("budget_B", raw->first, "expected an integer");
        }
    }
    if (auto raw = p.take("projection")) {
        if (raw->second == "exact") {
            cfg.projection = ProjectionMethod::Exact;
        } else if (raw->second == "fixed-point") {
            cfg.projection = ProjectionMethod::FixedPoint;
        } else if (raw->second != "auto") {
            p.bad("projection", raw->first, "expected auto, exact or fixed-point");
        }
    }
    p.scalar("eps", cfg.fixed_point.eps, positive, "expected a positive number");
    p.scalar("max_iter", cfg.fixed_point.max_iter, positive, "expected a positive integer");
    p.list("seeds", cfg.seeds, any, "expected a list of integers");
    p.scalar("jobs", cfg.jobs, positive, "expected a positive integer");
    if (auto raw = p.take("output_dir")) {
        if (raw->second.empty()) {
            p.bad("output_dir", raw->first, "expected a path");
        } else {
            cfg.output_dir = raw->second;
        }
    }
    p.report_unknown();

    if (cfg.source.train_n >= cfg.source.generate_n) {
        p.problems.push_back("train_n: must be smaller than generate_n");
    }
    if (cfg.rounds < cfg.warmup_rounds) {
        p.problems.push_back("rounds: must be at least warmup_rounds");
    }
    if (cfg.flips_k && cfg.budget_B && *cfg.flips_k > *cfg.budget_B) {
        p.problems.push_back("k: exceeds budget_B");
    }
    if (cfg.budget_B && *cfg.budget_B > cfg.source.train_n) {
        p.problems.push_back("budget_B: exceeds train_n");
    }
    if (!p.problems.empty()) {
        throw ConfigError(std::move(p.problems));
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return parse_experiment_config(in);
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

struct Cell {
    Method method;
    double fraction;
    double C;
    double gamma;
    double eta;
};

struct Job {
    std::size_t cell;
    std::size_t split;
    std::uint64_t seed;
};

std::string run_file_name(const Cell &c, std::uint64_t seed) {
    return method_name(c.method) + "_f" + format_double(c.fraction) + "_C" + format_double(c.C) + "_g" +
           format_double(c.gamma) + "_eta" + format_double(c.eta) + "_seed" + std::to_string(seed) + ".csv";
}

void write_summary(const std::vector<CellSummary> &cells, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "method,fraction,C,gamma,eta,k,budget_B,runs,mean_best,mean_last,mean_recovery\n";
    for (const auto &c : cells) {
        out << method_name(c.method) << ',' << format_double(c.fraction) << ',' << format_double(c.C) << ','
            << format_double(c.gamma) << ',' << format_double(c.eta) << ',' << c.flips_k << ',' << c.budget_B << ','
            << c.runs << ',' << format_double(c.mean_best) << ',' << format_double(c.mean_last) << ',';
        if (c.mean_recovery) {
            out << format_double(*c.mean_recovery);
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

}  // namespace

std::vector<CellSummary> run_experiment(const ExperimentConfig &config, std::ostream *progress) {
    std::vector<Cell> cells;
    for (double f : config.fractions) {
        for (Method m : config.methods) {
            for (double C : config.C) {
                for (double g : config.gamma) {
                    for (double eta : config.eta) {
                        cells.push_back({m, f, C, g, eta});
                    }
                }
            }
        }
    }

    // One generated split per (fraction, seed), shared by every cell using it.
    std::vector<MoonsSplit> splits;
    for (double f : config.fractions) {
        for (std::uint64_t s : config.seeds) {
            splits.push_back(prepare_moons(config.source, f, s));
        }
    }
    const std::size_t seed_count = config.seeds.size();
    auto fraction_index = [&](double f) {
        return static_cast<std::size_t>(std::find(config.fractions.begin(), config.fractions.end(), f) -
                                        config.fractions.begin());
    };

    std::vector<Job> jobs;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t s = 0; s < seed_count; ++s) {
            jobs.push_back({c, fraction_index(cells[c].fraction) * seed_count + s, config.seeds[s]});
        }
    }

    const std::filesystem::path runs_dir = config.output_dir / "runs";
    std::filesystem::create_directories(runs_dir);

    std::vector<RunOutcome> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            try {
                const Job &job = jobs[j];
                const Cell &cell = cells[job.cell];
                RunSpec spec;
                spec.vanilla = cell.method == Method::Vanilla;
                spec.kernel.gamma = cell.gamma;
                spec.train.C = cell.C;
                spec.train.eta = cell.eta;
                spec.train.rounds = config.rounds;
                spec.train.lr_decay = config.lr_decay;
                spec.train.warmup_rounds = config.warmup_rounds;
                spec.train.eval_every = config.eval_every;
                spec.train.projection = config.projection.value_or(default_projection(config.source.train_n));
                spec.train.fixed_point = config.fixed_point;
                spec.flips_k = config.flips_k;
                spec.budget_B = config.budget_B;
                spec.seed = job.seed;
                outcomes[j] = run_on_split(splits[job.split], spec, cell.fraction);
                write_metrics_csv(outcomes[j].result.metrics(), runs_dir / run_file_name(cell, job.seed));
                if (progress) {
                    const std::lock_guard lock(log_mutex);
                    *progress << run_file_name(cell, job.seed) << " best=" << outcomes[j].summary.best
                              << " last=" << outcomes[j].summary.last << '\n';
                }
            } catch (...) {
                const std::lock_guard lock(log_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = jobs.size();
            }
        }
    };
    const std::size_t workers = std::min(config.jobs, std::max<std::size_t>(jobs.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto &t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::vector<CellSummary> summaries;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        CellSummary s;
        s.method = cells[c].method;
        s.fraction = cells[c].fraction;
        s.C = cells[c].C;
        s.gamma = cells[c].gamma;
        s.eta = cells[c].eta;
        double recovery = 0.0;
        std::size_t recovery_runs = 0;
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            if (jobs[j].cell != c) {
                continue;
            }
            const RunOutcome &o = outcomes[j];
            s.flips_k = o.flips_k;
            s.budget_B = o.budget_B;
            ++s.runs;
            s.mean_best += o.summary.best;
            s.mean_last += o.summary.last;
            const auto records = o.result.metrics();
            if (records.back().recovery_rate) {
                recovery += *records.back().recovery_rate;
                ++recovery_runs;
            }
        }
        s.mean_best /= static_cast<double>(s.runs);
        s.mean_last /= static_cast<double>(s.runs);
        if (recovery_runs > 0) {
            s.mean_recovery = recovery / static_cast<double>(recovery_runs);
        }
        summaries.push_back(s);
    }
    write_summary(summaries, config.output_dir / "summary.csv");
    return summaries;
}

}  // namespace floral
