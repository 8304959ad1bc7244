#include "floral/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace floral {

namespace {

const Labels &truth_of(const Dataset &ds) { return ds.clean_labels ? *ds.clean_labels : ds.labels; }

void require_nonempty(const Dataset &test) { require(test.size() > 0, "metrics: empty test set"); }

}  // namespace

double accuracy(const SvmModel &model, const Dataset &test) {
    require_nonempty(test);
    const Labels &truth = truth_of(test);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        correct += predict(model, test.features.row(i)) == truth[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

double mean_hinge(const SvmModel &model, const Dataset &test) {
    require_nonempty(test);
    const Labels &truth = truth_of(test);
    double total = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        total += std::max(0.0, 1.0 - truth[i] * decision_value(model, test.features.row(i)));
    }
    return total / static_cast<double>(test.size());
}

std::optional<double> recovery_rate(const IndexList &initial_poisoned, const Labels &clean_labels,
                                    const Labels &final_labels) {
    if (initial_poisoned.empty()) {
        return std::nullopt;
    }
    std::size_t restored = 0;
    for (std::size_t i : initial_poisoned) {
        restored += final_labels.at(i) == clean_labels.at(i) ? 1 : 0;
    }
    return static_cast<double>(restored) / static_cast<double>(initial_poisoned.size());
}

TestSetEvaluator::TestSetEvaluator(const Dataset &train, const Dataset &test, const KernelSpec &spec)
    : cross_(cross_gram(spec, test.features, train.features)),
      test_labels_(truth_of(test)),
      poisoned_(train.poisoned_indices),
      clean_train_(train.clean_labels) {
    require_nonempty(test);
}

MetricsRecord TestSetEvaluator::evaluate(std::size_t round, const SvmModel &model, const Labels &adversarial) const {
    const std::vector<double> scores = decision_values(model, cross_);
    MetricsRecord rec;
    rec.round = round;
    std::size_t correct = 0;
    double hinge = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int predicted = scores[i] >= 0.0 ? 1 : -1;
        correct += predicted == test_labels_[i] ? 1 : 0;
        hinge += std::max(0.0, 1.0 - test_labels_[i] * scores[i]);
    }
    rec.test_accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
    rec.mean_hinge = hinge / static_cast<double>(scores.size());
    if (clean_train_) {
        rec.recovery_rate = recovery_rate(poisoned_, *clean_train_, adversarial);
    }
    return rec;
}

int predict_multiclass(const std::vector<SvmModel> &models, std::span<const double> x) {
    require(!models.empty(), "predict_multiclass: no models");
    int best = 1;
    double best_score = decision_value(models[0], x);
    for (std::size_t m = 1; m < models.size(); ++m) {
        const double s = decision_value(models[m], x);
        if (s > best_score) {
            best_score = s;
            best = static_cast<int>(m) + 1;
        }
    }
    return best;
}

double multiclass_accuracy(const std::vector<SvmModel> &models, const MulticlassDataset &test) {
    require(test.size() > 0, "metrics: empty test set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        correct += predict_multiclass(models, test.features.row(i)) == test.class_labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

MulticlassEvaluator::MulticlassEvaluator(const MulticlassDataset &train, const MulticlassDataset &test,
                                         const KernelSpec &spec)
    : cross_(cross_gram(spec, test.features, train.features)), test_labels_(test.class_labels) {
    require(test.size() > 0, "metrics: empty test set");
}

MetricsRecord MulticlassEvaluator::evaluate(std::size_t round, const std::vector<SvmModel> &models) const {
    const std::size_t n = test_labels_.size();
    std::vector<std::vector<double>> scores;
    scores.reserve(models.size());
    for (const auto &m : models) {
        scores.push_back(decision_values(m, cross_));
    }
    MetricsRecord rec;
    rec.round = round;
    std::size_t correct = 0;
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        int best = 1;
        for (std::size_t m = 0; m < models.size(); ++m) {
            if (scores[m][i] > scores[static_cast<std::size_t>(best - 1)][i]) {
                best = static_cast<int>(m) + 1;
            }
            const double y = test_labels_[i] == static_cast<int>(m) + 1 ? 1.0 : -1.0;
            hinge += std::max(0.0, 1.0 - y * scores[m][i]);
        }
        correct += best == test_labels_[i] ? 1 : 0;
    }
    rec.test_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    rec.mean_hinge = hinge / static_cast<double>(n * models.size());
    return rec;
}

BestLast best_last(const std::vector<MetricsRecord> &records) {
    require(!records.empty(), "best_last: no records");
    BestLast out;
    out.best = records.front().test_accuracy;
    for (const auto &r : records) {
        out.best = std::max(out.best, r.test_accuracy);
    }
    out.last = records.back().test_accuracy;
    return out;
}

void write_metrics_csv(const std::vector<MetricsRecord> &records, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "round,test_accuracy,mean_hinge,recovery_rate\n";
    for (const auto &r : records) {
        out << r.round << ',' << format_double(r.test_accuracy) << ',' << format_double(r.mean_hinge) << ',';
        if (r.recovery_rate) {
            out << format_double(*r.recovery_rate);
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line.rfind("round,test_accuracy,mean_hinge,recovery_rate", 0) != 0) {
        throw std::runtime_error(path.string() + ": missing metrics header");
    }
    auto number = [&](const std::string &field) {
        double v = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
            throw std::runtime_error(path.string() + ": bad number '" + field + "'");
        }
        return v;
    };
    std::vector<MetricsRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) {
            fields.push_back(f);
        }
        if (fields.size() == 3) {
            fields.emplace_back();
        }
        if (fields.size() != 4) {
            throw std::runtime_error(path.string() + ": expected 4 columns");
        }
        MetricsRecord r;
        r.round = static_cast<std::size_t>(number(fields[0]));
        r.test_accuracy = number(fields[1]);
        r.mean_hinge = number(fields[2]);
        if (!fields[3].empty()) {
            r.recovery_rate = number(fields[3]);
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace floral
