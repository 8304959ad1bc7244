#pragma once

#include "floral/dataset.hpp"
#include "floral/svm.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace floral {

struct MetricsRecord {
    std::size_t round = 0;
    double test_accuracy = 0.0;
    double mean_hinge = 0.0;
    std::optional<double> recovery_rate;

    friend bool operator==(const MetricsRecord &, const MetricsRecord &) = default;
};

/// Fraction of test rows whose prediction equals the clean label. Uses
/// `clean_labels` when the test set carries them.
double accuracy(const SvmModel &model, const Dataset &test);

/// Mean over the test set of max(0, 1 - y f(x)).
double mean_hinge(const SvmModel &model, const Dataset &test);

/// Share of the initially poisoned rows whose label in `final_labels` equals
/// the clean label; absent when nothing was poisoned.
std::optional<double> recovery_rate(const IndexList &initial_poisoned, const Labels &clean_labels,
                                    const Labels &final_labels);

/// Scores a model on a fixed test set. The test-by-train kernel block is
/// computed once so per-round evaluation is a single matrix-vector product.
class TestSetEvaluator {
  public:
    TestSetEvaluator(const Dataset &train, const Dataset &test, const KernelSpec &spec);

    [[nodiscard]] MetricsRecord evaluate(std::size_t round, const SvmModel &model, const Labels &adversarial) const;

  private:
    Matrix cross_;
    Labels test_labels_;
    IndexList poisoned_;
    std::optional<Labels> clean_train_;
};

/// Argmax over per-class decision values; ties go to the lowest class id.
int predict_multiclass(const std::vector<SvmModel> &models, std::span<const double> x);
double multiclass_accuracy(const std::vector<SvmModel> &models, const MulticlassDataset &test);

class MulticlassEvaluator {
  public:
    MulticlassEvaluator(const MulticlassDataset &train, const MulticlassDataset &test, const KernelSpec &spec);

    /// mean_hinge is the one-vs-all hinge averaged over classes and rows.
    [[nodiscard]] MetricsRecord evaluate(std::size_t round, const std::vector<SvmModel> &models) const;

  private:
    Matrix cross_;
    std::vector<int> test_labels_;
};

struct BestLast {
    double best = 0.0;
    double last = 0.0;
};

/// Best = max over records, Last = the final record.
BestLast best_last(const std::vector<MetricsRecord> &records);

/// Columns round,test_accuracy,mean_hinge,recovery_rate; an absent recovery
/// rate is an empty cell.
void write_metrics_csv(const std::vector<MetricsRecord> &records, const std::filesystem::path &path);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path &path);

}  // namespace floral
