#pragma once

#include "floral/dataset.hpp"
#include "floral/kernel.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace floral {

/// Soft-margin kernel SVM in dual form:
///   f(x) = sum_j lambda_j y_j k(x, x_j) + b
struct SvmModel {
    std::vector<double> lambda;
    double bias = 0.0;
    std::shared_ptr<const Matrix> train_features;
    /// The labels lambda was last optimised against.
    Labels train_labels;
    KernelSpec spec;
    double C = 1.0;

    [[nodiscard]] std::size_t size() const noexcept { return lambda.size(); }
};

/// 0.5 * lambda' Q lambda - sum(lambda)
double dual_objective(const Matrix &q, std::span<const double> lambda);

/// Q lambda - 1
std::vector<double> dual_gradient(const Matrix &q, std::span<const double> lambda);

/// Raw margin score before taking the sign.
double decision_value(const SvmModel &model, std::span<const double> x);

/// Sign of the decision value; a zero score maps to +1.
int predict(const SvmModel &model, std::span<const double> x);

/// Decision values of many points from a precomputed cross kernel block
/// (rows = points, cols = training rows).
std::vector<double> decision_values(const SvmModel &model, const Matrix &cross_kernel);

/// Bias from KKT residuals averaged over margin vectors
/// M = { i : tau < lambda_i < C - tau }, tau = 1e-6 C.
/// `expansion[i]` must hold sum_j lambda_j y_j K_ij. Returns 0 when M is empty.
double recover_bias(std::span<const double> lambda, std::span<const int> labels, double C,
                    std::span<const double> expansion);

double recover_bias(const SvmModel &model, const GramMatrix &k);

/// Q~ = diag(y) K diag(y) applied through a kernel operator, so relabelling never
/// touches kernel values.
class SignedKernel {
  public:
    SignedKernel(std::shared_ptr<const KernelOperator> kernel, std::span<const int> labels);

    void set_labels(std::span<const int> labels);
    [[nodiscard]] std::size_t size() const noexcept { return kernel_->size(); }
    [[nodiscard]] const KernelOperator &kernel() const noexcept { return *kernel_; }

    /// y = Q~ x
    void apply(std::span<const double> x, std::span<double> y) const;

    /// K (labels o lambda), i.e. the unbiased decision value at every training row.
    [[nodiscard]] std::vector<double> expansion(std::span<const double> lambda) const;

    [[nodiscard]] double objective(std::span<const double> lambda) const;

  private:
    std::shared_ptr<const KernelOperator> kernel_;
    std::vector<double> signs_;
};

void save_model(const SvmModel &model, const std::filesystem::path &path);
SvmModel load_model(const std::filesystem::path &path);

/// One-vs-all model set, class m+1 scored by models[m].
void save_multiclass_model(const std::vector<SvmModel> &models, const std::filesystem::path &path);
std::vector<SvmModel> load_multiclass_model(const std::filesystem::path &path);

}  // namespace floral
