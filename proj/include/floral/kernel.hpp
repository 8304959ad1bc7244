#pragma once

#include "floral/matrix.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace floral {

enum class KernelKind { Rbf };

/// k(x, x') = exp(-gamma * |x - x'|^2)
struct KernelSpec {
    KernelKind kind = KernelKind::Rbf;
    double gamma = 1.0;

    void validate() const;
    friend bool operator==(const KernelSpec &, const KernelSpec &) = default;
};

double kernel_eval(const KernelSpec &spec, std::span<const double> x, std::span<const double> x2);

/// Symmetric Gram matrix; entries are computed once per unordered pair so the
/// result is exactly symmetric.
class GramMatrix {
  public:
    GramMatrix(const KernelSpec &spec, const Matrix &features);

    [[nodiscard]] std::size_t size() const noexcept { return entries_.rows(); }
    [[nodiscard]] const Matrix &entries() const noexcept { return entries_; }
    [[nodiscard]] const KernelSpec &spec() const noexcept { return spec_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return entries_(i, j); }

  private:
    KernelSpec spec_;
    Matrix entries_;
};

GramMatrix gram(const KernelSpec &spec, const Matrix &features);

/// out[i][j] = labels[i] * labels[j] * K[i][j]
Matrix signed_gram(const GramMatrix &k, std::span<const int> labels);

/// Cross kernel block: out[i][j] = k(rows_a[i], rows_b[j]).
Matrix cross_gram(const KernelSpec &spec, const Matrix &rows_a, const Matrix &rows_b);

/// Applies K to a vector without committing to a storage strategy.
class KernelOperator {
  public:
    virtual ~KernelOperator() = default;
    [[nodiscard]] virtual std::size_t size() const noexcept = 0;
    /// y = K x
    virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
};

class DenseKernelOperator final : public KernelOperator {
  public:
    explicit DenseKernelOperator(GramMatrix k) : k_(std::move(k)) {}
    [[nodiscard]] std::size_t size() const noexcept override { return k_.size(); }
    void apply(std::span<const double> x, std::span<double> y) const override;
    [[nodiscard]] const GramMatrix &gram() const noexcept { return k_; }

  private:
    GramMatrix k_;
};

/// Recomputes row blocks of K on the fly; memory is O(block_rows * n).
class StreamingKernelOperator final : public KernelOperator {
  public:
    StreamingKernelOperator(const KernelSpec &spec, std::shared_ptr<const Matrix> features,
                            std::size_t block_rows = 256);
    [[nodiscard]] std::size_t size() const noexcept override { return features_->rows(); }
    void apply(std::span<const double> x, std::span<double> y) const override;

  private:
    KernelSpec spec_;
    std::shared_ptr<const Matrix> features_;
    std::size_t block_rows_;
};

/// Dense when the n x n Gram fits in `memory_cap_bytes`, streaming otherwise.
std::shared_ptr<const KernelOperator> make_kernel_operator(const KernelSpec &spec,
                                                           std::shared_ptr<const Matrix> features,
                                                           std::size_t memory_cap_bytes);

}  // namespace floral
