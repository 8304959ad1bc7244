#include "floral/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace floral {

void multiply(const Matrix &a, std::span<const double> x, std::span<double> y) {
    require(a.cols() == x.size() && a.rows() == y.size(), "multiply: dimension mismatch");
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto row = a.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            acc += row[j] * x[j];
        }
        y[i] = acc;
    }
}

void KernelSpec::validate() const { require(gamma > 0.0, "kernel gamma must be positive"); }

double kernel_eval(const KernelSpec &spec, std::span<const double> x, std::span<const double> x2) {
    require(x.size() == x2.size(), "kernel_eval: dimension mismatch");
    double dist2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - x2[j];
        dist2 += diff * diff;
    }
    return std::exp(-spec.gamma * dist2);
}

GramMatrix::GramMatrix(const KernelSpec &spec, const Matrix &features) : spec_(spec) {
    spec.validate();
    const std::size_t n = features.rows();
    require(n >= 1, "gram: need at least one row");
    entries_ = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        entries_(i, i) = kernel_eval(spec, features.row(i), features.row(i));
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = kernel_eval(spec, features.row(i), features.row(j));
            entries_(i, j) = v;
            entries_(j, i) = v;
        }
    }
}

GramMatrix gram(const KernelSpec &spec, const Matrix &features) { return GramMatrix(spec, features); }

Matrix signed_gram(const GramMatrix &k, std::span<const int> labels) {
    const std::size_t n = k.size();
    require(labels.size() == n, "signed_gram: label count does not match kernel size");
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out(i, j) = static_cast<double>(labels[i] * labels[j]) * k(i, j);
        }
    }
    return out;
}

Matrix cross_gram(const KernelSpec &spec, const Matrix &rows_a, const Matrix &rows_b) {
    spec.validate();
    require(rows_a.cols() == rows_b.cols(), "cross_gram: dimension mismatch");
    Matrix out(rows_a.rows(), rows_b.rows());
    for (std::size_t i = 0; i < rows_a.rows(); ++i) {
        for (std::size_t j = 0; j < rows_b.rows(); ++j) {
            out(i, j) = kernel_eval(spec, rows_a.row(i), rows_b.row(j));
        }
    }
    return out;
}

void DenseKernelOperator::apply(std::span<const double> x, std::span<double> y) const {
    multiply(k_.entries(), x, y);
}

StreamingKernelOperator::StreamingKernelOperator(const KernelSpec &spec, std::shared_ptr<const Matrix> features,
                                                 std::size_t block_rows)
    : spec_(spec), features_(std::move(features)), block_rows_(std::max<std::size_t>(block_rows, 1)) {
    spec_.validate();
    require(features_ && features_->rows() >= 1, "streaming kernel: need at least one row");
}

void StreamingKernelOperator::apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = features_->rows();
    require(x.size() == n && y.size() == n, "streaming kernel: dimension mismatch");
    std::vector<double> block(block_rows_ * n);
    for (std::size_t begin = 0; begin < n; begin += block_rows_) {
        const std::size_t end = std::min(n, begin + block_rows_);
        for (std::size_t i = begin; i < end; ++i) {
            double *row = block.data() + (i - begin) * n;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = kernel_eval(spec_, features_->row(i), features_->row(j));
            }
        }
        for (std::size_t i = begin; i < end; ++i) {
            const double *row = block.data() + (i - begin) * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
    }
}

std::shared_ptr<const KernelOperator> make_kernel_operator(const KernelSpec &spec,
                                                           std::shared_ptr<const Matrix> features,
                                                           std::size_t memory_cap_bytes) {
    const std::size_t n = features->rows();
    const double dense_bytes = static_cast<double>(n) * static_cast<double>(n) * sizeof(double);
    if (dense_bytes <= static_cast<double>(memory_cap_bytes)) {
        return std::make_shared<DenseKernelOperator>(GramMatrix(spec, *features));
    }
    return std::make_shared<StreamingKernelOperator>(spec, std::move(features));
}

}  // namespace floral
