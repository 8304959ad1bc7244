#pragma once

#include "floral/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace floral {

/// Signed binary labels, each exactly +1 or -1.
using Labels = std::vector<int>;
using IndexList = std::vector<std::size_t>;

/// Binary classification data, optionally carrying the clean labels it was
/// poisoned from.
struct Dataset {
    Matrix features;
    Labels labels;
    std::optional<Labels> clean_labels;
    /// Sorted ascending; exactly the rows where labels differ from clean_labels.
    IndexList poisoned_indices;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return features.cols(); }

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;

    friend bool operator==(const Dataset &, const Dataset &) = default;
};

/// Multi-class data with class ids in 1..M.
struct MulticlassDataset {
    Matrix features;
    std::vector<int> class_labels;
    int num_classes = 0;

    [[nodiscard]] std::size_t size() const noexcept { return class_labels.size(); }
    void validate() const;

    friend bool operator==(const MulticlassDataset &, const MulticlassDataset &) = default;
};

/// Two interleaving half circles with Gaussian noise; the first ceil(n/2) rows are
/// class +1, the rest class -1.
Dataset generate_moons(std::size_t n, double noise_sd, std::uint64_t seed);

/// Isotropic Gaussian blobs whose centres sit evenly on a circle of the given
/// radius. Rows are grouped by class.
MulticlassDataset generate_blobs(std::size_t per_class, int num_classes, double radius, double sd,
                                 std::uint64_t seed);

/// Least-squares separator w.x + c fitted to the labels.
struct LinearSeparator {
    std::vector<double> weights;
    double offset = 0.0;

    [[nodiscard]] double signed_distance(std::span<const double> x) const;
};

LinearSeparator fit_least_squares(const Matrix &features, const Labels &labels);

/// Flips the labels of the floor(fraction * n) points farthest from a
/// least-squares separator fitted to the clean labels. The procedure is
/// deterministic; `seed` is accepted for interface symmetry with the other
/// generators and does not change the result.
Dataset poison_by_boundary_distance(const Dataset &clean, double fraction, std::uint64_t seed);

/// Shuffled split: the first `train_count` shuffled rows become the train set.
std::pair<Dataset, Dataset> train_test_split(const Dataset &ds, std::size_t train_count, std::uint64_t seed);
std::pair<MulticlassDataset, MulticlassDataset> train_test_split(const MulticlassDataset &ds, std::size_t train_count,
                                                                 std::uint64_t seed);

/// Returns `labels` with the entries at `indices` negated.
Labels flip_labels(const Labels &labels, const IndexList &indices);

class CsvError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct CsvOptions {
    /// When set, a first line that does not parse as numbers is a header.
    bool header = false;
};

/// Columns: x0..x{d-1}, label, and an optional 0/1 `poisoned` column.
Dataset load_csv(const std::filesystem::path &path, CsvOptions options = {});
void save_csv(const Dataset &ds, const std::filesystem::path &path);

MulticlassDataset load_multiclass_csv(const std::filesystem::path &path, CsvOptions options = {});
void save_multiclass_csv(const MulticlassDataset &ds, const std::filesystem::path &path);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

}  // namespace floral
