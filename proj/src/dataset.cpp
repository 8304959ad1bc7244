#include "floral/dataset.hpp"

#include "floral/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace floral {

void Dataset::validate() const {
    const std::size_t n = labels.size();
    require(n >= 2, "dataset needs at least two rows");
    require(features.rows() == n, "feature rows and label count differ");
    for (int y : labels) {
        require(y == 1 || y == -1, "labels must be +1 or -1");
    }
    if (!clean_labels) {
        require(poisoned_indices.empty(), "poisoned indices given without clean labels");
        return;
    }
    require(clean_labels->size() == n, "clean label count differs from label count");
    bool has_pos = false;
    bool has_neg = false;
    IndexList differing;
    for (std::size_t i = 0; i < n; ++i) {
        const int c = (*clean_labels)[i];
        require(c == 1 || c == -1, "clean labels must be +1 or -1");
        has_pos |= c == 1;
        has_neg |= c == -1;
        if (c != labels[i]) {
            differing.push_back(i);
        }
    }
    require(has_pos && has_neg, "clean labels must contain both classes");
    require(differing == poisoned_indices, "poisoned indices disagree with clean labels");
}

void MulticlassDataset::validate() const {
    require(num_classes >= 2, "need at least two classes");
    require(features.rows() == class_labels.size(), "feature rows and label count differ");
    std::vector<bool> seen(static_cast<std::size_t>(num_classes), false);
    for (int c : class_labels) {
        require(c >= 1 && c <= num_classes, "class label outside 1..M");
        seen[static_cast<std::size_t>(c - 1)] = true;
    }
    require(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }), "every class must appear");
}

Dataset generate_moons(std::size_t n, double noise_sd, std::uint64_t seed) {
    require(n >= 2, "generate_moons: n must be at least 2");
    require(noise_sd >= 0.0, "generate_moons: noise_sd must be nonnegative");
    Rng rng(seed);
    const std::size_t n_pos = n - n / 2;
    Dataset ds;
    ds.features = Matrix(n, 2);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = std::numbers::pi * rng.uniform();
        const bool upper = i < n_pos;
        double x = upper ? std::cos(theta) : 1.0 - std::cos(theta);
        double y = upper ? std::sin(theta) : 0.5 - std::sin(theta);
        x += noise_sd * rng.normal();
        y += noise_sd * rng.normal();
        ds.features(i, 0) = x;
        ds.features(i, 1) = y;
        ds.labels[i] = upper ? 1 : -1;
    }
    return ds;
}

MulticlassDataset generate_blobs(std::size_t per_class, int num_classes, double radius, double sd,
                                 std::uint64_t seed) {
    require(num_classes >= 2, "generate_blobs: need at least two classes");
    require(per_class >= 1, "generate_blobs: need at least one point per class");
    Rng rng(seed);
    MulticlassDataset ds;
    ds.num_classes = num_classes;
    const std::size_t n = per_class * static_cast<std::size_t>(num_classes);
    ds.features = Matrix(n, 2);
    ds.class_labels.resize(n);
    std::size_t row = 0;
    for (int m = 0; m < num_classes; ++m) {
        const double angle = 2.0 * std::numbers::pi * m / num_classes;
        for (std::size_t i = 0; i < per_class; ++i, ++row) {
            ds.features(row, 0) = radius * std::cos(angle) + sd * rng.normal();
            ds.features(row, 1) = radius * std::sin(angle) + sd * rng.normal();
            ds.class_labels[row] = m + 1;
        }
    }
    return ds;
}

double LinearSeparator::signed_distance(std::span<const double> x) const {
    require(x.size() == weights.size(), "signed_distance: dimension mismatch");
    double score = offset;
    double norm2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        score += weights[j] * x[j];
        norm2 += weights[j] * weights[j];
    }
    return norm2 > 0.0 ? score / std::sqrt(norm2) : 0.0;
}

LinearSeparator fit_least_squares(const Matrix &features, const Labels &labels) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    require(labels.size() == n, "fit_least_squares: label count mismatch");
    const std::size_t m = d + 1;

    // Normal equations on the design matrix [x, 1].
    Matrix a(m, m + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = features.row(i);
        for (std::size_t r = 0; r < m; ++r) {
            const double xr = r < d ? x[r] : 1.0;
            for (std::size_t c = 0; c < m; ++c) {
                a(r, c) += xr * (c < d ? x[c] : 1.0);
            }
            a(r, m) += xr * labels[i];
        }
    }

    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) {
                pivot = r;
            }
        }
        if (std::abs(a(pivot, col)) < 1e-12) {
            throw std::invalid_argument("fit_least_squares: singular design matrix");
        }
        if (pivot != col) {
            for (std::size_t c = 0; c <= m; ++c) {
                std::swap(a(pivot, c), a(col, c));
            }
        }
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) {
                continue;
            }
            const double f = a(r, col) / a(col, col);
            for (std::size_t c = col; c <= m; ++c) {
                a(r, c) -= f * a(col, c);
            }
        }
    }

    LinearSeparator sep;
    sep.weights.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        sep.weights[j] = a(j, m) / a(j, j);
    }
    sep.offset = a(d, m) / a(d, d);
    return sep;
}

Labels flip_labels(const Labels &labels, const IndexList &indices) {
    Labels out = labels;
    for (std::size_t i : indices) {
        out.at(i) = -out.at(i);
    }
    return out;
}

Dataset poison_by_boundary_distance(const Dataset &clean, double fraction, std::uint64_t /*seed*/) {
    require(fraction >= 0.0 && fraction <= 1.0, "poison fraction must lie in [0, 1]");
    const Labels &truth = clean.clean_labels ? *clean.clean_labels : clean.labels;
    const std::size_t n = truth.size();
    // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));

    Dataset out;
    out.features = clean.features;
    out.clean_labels = truth;
    if (count == 0) {
        out.labels = truth;
        return out;
    }

    const LinearSeparator sep = fit_least_squares(clean.features, truth);
    std::vector<double> distance(n);
    for (std::size_t i = 0; i < n; ++i) {
        distance[i] = std::abs(sep.signed_distance(clean.features.row(i)));
    }
    IndexList order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return distance[a] > distance[b]; });
    out.poisoned_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(out.poisoned_indices.begin(), out.poisoned_indices.end());
    out.labels = flip_labels(truth, out.poisoned_indices);
    return out;
}

namespace {

IndexList shuffled_order(std::size_t n, std::uint64_t seed) {
    IndexList order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    return order;
}

}  // namespace

std::pair<Dataset, Dataset> train_test_split(const Dataset &ds, std::size_t train_count, std::uint64_t seed) {
    const std::size_t n = ds.size();
    require(train_count <= n, "train_test_split: train_count exceeds dataset size");
    const IndexList order = shuffled_order(n, seed);

    auto take = [&](std::size_t begin, std::size_t end) {
        Dataset part;
        part.features = Matrix(end - begin, ds.dim());
        if (ds.clean_labels) {
            part.clean_labels.emplace();
        }
        for (std::size_t r = begin; r < end; ++r) {
            const std::size_t src = order[r];
            std::copy(ds.features.row(src).begin(), ds.features.row(src).end(), part.features.row(r - begin).begin());
            part.labels.push_back(ds.labels[src]);
            if (ds.clean_labels) {
                part.clean_labels->push_back((*ds.clean_labels)[src]);
                if ((*ds.clean_labels)[src] != ds.labels[src]) {
                    part.poisoned_indices.push_back(r - begin);
                }
            }
        }
        return part;
    };
    return {take(0, train_count), take(train_count, n)};
}

std::pair<MulticlassDataset, MulticlassDataset> train_test_split(const MulticlassDataset &ds, std::size_t train_count,
                                                                 std::uint64_t seed) {
    const std::size_t n = ds.size();
    require(train_count <= n, "train_test_split: train_count exceeds dataset size");
    const IndexList order = shuffled_order(n, seed);
    auto take = [&](std::size_t begin, std::size_t end) {
        MulticlassDataset part;
        part.num_classes = ds.num_classes;
        part.features = Matrix(end - begin, ds.features.cols());
        for (std::size_t r = begin; r < end; ++r) {
            const std::size_t src = order[r];
            std::copy(ds.features.row(src).begin(), ds.features.row(src).end(), part.features.row(r - begin).begin());
            part.class_labels.push_back(ds.class_labels[src]);
        }
        return part;
    };
    return {take(0, train_count), take(train_count, n)};
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return {buf, res.ptr};
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double value = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

std::optional<int> parse_int_exact(std::string_view s) {
    const auto v = parse_double(s);
    if (!v || *v != std::floor(*v) || std::abs(*v) > 1e9) {
        return std::nullopt;
    }
    return static_cast<int>(*v);
}

[[noreturn]] void fail_row(std::size_t row, const std::string &what) {
    throw CsvError("row " + std::to_string(row) + ": " + what);
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

RawTable read_table(const std::filesystem::path &path, const CsvOptions &options) {
    std::ifstream in(path);
    if (!in) {
        throw CsvError("cannot open " + path.string());
    }
    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_fields(line);
        if (first) {
            first = false;
            const bool numeric = std::all_of(fields.begin(), fields.end(),
                                             [](std::string_view f) { return parse_double(f).has_value(); });
            if (!numeric && options.header) {
                for (auto f : fields) {
                    table.header.emplace_back(f);
                }
                continue;
            }
        }
        std::vector<std::string> row;
        row.reserve(fields.size());
        for (auto f : fields) {
            row.emplace_back(f);
        }
        table.rows.push_back(std::move(row));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

/// Parses the first `d` fields of every row as features.
Matrix parse_features(const RawTable &table, std::size_t d) {
    Matrix features(table.rows.size(), d);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            const auto v = parse_double(table.rows[r][j]);
            if (!v) {
                fail_row(table.line_numbers[r], "cannot parse feature column " + std::to_string(j) + " value '" +
                                                    table.rows[r][j] + "'");
            }
            features(r, j) = *v;
        }
    }
    return features;
}

void check_widths(const RawTable &table, std::size_t width) {
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != width) {
            fail_row(table.line_numbers[r], "expected " + std::to_string(width) + " columns, found " +
                                                std::to_string(table.rows[r].size()));
        }
    }
}

}  // namespace

Dataset load_csv(const std::filesystem::path &path, CsvOptions options) {
    const RawTable table = read_table(path, options);
    if (table.rows.empty()) {
        throw CsvError(path.string() + ": no data rows");
    }
    const bool with_flags = !table.header.empty() && table.header.back() == "poisoned";
    const std::size_t width = table.header.empty() ? table.rows.front().size() : table.header.size();
    const std::size_t label_col = width - (with_flags ? 2 : 1);
    if (width < (with_flags ? 3U : 2U)) {
        throw CsvError(path.string() + ": need at least one feature column and a label column");
    }
    check_widths(table, width);

    Dataset ds;
    ds.features = parse_features(table, label_col);
    if (with_flags) {
        ds.clean_labels.emplace();
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &field = table.rows[r][label_col];
        const auto label = parse_int_exact(field);
        if (!label || (*label != 1 && *label != -1)) {
            fail_row(table.line_numbers[r], "invalid label " + field + " (expected +1 or -1)");
        }
        ds.labels.push_back(*label);
        if (with_flags) {
            const auto flag = parse_int_exact(table.rows[r][label_col + 1]);
            if (!flag || (*flag != 0 && *flag != 1)) {
                fail_row(table.line_numbers[r], "invalid poisoned flag " + table.rows[r][label_col + 1]);
            }
            ds.clean_labels->push_back(*flag ? -*label : *label);
            if (*flag) {
                ds.poisoned_indices.push_back(r);
            }
        }
    }
    return ds;
}

void save_csv(const Dataset &ds, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw CsvError("cannot write " + path.string());
    }
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        out << 'x' << j << ',';
    }
    out << "label" << (ds.clean_labels ? ",poisoned" : "") << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.features.row(i)) {
            out << format_double(v) << ',';
        }
        out << ds.labels[i];
        if (ds.clean_labels) {
            out << ',' << ((*ds.clean_labels)[i] != ds.labels[i] ? 1 : 0);
        }
        out << '\n';
    }
    if (!out) {
        throw CsvError("write failed for " + path.string());
    }
}

MulticlassDataset load_multiclass_csv(const std::filesystem::path &path, CsvOptions options) {
    const RawTable table = read_table(path, options);
    if (table.rows.empty()) {
        throw CsvError(path.string() + ": no data rows");
    }
    const std::size_t width = table.header.empty() ? table.rows.front().size() : table.header.size();
    if (width < 2) {
        throw CsvError(path.string() + ": need at least one feature column and a label column");
    }
    check_widths(table, width);

    MulticlassDataset ds;
    ds.features = parse_features(table, width - 1);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &field = table.rows[r][width - 1];
        const auto label = parse_int_exact(field);
        if (!label || *label < 1) {
            fail_row(table.line_numbers[r], "invalid class label " + field + " (expected an integer in 1..M)");
        }
        ds.class_labels.push_back(*label);
        ds.num_classes = std::max(ds.num_classes, *label);
    }
    try {
        ds.validate();
    } catch (const std::invalid_argument &e) {
        throw CsvError(path.string() + ": " + e.what());
    }
    return ds;
}

void save_multiclass_csv(const MulticlassDataset &ds, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw CsvError("cannot write " + path.string());
    }
    for (std::size_t j = 0; j < ds.features.cols(); ++j) {
        out << 'x' << j << ',';
    }
    out << "class\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.features.row(i)) {
            out << format_double(v) << ',';
        }
        out << ds.class_labels[i] << '\n';
    }
    if (!out) {
        throw CsvError("write failed for " + path.string());
    }
}

}  // namespace floral
