#pragma once

#include "floral/dataset.hpp"
#include "floral/rng.hpp"
#include "oracle.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace test_support {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
  public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "floral_test_XXXXXX").string();
        if (mkdtemp(tmpl.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    [[nodiscard]] const fs::path &path() const { return path_; }
    [[nodiscard]] fs::path operator/(const std::string &name) const { return path_ / name; }

  private:
    fs::path path_;
};

inline std::string read_file(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
};

/// Runs the command-line tool with `args`; stderr is discarded.
inline CliResult run_cli(const std::string &args) {
    const std::string cmd = std::string("\"") + FLORAL_CLI + "\" " + args + " 2>/dev/null";
    CliResult r;
    FILE *pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return r;
    }
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) {
        r.out.append(buf, got);
    }
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline floral::Matrix random_matrix(floral::Rng &rng, std::size_t rows, std::size_t cols, double lo, double hi) {
    floral::Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(r, c) = lo + (hi - lo) * rng.uniform();
        }
    }
    return m;
}

/// Random signs with both classes present.
inline floral::Labels random_labels(floral::Rng &rng, std::size_t n) {
    floral::Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.uniform() < 0.5 ? 1 : -1;
    }
    if (n >= 2) {
        y[0] = 1;
        y[1] = -1;
    }
    return y;
}

inline std::vector<double> random_vector(floral::Rng &rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto &x : v) {
        x = lo + (hi - lo) * rng.uniform();
    }
    return v;
}

inline oracle::Mat to_rows(const floral::Matrix &m) {
    oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out[r][c] = m(r, c);
        }
    }
    return out;
}

inline floral::Dataset dataset_from(const floral::Matrix &x, const floral::Labels &y) {
    floral::Dataset ds;
    ds.features = x;
    ds.labels = y;
    return ds;
}

inline double max_abs_diff(const std::vector<double> &a, const std::vector<double> &b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

}  // namespace test_support
