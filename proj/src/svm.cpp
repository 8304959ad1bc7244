#include "floral/svm.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace floral {

double dual_objective(const Matrix &q, std::span<const double> lambda) {
    const std::size_t n = lambda.size();
    require(q.rows() == n && q.cols() == n, "dual_objective: dimension mismatch");
    std::vector<double> ql(n);
    multiply(q, lambda, ql);
    double quad = 0.0;
    double linear = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        quad += lambda[i] * ql[i];
        linear += lambda[i];
    }
    return 0.5 * quad - linear;
}

std::vector<double> dual_gradient(const Matrix &q, std::span<const double> lambda) {
    const std::size_t n = lambda.size();
    require(q.rows() == n && q.cols() == n, "dual_gradient: dimension mismatch");
    std::vector<double> g(n);
    multiply(q, lambda, g);
    for (double &v : g) {
        v -= 1.0;
    }
    return g;
}

double decision_value(const SvmModel &model, std::span<const double> x) {
    const Matrix &train = *model.train_features;
    require(x.size() == train.cols(), "decision_value: dimension mismatch");
    double score = 0.0;
    for (std::size_t j = 0; j < model.size(); ++j) {
        if (model.lambda[j] != 0.0) {
            score += model.lambda[j] * model.train_labels[j] * kernel_eval(model.spec, x, train.row(j));
        }
    }
    return score + model.bias;
}

int predict(const SvmModel &model, std::span<const double> x) { return decision_value(model, x) >= 0.0 ? 1 : -1; }

std::vector<double> decision_values(const SvmModel &model, const Matrix &cross_kernel) {
    require(cross_kernel.cols() == model.size(), "decision_values: cross kernel width mismatch");
    std::vector<double> coef(model.size());
    for (std::size_t j = 0; j < coef.size(); ++j) {
        coef[j] = model.lambda[j] * model.train_labels[j];
    }
    std::vector<double> out(cross_kernel.rows());
    multiply(cross_kernel, coef, out);
    for (double &v : out) {
        v += model.bias;
    }
    return out;
}

double recover_bias(std::span<const double> lambda, std::span<const int> labels, double C,
                    std::span<const double> expansion) {
    require(lambda.size() == labels.size() && lambda.size() == expansion.size(), "recover_bias: size mismatch");
    const double tau = 1e-6 * C;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (lambda[i] > tau && lambda[i] < C - tau) {
            sum += labels[i] - expansion[i];
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double recover_bias(const SvmModel &model, const GramMatrix &k) {
    require(k.size() == model.size(), "recover_bias: kernel size mismatch");
    std::vector<double> coef(model.size());
    for (std::size_t j = 0; j < coef.size(); ++j) {
        coef[j] = model.lambda[j] * model.train_labels[j];
    }
    std::vector<double> expansion(model.size());
    multiply(k.entries(), coef, expansion);
    return recover_bias(model.lambda, model.train_labels, model.C, expansion);
}

SignedKernel::SignedKernel(std::shared_ptr<const KernelOperator> kernel, std::span<const int> labels)
    : kernel_(std::move(kernel)) {
    set_labels(labels);
}

void SignedKernel::set_labels(std::span<const int> labels) {
    require(labels.size() == kernel_->size(), "signed kernel: label count mismatch");
    signs_.assign(labels.begin(), labels.end());
}

void SignedKernel::apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    require(x.size() == n && y.size() == n, "signed kernel: dimension mismatch");
    std::vector<double> signed_x(n);
    for (std::size_t i = 0; i < n; ++i) {
        signed_x[i] = signs_[i] * x[i];
    }
    kernel_->apply(signed_x, y);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] *= signs_[i];
    }
}

std::vector<double> SignedKernel::expansion(std::span<const double> lambda) const {
    const std::size_t n = size();
    require(lambda.size() == n, "signed kernel: dimension mismatch");
    std::vector<double> coef(n);
    for (std::size_t i = 0; i < n; ++i) {
        coef[i] = signs_[i] * lambda[i];
    }
    std::vector<double> out(n);
    kernel_->apply(coef, out);
    return out;
}

double SignedKernel::objective(std::span<const double> lambda) const {
    std::vector<double> ql(size());
    apply(lambda, ql);
    double quad = 0.0;
    double linear = 0.0;
    for (std::size_t i = 0; i < ql.size(); ++i) {
        quad += lambda[i] * ql[i];
        linear += lambda[i];
    }
    return 0.5 * quad - linear;
}

// ---------------------------------------------------------------------------
// Model files

namespace {

using nlohmann::json;

json features_to_json(const Matrix &m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

std::shared_ptr<const Matrix> features_from_json(const json &rows) {
    const std::size_t n = rows.size();
    const std::size_t d = n == 0 ? 0 : rows.at(0).size();
    auto m = std::make_shared<Matrix>(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto &row = rows.at(i);
        if (row.size() != d) {
            throw std::runtime_error("model file: ragged train_features");
        }
        for (std::size_t j = 0; j < d; ++j) {
            (*m)(i, j) = row.at(j).get<double>();
        }
    }
    return m;
}

json model_body(const SvmModel &model) {
    return json{{"kernel", {{"kind", "rbf"}, {"gamma", model.spec.gamma}}},
                {"C", model.C},
                {"bias", model.bias},
                {"lambda", model.lambda},
                {"train_labels", model.train_labels}};
}

SvmModel model_from_body(const json &body, std::shared_ptr<const Matrix> features) {
    SvmModel model;
    if (body.at("kernel").at("kind").get<std::string>() != "rbf") {
        throw std::runtime_error("model file: unsupported kernel kind");
    }
    model.spec.gamma = body.at("kernel").at("gamma").get<double>();
    model.C = body.at("C").get<double>();
    model.bias = body.at("bias").get<double>();
    model.lambda = body.at("lambda").get<std::vector<double>>();
    model.train_labels = body.at("train_labels").get<Labels>();
    model.train_features = std::move(features);
    if (model.lambda.size() != model.train_labels.size() || model.lambda.size() != model.train_features->rows()) {
        throw std::runtime_error("model file: inconsistent lengths");
    }
    return model;
}

void write_json(const json &doc, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << doc.dump(1) << '\n';
}

json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return json::parse(in);
}

}  // namespace

void save_model(const SvmModel &model, const std::filesystem::path &path) {
    json doc = model_body(model);
    doc["format"] = "floral-svm";
    doc["version"] = 1;
    doc["train_features"] = features_to_json(*model.train_features);
    write_json(doc, path);
}

SvmModel load_model(const std::filesystem::path &path) {
    const json doc = read_json(path);
    if (doc.value("format", "") != "floral-svm") {
        throw std::runtime_error("model file: not a floral-svm document");
    }
    return model_from_body(doc, features_from_json(doc.at("train_features")));
}

void save_multiclass_model(const std::vector<SvmModel> &models, const std::filesystem::path &path) {
    require(!models.empty(), "save_multiclass_model: no models");
    json doc{{"format", "floral-svm-multiclass"}, {"version", 1}};
    doc["train_features"] = features_to_json(*models.front().train_features);
    doc["models"] = json::array();
    for (const auto &m : models) {
        doc["models"].push_back(model_body(m));
    }
    write_json(doc, path);
}

std::vector<SvmModel> load_multiclass_model(const std::filesystem::path &path) {
    const json doc = read_json(path);
    if (doc.value("format", "") != "floral-svm-multiclass") {
        throw std::runtime_error("model file: not a floral-svm-multiclass document");
    }
    auto features = features_from_json(doc.at("train_features"));
    std::vector<SvmModel> models;
    for (const auto &body : doc.at("models")) {
        models.push_back(model_from_body(body, features));
    }
    return models;
}

}  // namespace floral
