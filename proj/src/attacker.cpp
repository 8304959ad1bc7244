#include "floral/attacker.hpp"

#include <algorithm>
#include <numeric>

namespace floral {

void AttackSpec::validate(std::size_t n) const {
    require(flips_k <= budget_B, "attack: flips_k must not exceed budget_B");
    require(budget_B <= n, "attack: budget_B must not exceed the training size");
}

IndexList select_candidates(std::span<const double> lambda, std::size_t B) {
    require(B <= lambda.size(), "select_candidates: budget exceeds training size");
    IndexList order(lambda.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto by_weight = [&](std::size_t a, std::size_t b) {
        return lambda[a] > lambda[b] || (lambda[a] == lambda[b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(B), order.end(), by_weight);
    order.resize(B);
    return order;
}

bool candidate_boundary_tie(std::span<const double> lambda, const IndexList &candidates) {
    if (candidates.empty() || candidates.size() >= lambda.size()) {
        return false;
    }
    const double cut = lambda[candidates.back()];
    std::vector<bool> inside(lambda.size(), false);
    for (std::size_t i : candidates) {
        inside[i] = true;
    }
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (!inside[i] && lambda[i] == cut) {
            return true;
        }
    }
    return false;
}

IndexList sample_without_replacement(const IndexList &pool, std::size_t k, Rng &rng) {
    IndexList work = pool;
    k = std::min(k, work.size());
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(work.size() - i));
        std::swap(work[i], work[j]);
    }
    work.resize(k);
    std::sort(work.begin(), work.end());
    return work;
}

FlipResult randomized_topk_flip(const Labels &labels, std::span<const double> lambda, const AttackSpec &spec,
                                Rng &rng) {
    require(labels.size() == lambda.size(), "randomized_topk_flip: size mismatch");
    spec.validate(labels.size());
    FlipResult out;
    if (spec.flips_k == 0) {
        out.labels = labels;
        return out;
    }
    const IndexList pool = select_candidates(lambda, spec.budget_B);
    out.boundary_tie = candidate_boundary_tie(lambda, pool);
    out.flipped = sample_without_replacement(pool, spec.flips_k, rng);
    out.labels = flip_labels(labels, out.flipped);
    return out;
}

MulticlassFlipResult multiclass_flip(const std::vector<int> &class_labels,
                                     const std::vector<std::vector<double>> &per_class_lambda,
                                     std::span<const std::size_t> budgets, std::size_t k, std::span<const double> q,
                                     Rng &rng) {
    const std::size_t classes = per_class_lambda.size();
    require(classes >= 2, "multiclass_flip: need at least two classes");
    require(budgets.size() == classes, "multiclass_flip: one budget per class required");
    require(q.empty() || q.size() == classes, "multiclass_flip: q must have one weight per class");

    MulticlassFlipResult out;
    out.class_labels = class_labels;
    if (k == 0) {
        return out;
    }
    for (std::size_t m = 0; m < classes; ++m) {
        const IndexList top = select_candidates(per_class_lambda[m], budgets[m]);
        out.pool.insert(out.pool.end(), top.begin(), top.end());
    }
    std::sort(out.pool.begin(), out.pool.end());
    out.pool.erase(std::unique(out.pool.begin(), out.pool.end()), out.pool.end());

    out.flipped = sample_without_replacement(out.pool, k, rng);
    for (std::size_t i : out.flipped) {
        const int current = class_labels[i];
        double total = 0.0;
        for (std::size_t m = 0; m < classes; ++m) {
            if (static_cast<int>(m) + 1 != current) {
                total += q.empty() ? 1.0 : q[m];
            }
        }
        require(total > 0.0, "multiclass_flip: q puts no mass on any other class");
        const double target = rng.uniform() * total;
        double acc = 0.0;
        int chosen = 0;
        for (std::size_t m = 0; m < classes; ++m) {
            if (static_cast<int>(m) + 1 == current) {
                continue;
            }
            const double w = q.empty() ? 1.0 : q[m];
            if (w <= 0.0) {
                continue;
            }
            chosen = static_cast<int>(m) + 1;
            acc += w;
            if (target < acc) {
                break;
            }
        }
        out.class_labels[i] = chosen;
    }
    return out;
}

}  // namespace floral
