#pragma once

#include "floral/dataset.hpp"
#include "floral/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace floral {

/// Label-flipping adversary: flip k labels drawn uniformly from the B training
/// points with the largest dual weights.
struct AttackSpec {
    std::size_t budget_B = 0;
    std::size_t flips_k = 0;
    std::uint64_t seed = 0;

    /// flips_k <= budget_B <= n
    void validate(std::size_t n) const;
};

struct FlipResult {
    Labels labels;
    /// Sorted ascending.
    IndexList flipped;
    /// True when a point outside the candidate pool has the same lambda as the
    /// last point inside it, so the index tie rule decided membership.
    bool boundary_tie = false;
};

/// Indices of the B largest lambda values, ordered by decreasing lambda with
/// ties broken by ascending index.
IndexList select_candidates(std::span<const double> lambda, std::size_t B);

/// True when 0 < B < n and the B-th and (B+1)-th largest lambda are equal.
bool candidate_boundary_tie(std::span<const double> lambda, const IndexList &candidates);

/// Draws k of `pool` uniformly without replacement (partial Fisher-Yates).
IndexList sample_without_replacement(const IndexList &pool, std::size_t k, Rng &rng);

FlipResult randomized_topk_flip(const Labels &labels, std::span<const double> lambda, const AttackSpec &spec,
                                Rng &rng);

struct MulticlassFlipResult {
    std::vector<int> class_labels;
    IndexList flipped;
    /// Union of the per-class candidate pools, ascending.
    IndexList pool;
};

/// Union of per-class top-B_m pools, k indices drawn uniformly from it, each
/// relabelled by sampling q restricted to the other classes. An empty `q`
/// means uniform. If the pool holds fewer than k indices all are flipped.
MulticlassFlipResult multiclass_flip(const std::vector<int> &class_labels,
                                     const std::vector<std::vector<double>> &per_class_lambda,
                                     std::span<const std::size_t> budgets, std::size_t k, std::span<const double> q,
                                     Rng &rng);

}  // namespace floral
