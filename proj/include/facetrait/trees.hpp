#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "facetrait/baselines.hpp"
#include "facetrait/types.hpp"

namespace facetrait {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    GenderLabel label = GenderLabel::Female;  // leaf payload
    double male_fraction = 0.0;               // weighted Male mass at the leaf
};

// CART, weighted Gini criterion, best-first growth under a global budget on
// internal nodes. Candidate thresholds are midpoints between consecutive
// distinct feature values; queries go left when x[feature] < threshold.
struct DecisionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root
    std::size_t max_splits = 0;
    std::size_t dimension = 0;

    std::size_t internal_count() const {
        std::size_t n = 0;
        for (const auto& nd : nodes)
            if (nd.feature >= 0) ++n;
        return n;
    }
};

DecisionTree tree_train(const EmbeddingDataset& data, const std::vector<double>& weights,
                        std::size_t max_splits);

std::pair<GenderLabel, double> tree_predict(const DecisionTree& tree, std::span<const float> x);

enum class EnsembleKind : std::uint8_t {
    Bagging = 0,
    AdaBoost = 1,
    RusBoost = 2,
    SubspaceDiscriminant = 3
};

struct EnsembleLearner {
    std::variant<DecisionTree, LdaModel> base;
    double weight = 1.0;                        // 1 for Bagging/Subspace
    std::vector<std::uint32_t> feature_subset;  // Subspace only
};

struct EnsembleModel {
    EnsembleKind kind = EnsembleKind::Bagging;
    std::vector<EnsembleLearner> learners;
    std::uint64_t seed = 0;
    std::size_t dimension = 0;
};

// Bootstrap-resampled trees; averaging of leaf scores. `bootstrap=false` is a
// test hook that trains every learner on the full sample.
EnsembleModel bagging_train(const EmbeddingDataset& data, std::size_t n_learners,
                            std::size_t max_splits, std::uint64_t seed, bool bootstrap = true);

// Classic binary AdaBoost over weighted trees; stops early on a perfect or
// no-better-than-chance round. weight_sums, when given, records the total
// sample weight entering each round (must stay 1 after renormalization).
EnsembleModel adaboost_train(const EmbeddingDataset& data, std::size_t n_learners,
                             std::size_t max_splits, double learn_rate, std::uint64_t seed,
                             std::vector<double>* weight_sums = nullptr);

// AdaBoost with each round's tree fit on a class-balanced random undersample
// (majority class down-sampled, weight-proportional, without replacement).
// Weight updates still apply to the full set.
EnsembleModel rusboost_train(const EmbeddingDataset& data, std::size_t n_learners,
                             std::size_t max_splits, double learn_rate, std::uint64_t seed,
                             std::vector<double>* weight_sums = nullptr);

// One LDA per learner on a random feature subset of size subspace_dim;
// prediction averages posterior-odds scores and thresholds at 0.
EnsembleModel subspace_discriminant_train(const EmbeddingDataset& data, std::size_t n_learners,
                                          std::size_t subspace_dim, std::uint64_t seed);

std::pair<GenderLabel, double> ensemble_predict(const EnsembleModel& model,
                                                std::span<const float> x);

// The sample distribution one RUSBoost round hands its tree, given the
// current boosting weights. Zero weight = excluded from the round's
// subsample. Exposed so the exact class balance of round subsamples can be
// inspected.
std::vector<double> rusboost_round_weights(const EmbeddingDataset& data,
                                           const std::vector<double>& weights,
                                           std::uint64_t round_seed);

}  // namespace facetrait
