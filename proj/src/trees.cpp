#include "facetrait/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <queue>

#include "facetrait/rng.hpp"

namespace facetrait {

namespace {

// Candidate leaf during best-first growth. Holds, per feature, the node's
// sample indices sorted by feature value; children inherit by stable
// partition, so sorting happens only once at the root.
struct BuildNode {
    std::vector<std::vector<std::uint32_t>> sorted;
    double class_weight[2] = {0.0, 0.0};
    int node_index = -1;
    std::size_t order = 0;  // creation order, ties in gain break toward older nodes
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
};

double impurity_mass(double wf, double wm) {
    double w = wf + wm;
    if (w <= 0.0) return 0.0;
    return w - (wf * wf + wm * wm) / w;  // w * gini
}

void find_best_split(const EmbeddingDataset& data, const std::vector<double>& weights,
                     BuildNode& node) {
    node.best_gain = 0.0;
    node.best_feature = -1;
    double parent = impurity_mass(node.class_weight[0], node.class_weight[1]);
    if (parent <= 0.0) return;  // pure (or single-sample) node

    for (std::size_t f = 0; f < node.sorted.size(); ++f) {
        const auto& order = node.sorted[f];
        double left[2] = {0.0, 0.0};
        for (std::size_t r = 0; r + 1 < order.size(); ++r) {
            std::uint32_t i = order[r];
            left[static_cast<int>(data.label(i))] += weights[i];
            float v = data.features(i)[f];
            float v_next = data.features(order[r + 1])[f];
            if (v == v_next) continue;
            double right_f = node.class_weight[0] - left[0];
            double right_m = node.class_weight[1] - left[1];
            double gain =
                parent - impurity_mass(left[0], left[1]) - impurity_mass(right_f, right_m);
            if (gain > node.best_gain) {
                node.best_gain = gain;
                node.best_feature = static_cast<int>(f);
                node.best_threshold = 0.5 * (static_cast<double>(v) + v_next);
            }
        }
    }
}

TreeNode make_leaf(const double class_weight[2]) {
    TreeNode leaf;
    double total = class_weight[0] + class_weight[1];
    leaf.label = class_weight[1] > class_weight[0] ? GenderLabel::Male : GenderLabel::Female;
    leaf.male_fraction = total > 0.0 ? class_weight[1] / total : 0.0;
    return leaf;
}

}  // namespace

DecisionTree tree_train(const EmbeddingDataset& data, const std::vector<double>& weights,
                        std::size_t max_splits) {
    if (data.empty()) throw ContractError("tree_train: empty dataset");
    if (weights.size() != data.size())
        throw ContractError("tree_train: weights length must match record count");
    if (max_splits < 1) throw ContractError("tree_train: max_splits must be positive");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) throw ContractError("tree_train: bad sample weight");
        total += w;
    }
    if (total <= 0.0) throw ContractError("tree_train: zero total weight");

    std::vector<std::uint32_t> active;
    for (std::uint32_t i = 0; i < data.size(); ++i)
        if (weights[i] > 0.0) active.push_back(i);

    std::size_t d = data.dimension();
    DecisionTree tree;
    tree.max_splits = max_splits;
    tree.dimension = d;

    auto root = std::make_unique<BuildNode>();
    root->sorted.resize(d);
    for (std::size_t f = 0; f < d; ++f) {
        root->sorted[f] = active;
        std::sort(root->sorted[f].begin(), root->sorted[f].end(),
                  [&](std::uint32_t a, std::uint32_t b) {
                      float va = data.features(a)[f], vb = data.features(b)[f];
                      return va != vb ? va < vb : a < b;
                  });
    }
    for (auto i : active) root->class_weight[static_cast<int>(data.label(i))] += weights[i];

    tree.nodes.push_back(make_leaf(root->class_weight));
    root->node_index = 0;
    find_best_split(data, weights, *root);

    auto cmp = [](const std::unique_ptr<BuildNode>& a, const std::unique_ptr<BuildNode>& b) {
        if (a->best_gain != b->best_gain) return a->best_gain < b->best_gain;
        return a->order > b->order;
    };
    std::priority_queue<std::unique_ptr<BuildNode>, std::vector<std::unique_ptr<BuildNode>>,
                        decltype(cmp)>
        queue(cmp);
    if (root->best_feature >= 0) queue.push(std::move(root));

    std::vector<char> goes_left(data.size(), 0);
    std::size_t splits = 0;
    std::size_t next_order = 1;
    while (!queue.empty() && splits < max_splits) {
        auto node = std::move(const_cast<std::unique_ptr<BuildNode>&>(queue.top()));
        queue.pop();

        int f = node->best_feature;
        auto left = std::make_unique<BuildNode>();
        auto right = std::make_unique<BuildNode>();
        left->sorted.resize(d);
        right->sorted.resize(d);
        for (auto i : node->sorted[0]) {
            bool l = data.features(i)[static_cast<std::size_t>(f)] < node->best_threshold;
            goes_left[i] = l ? 1 : 0;
            (l ? left : right)->class_weight[static_cast<int>(data.label(i))] += weights[i];
        }
        for (std::size_t ff = 0; ff < d; ++ff) {
            for (auto i : node->sorted[ff])
                (goes_left[i] ? left : right)->sorted[ff].push_back(i);
        }

        int left_index = static_cast<int>(tree.nodes.size());
        {
            auto& parent = tree.nodes[static_cast<std::size_t>(node->node_index)];
            parent.feature = f;
            parent.threshold = node->best_threshold;
            parent.left = left_index;
            parent.right = left_index + 1;
        }
        tree.nodes.push_back(make_leaf(left->class_weight));
        tree.nodes.push_back(make_leaf(right->class_weight));
        left->node_index = left_index;
        right->node_index = left_index + 1;
        left->order = next_order++;
        right->order = next_order++;
        ++splits;

        if (splits < max_splits) {
            find_best_split(data, weights, *left);
            find_best_split(data, weights, *right);
            if (left->best_feature >= 0) queue.push(std::move(left));
            if (right->best_feature >= 0) queue.push(std::move(right));
        }
    }
    return tree;
}

std::pair<GenderLabel, double> tree_predict(const DecisionTree& tree, std::span<const float> x) {
    if (x.size() != tree.dimension) throw ContractError("tree_predict dimension mismatch");
    const TreeNode* node = &tree.nodes[0];
    while (node->feature >= 0) {
        bool l = x[static_cast<std::size_t>(node->feature)] < node->threshold;
        node = &tree.nodes[static_cast<std::size_t>(l ? node->left : node->right)];
    }
    return {node->label, node->male_fraction};
}

namespace {

std::vector<double> bootstrap_weights(std::size_t n, Rng& rng) {
    std::vector<double> w(n, 0.0);
    double unit = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) w[rng.uniform_index(n)] += unit;
    return w;
}

// Boosting core shared by AdaBoost and RUSBoost; round_weights maps the
// current distribution to what the round's tree actually sees.
template <typename RoundWeights>
EnsembleModel boost_train(const EmbeddingDataset& data, std::size_t n_learners,
                          std::size_t max_splits, double learn_rate, std::uint64_t seed,
                          EnsembleKind kind, RoundWeights round_weights,
                          std::vector<double>* weight_sums) {
    if (data.count(GenderLabel::Female) == 0 || data.count(GenderLabel::Male) == 0)
        throw TrainingError("boosting needs both classes present");
    std::size_t n = data.size();

    EnsembleModel model;
    model.kind = kind;
    model.seed = seed;
    model.dimension = data.dimension();

    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    if (weight_sums) weight_sums->clear();
    for (std::size_t t = 0; t < n_learners; ++t) {
        if (weight_sums) {
            double s = 0.0;
            for (double wi : w) s += wi;
            weight_sums->push_back(s);
        }
        DecisionTree tree = tree_train(data, round_weights(w, derive_seed(seed, t)), max_splits);

        double eps = 0.0;
        std::vector<char> wrong(n);
        for (std::size_t i = 0; i < n; ++i) {
            wrong[i] = tree_predict(tree, data.features(i)).first != data.label(i);
            if (wrong[i]) eps += w[i];
        }
        if (eps >= 0.5) break;  // no better than chance: discard and stop
        double eps_c = std::max(eps, 1e-10);
        double beta = learn_rate * 0.5 * std::log((1.0 - eps_c) / eps_c);
        model.learners.push_back({std::move(tree), beta, {}});
        if (eps == 0.0) break;

        // w_i *= exp(-beta y_i h_i); y h = +1 when correct
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= std::exp(wrong[i] ? beta : -beta);
            sum += w[i];
        }
        for (auto& wi : w) wi /= sum;
    }
    if (model.learners.empty())
        throw TrainingError("boosting produced no usable learner (first round at chance level)");
    return model;
}

}  // namespace

EnsembleModel bagging_train(const EmbeddingDataset& data, std::size_t n_learners,
                            std::size_t max_splits, std::uint64_t seed, bool bootstrap) {
    if (data.empty()) throw ContractError("bagging_train: empty dataset");
    EnsembleModel model;
    model.kind = EnsembleKind::Bagging;
    model.seed = seed;
    model.dimension = data.dimension();
    std::vector<double> uniform(data.size(), 1.0 / static_cast<double>(data.size()));
    for (std::size_t l = 0; l < n_learners; ++l) {
        Rng rng(derive_seed(seed, l));
        auto w = bootstrap ? bootstrap_weights(data.size(), rng) : uniform;
        model.learners.push_back({tree_train(data, w, max_splits), 1.0, {}});
    }
    return model;
}

EnsembleModel adaboost_train(const EmbeddingDataset& data, std::size_t n_learners,
                             std::size_t max_splits, double learn_rate, std::uint64_t seed,
                             std::vector<double>* weight_sums) {
    return boost_train(data, n_learners, max_splits, learn_rate, seed, EnsembleKind::AdaBoost,
                       [](const std::vector<double>& w, std::uint64_t) { return w; },
                       weight_sums);
}

std::vector<double> rusboost_round_weights(const EmbeddingDataset& data,
                                           const std::vector<double>& weights,
                                           std::uint64_t round_seed) {
    std::size_t count[2] = {data.count(GenderLabel::Female), data.count(GenderLabel::Male)};
    std::vector<double> round(weights.size(), 0.0);
    if (count[0] == count[1]) {
        // already balanced: keep everything
        for (std::size_t i = 0; i < weights.size(); ++i)
            round[i] = std::max(weights[i], 1e-300);
    } else {
        int majority = count[1] > count[0] ? 1 : 0;
        std::size_t minority_count = std::min(count[0], count[1]);
        // keep the whole minority class; take a weight-proportional
        // without-replacement sample of the majority (largest log(u)/w
        // keys win)
        Rng rng(round_seed);
        std::vector<std::pair<double, std::uint32_t>> keys;
        for (std::uint32_t i = 0; i < weights.size(); ++i) {
            if (static_cast<int>(data.label(i)) != majority) {
                round[i] = std::max(weights[i], 1e-300);
                continue;
            }
            double u = rng.uniform();
            while (u <= 0.0) u = rng.uniform();
            double key = weights[i] > 0.0 ? std::log(u) / weights[i]
                                          : -std::numeric_limits<double>::infinity();
            keys.emplace_back(key, i);
        }
        std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t r = 0; r < minority_count; ++r)
            round[keys[r].second] = std::max(weights[keys[r].second], 1e-300);
    }
    double sum = std::accumulate(round.begin(), round.end(), 0.0);
    for (auto& v : round) v /= sum;
    return round;
}

EnsembleModel rusboost_train(const EmbeddingDataset& data, std::size_t n_learners,
                             std::size_t max_splits, double learn_rate, std::uint64_t seed,
                             std::vector<double>* weight_sums) {
    return boost_train(data, n_learners, max_splits, learn_rate, seed, EnsembleKind::RusBoost,
                       [&data](const std::vector<double>& w, std::uint64_t round_seed) {
                           return rusboost_round_weights(data, w, round_seed);
                       },
                       weight_sums);
}

EnsembleModel subspace_discriminant_train(const EmbeddingDataset& data, std::size_t n_learners,
                                          std::size_t subspace_dim, std::uint64_t seed) {
    std::size_t d = data.dimension();
    if (subspace_dim < 1 || subspace_dim > d)
        throw ContractError("subspace_dim must lie in [1, dimension]");

    EnsembleModel model;
    model.kind = EnsembleKind::SubspaceDiscriminant;
    model.seed = seed;
    model.dimension = d;
    for (std::size_t l = 0; l < n_learners; ++l) {
        Rng rng(derive_seed(seed, l));
        std::vector<std::uint32_t> all(d);
        std::iota(all.begin(), all.end(), 0);
        // partial Fisher-Yates: first subspace_dim entries are the subset
        for (std::size_t i = 0; i < subspace_dim; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(d - i));
            std::swap(all[i], all[j]);
        }
        std::vector<std::uint32_t> subset(all.begin(),
                                          all.begin() + static_cast<std::ptrdiff_t>(subspace_dim));
        std::sort(subset.begin(), subset.end());

        EmbeddingDataset sub(subspace_dim, data.source_tag());
        for (std::size_t i = 0; i < data.size(); ++i) {
            EmbeddingRecord rec;
            rec.label = data.label(i);
            rec.features.reserve(subspace_dim);
            auto x = data.features(i);
            for (auto f : subset) rec.features.push_back(x[f]);
            sub.add(std::move(rec));
        }
        model.learners.push_back({lda_fit(sub), 1.0, std::move(subset)});
    }
    return model;
}

std::pair<GenderLabel, double> ensemble_predict(const EnsembleModel& model,
                                                std::span<const float> x) {
    if (x.size() != model.dimension) throw ContractError("ensemble_predict dimension mismatch");
    if (model.learners.empty()) throw ContractError("ensemble has no learners");

    switch (model.kind) {
        case EnsembleKind::Bagging: {
            double score = 0.0;
            for (const auto& l : model.learners)
                score += tree_predict(std::get<DecisionTree>(l.base), x).second;
            score /= static_cast<double>(model.learners.size());
            return {score > 0.5 ? GenderLabel::Male : GenderLabel::Female, score};
        }
        case EnsembleKind::AdaBoost:
        case EnsembleKind::RusBoost: {
            double male_mass = 0.0, total = 0.0;
            for (const auto& l : model.learners) {
                auto [lab, frac] = tree_predict(std::get<DecisionTree>(l.base), x);
                total += l.weight;
                if (lab == GenderLabel::Male) male_mass += l.weight;
            }
            double score = total > 0.0 ? male_mass / total : 0.0;
            bool male = male_mass > total - male_mass;  // sign of sum(beta*h); tie -> Female
            return {male ? GenderLabel::Male : GenderLabel::Female, score};
        }
        case EnsembleKind::SubspaceDiscriminant: {
            double odds = 0.0;
            std::vector<float> sub;
            for (const auto& l : model.learners) {
                sub.clear();
                for (auto f : l.feature_subset) sub.push_back(x[f]);
                odds += lda_score(std::get<LdaModel>(l.base), sub);
            }
            odds /= static_cast<double>(model.learners.size());
            double score = 1.0 / (1.0 + std::exp(-odds));
            return {odds > 0.0 ? GenderLabel::Male : GenderLabel::Female, score};
        }
    }
    throw ContractError("unknown ensemble kind");
}

}  // namespace facetrait
