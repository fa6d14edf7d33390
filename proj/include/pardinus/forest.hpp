// ============================================================================
// forest.hpp - random forest over reconstruction-error feature vectors
//
// CART trees on seeded bootstrap samples, Gini-impurity splits over mtry
// randomly drawn features per node, midpoint thresholds between sorted
// distinct values. Probability output is the mean over trees of the leaf
// animal fraction (soft voting), which gives a continuous score for ROC
// analysis. Ties between equally good splits resolve to the lowest feature
// index then the lowest threshold so training is deterministic everywhere.
// ============================================================================

#pragma once

#include <cstdint>
#include <vector>

#include "pardinus/grid_features.hpp"

namespace pardinus {

struct TreeNode {
    // internal node when feature_index >= 0, leaf otherwise
    int feature_index = -1;
    float threshold = 0.0f;
    int left = -1;   // child indices within the tree's node pool
    int right = -1;
    std::uint32_t n_empty = 0;  // leaf class counts
    std::uint32_t n_animal = 0;

    bool is_leaf() const { return feature_index < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
};

struct ForestParams {
    int n_trees = 200;
    int max_depth = 0;          // 0 = unlimited
    int mtry = 0;               // 0 = ceil(sqrt(d))
    int min_samples_leaf = 1;
    bool bootstrap = true;
};

struct ForestModel {
    ForestParams params;
    int feature_dim = 0;
    std::uint64_t seed = 0;
    std::vector<Tree> trees;
};

namespace detail {

inline double gini(std::size_t n_empty, std::size_t n_animal) {
    const double total = double(n_empty + n_animal);
    if (total == 0.0) return 0.0;
    const double pe = double(n_empty) / total;
    const double pa = double(n_animal) / total;
    return 1.0 - pe * pe - pa * pa;
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    float threshold = 0.0f;
    double impurity = 0.0; // weighted child impurity
};

struct TreeBuilder {
    const std::vector<FeatureVector>& data;
    const std::vector<int>& labels; // 0 empty, 1 animal
    ForestParams params;
    int feature_dim;
    Rng rng;
    Tree tree;

    // reusable scratch for split search
    std::vector<std::size_t> sorted;
    std::vector<int> feature_pool;

    TreeBuilder(const std::vector<FeatureVector>& d, const std::vector<int>& l,
                const ForestParams& p, int dim, std::uint64_t seed)
        : data(d), labels(l), params(p), feature_dim(dim), rng(seed) {
        feature_pool.resize(feature_dim);
        for (int i = 0; i < feature_dim; ++i) feature_pool[i] = i;
    }

    int build(std::vector<std::size_t>& indices, int depth) {
        std::size_t n_empty = 0, n_animal = 0;
        for (std::size_t i : indices) (labels[i] == 0 ? n_empty : n_animal)++;

        const int node_id = int(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[node_id].n_empty = std::uint32_t(n_empty);
        tree.nodes[node_id].n_animal = std::uint32_t(n_animal);

        const bool pure = n_empty == 0 || n_animal == 0;
        const bool depth_capped = params.max_depth > 0 && depth >= params.max_depth;
        const bool too_small = indices.size() < 2 * std::size_t(params.min_samples_leaf);
        if (pure || depth_capped || too_small) return node_id;

        const SplitChoice split = best_split(indices);
        if (!split.found) return node_id;

        std::vector<std::size_t> left_idx, right_idx;
        left_idx.reserve(indices.size());
        right_idx.reserve(indices.size());
        for (std::size_t i : indices)
            (data[i].values[split.feature] < split.threshold ? left_idx : right_idx).push_back(i);

        // release the parent's index memory before recursing
        indices.clear();
        indices.shrink_to_fit();

        tree.nodes[node_id].feature_index = split.feature;
        tree.nodes[node_id].threshold = split.threshold;
        const int left_id = build(left_idx, depth + 1);
        tree.nodes[node_id].left = left_id;
        const int right_id = build(right_idx, depth + 1);
        tree.nodes[node_id].right = right_id;
        return node_id;
    }

    // mtry features drawn without replacement; candidates are compared by
    // (weighted impurity, feature index, threshold), which fixes the
    // tie-break. If none of the mtry features admits a split, scanning
    // continues through the remaining features so an impure node with any
    // separating feature always splits (this is what lets a single
    // unrestricted tree memorize consistent data, and lets zero-gain splits
    // such as the XOR root go through).
    SplitChoice best_split(const std::vector<std::size_t>& indices) {
        const int mtry = params.mtry > 0
                             ? std::min(params.mtry, feature_dim)
                             : int(std::ceil(std::sqrt(double(feature_dim))));

        // full Fisher-Yates; only the first mtry entries are used unless
        // none of them yields a split
        for (int i = 0; i < feature_dim - 1; ++i) {
            const int j = i + int(rng.next_below(std::uint64_t(feature_dim - i)));
            std::swap(feature_pool[i], feature_pool[j]);
        }

        SplitChoice best;
        std::vector<int> chosen;
        int consumed = 0;
        while (!best.found && consumed < feature_dim) {
            const int take = consumed == 0 ? mtry : 1;
            chosen.assign(feature_pool.begin() + consumed,
                          feature_pool.begin() + std::min(consumed + take, feature_dim));
            consumed += int(chosen.size());
            std::sort(chosen.begin(), chosen.end());
            scan_features(indices, chosen, best);
        }
        return best;
    }

    void scan_features(const std::vector<std::size_t>& indices, const std::vector<int>& features,
                       SplitChoice& best) {
        const std::size_t n = indices.size();
        const std::size_t min_leaf = std::size_t(params.min_samples_leaf);

        for (int f : features) {
            sorted = indices;
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                const float va = data[a].values[f], vb = data[b].values[f];
                return va < vb || (va == vb && a < b);
            });

            std::size_t left_empty = 0, left_animal = 0;
            std::size_t total_empty = 0, total_animal = 0;
            for (std::size_t i : sorted) (labels[i] == 0 ? total_empty : total_animal)++;

            for (std::size_t pos = 0; pos + 1 < n; ++pos) {
                (labels[sorted[pos]] == 0 ? left_empty : left_animal)++;
                const float v = data[sorted[pos]].values[f];
                const float v_next = data[sorted[pos + 1]].values[f];
                if (v == v_next) continue; // only split between distinct values
                const std::size_t n_left = pos + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;

                const double weighted =
                    (double(n_left) * gini(left_empty, left_animal) +
                     double(n_right) * gini(total_empty - left_empty, total_animal - left_animal)) /
                    double(n);
                // features ascend and thresholds ascend within a feature, so
                // keeping the first strict winner realizes the lowest-feature
                // then lowest-threshold tie-break
                if (!best.found || weighted + 1e-12 < best.impurity) {
                    best.found = true;
                    best.feature = f;
                    best.threshold = float((double(v) + double(v_next)) / 2.0);
                    best.impurity = weighted;
                }
            }
        }
    }
};

} // namespace detail

inline ForestModel train_forest(const std::vector<FeatureVector>& data, const ForestParams& params,
                                std::uint64_t seed) {
    if (data.empty()) throw EmptyInput("train_forest: no training data");
    const int dim = int(data.front().values.size());
    std::vector<int> labels(data.size());
    std::size_t n_empty = 0, n_animal = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (int(data[i].values.size()) != dim)
            throw DimensionMismatch("train_forest: ragged feature dims");
        if (!data[i].label) throw EmptyInput("train_forest: unlabeled feature vector");
        labels[i] = *data[i].label == Label::animal ? 1 : 0;
        (labels[i] == 0 ? n_empty : n_animal)++;
    }
    if (n_empty == 0 || n_animal == 0)
        throw SingleClass("train_forest: both classes must be present");
    if (params.n_trees < 1) throw EmptyInput("train_forest: n_trees must be >= 1");

    ForestModel model;
    model.params = params;
    model.feature_dim = dim;
    model.seed = seed;
    model.trees.resize(std::size_t(params.n_trees));

    for (int t = 0; t < params.n_trees; ++t) {
        // per-tree seed derived from the master, so tree order or concurrent
        // construction can never change the result
        detail::TreeBuilder builder(data, labels, params, dim,
                                    derive_seed(seed, "tree", std::uint64_t(t)));

        std::vector<std::size_t> indices;
        indices.reserve(data.size());
        if (params.bootstrap) {
            Rng boot(derive_seed(seed, "bootstrap", std::uint64_t(t)));
            for (std::size_t i = 0; i < data.size(); ++i)
                indices.push_back(boot.next_below(data.size()));
        } else {
            for (std::size_t i = 0; i < data.size(); ++i) indices.push_back(i);
        }
        builder.build(indices, 0);
        model.trees[t] = std::move(builder.tree);
    }
    return model;
}

inline double predict_proba(const ForestModel& model, const FeatureVector& fv) {
    if (int(fv.values.size()) != model.feature_dim)
        throw DimensionMismatch("predict_proba: feature dim mismatch");
    double total = 0.0;
    for (const Tree& tree : model.trees) {
        int node = 0;
        while (!tree.nodes[node].is_leaf()) {
            const TreeNode& tn = tree.nodes[node];
            node = fv.values[tn.feature_index] < tn.threshold ? tn.left : tn.right;
        }
        const TreeNode& leaf = tree.nodes[node];
        total += double(leaf.n_animal) / double(leaf.n_empty + leaf.n_animal);
    }
    return total / double(model.trees.size());
}

inline Label predict(const ForestModel& model, const FeatureVector& fv, double threshold = 0.5) {
    if (threshold < 0.0 || threshold > 1.0)
        throw BadThreshold("predict: threshold must be in [0,1]");
    return predict_proba(model, fv) >= threshold ? Label::animal : Label::empty;
}

} // namespace pardinus
