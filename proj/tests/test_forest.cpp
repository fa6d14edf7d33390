#include <catch2/catch.hpp>

#include "pardinus/forest.hpp"

using namespace pardinus;

namespace {

FeatureVector fv(std::vector<float> values, Label label) {
    FeatureVector f;
    f.values = std::move(values);
    f.label = label;
    return f;
}

FeatureVector probe(std::vector<float> values) {
    FeatureVector f;
    f.values = std::move(values);
    return f;
}

bool same_tree(const Tree& a, const Tree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const TreeNode& x = a.nodes[i];
        const TreeNode& y = b.nodes[i];
        if (x.feature_index != y.feature_index || x.threshold != y.threshold ||
            x.left != y.left || x.right != y.right || x.n_empty != y.n_empty ||
            x.n_animal != y.n_animal)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("gini impurity values", "[forest]") {
    CHECK(detail::gini(10, 0) == 0.0);
    CHECK(detail::gini(0, 7) == 0.0);
    CHECK(detail::gini(5, 5) == Approx(0.5));
    CHECK(detail::gini(3, 1) == Approx(1.0 - 0.5625 - 0.0625));
}

TEST_CASE("train_forest on linearly separable data", "[forest]") {
    std::vector<FeatureVector> data;
    Rng rng(1);
    for (int i = 0; i < 40; ++i) {
        const float x = float(rng.uniform(-1.0, 1.0));
        data.push_back(fv({x}, x < 0 ? Label::empty : Label::animal));
    }
    ForestParams params;
    params.n_trees = 25;
    const ForestModel model = train_forest(data, params, 3);

    std::size_t correct = 0;
    for (const auto& d : data) correct += predict(model, d) == *d.label;
    CHECK(correct == data.size());
}

TEST_CASE("single unrestricted tree memorizes consistent data", "[forest]") {
    Rng rng(2);
    std::vector<FeatureVector> data;
    for (int i = 0; i < 60; ++i) {
        std::vector<float> values = {float(rng.next_double()), float(rng.next_double()),
                                     float(rng.next_double())};
        data.push_back(fv(std::move(values), rng.next_double() < 0.5 ? Label::empty : Label::animal));
    }
    ForestParams params;
    params.n_trees = 1;
    params.bootstrap = false;
    const ForestModel model = train_forest(data, params, 5);

    for (const auto& d : data) CHECK(predict(model, d) == *d.label);
}

TEST_CASE("depth-2 tree solves XOR", "[forest]") {
    const std::vector<FeatureVector> data = {
        fv({0, 0}, Label::empty),
        fv({1, 1}, Label::empty),
        fv({0, 1}, Label::animal),
        fv({1, 0}, Label::animal),
    };
    ForestParams params;
    params.n_trees = 1;
    params.bootstrap = false;
    params.mtry = 2;
    params.max_depth = 2;
    const ForestModel model = train_forest(data, params, 1);
    for (const auto& d : data) CHECK(predict(model, d) == *d.label);
}

TEST_CASE("predict_proba", "[forest]") {
    SECTION("single tree with a (3,1) leaf scores 0.25") {
        ForestModel model;
        model.feature_dim = 1;
        model.params.n_trees = 1;
        Tree t;
        t.nodes.push_back({});
        t.nodes[0].n_empty = 3;
        t.nodes[0].n_animal = 1;
        model.trees.push_back(t);
        CHECK(predict_proba(model, probe({0.0f})) == Approx(0.25));
    }

    SECTION("all-animal leaves score 1.0") {
        ForestModel model;
        model.feature_dim = 1;
        model.params.n_trees = 3;
        for (int i = 0; i < 3; ++i) {
            Tree t;
            t.nodes.push_back({});
            t.nodes[0].n_empty = 0;
            t.nodes[0].n_animal = 4;
            model.trees.push_back(t);
        }
        CHECK(predict_proba(model, probe({0.0f})) == 1.0);
    }

    SECTION("three-tree fixture equals the hand-averaged traversal") {
        // tree 1: split on f0 < 0.5 -> left leaf (2,0), right leaf (1,3)
        Tree t1;
        t1.nodes.resize(3);
        t1.nodes[0].feature_index = 0;
        t1.nodes[0].threshold = 0.5f;
        t1.nodes[0].left = 1;
        t1.nodes[0].right = 2;
        t1.nodes[1].n_empty = 2;
        t1.nodes[2].n_empty = 1;
        t1.nodes[2].n_animal = 3;
        // tree 2: leaf (1,1)
        Tree t2;
        t2.nodes.resize(1);
        t2.nodes[0].n_empty = 1;
        t2.nodes[0].n_animal = 1;
        // tree 3: split on f1 < 0.2 -> left leaf (0,2), right leaf (4,0)
        Tree t3;
        t3.nodes.resize(3);
        t3.nodes[0].feature_index = 1;
        t3.nodes[0].threshold = 0.2f;
        t3.nodes[0].left = 1;
        t3.nodes[0].right = 2;
        t3.nodes[1].n_animal = 2;
        t3.nodes[2].n_empty = 4;

        ForestModel model;
        model.feature_dim = 2;
        model.params.n_trees = 3;
        model.trees = {t1, t2, t3};

        // probe (0.7, 0.1): t1 right 3/4, t2 1/2, t3 left 1.0
        CHECK(predict_proba(model, probe({0.7f, 0.1f})) ==
              Approx((0.75 + 0.5 + 1.0) / 3.0).epsilon(1e-12));
        // probe (0.1, 0.9): t1 left 0.0, t2 1/2, t3 right 0.0
        CHECK(predict_proba(model, probe({0.1f, 0.9f})) == Approx(0.5 / 3.0).epsilon(1e-12));
    }

    SECTION("dimension mismatch is rejected") {
        ForestModel model;
        model.feature_dim = 2;
        model.params.n_trees = 1;
        Tree t;
        t.nodes.push_back({});
        t.nodes[0].n_animal = 1;
        model.trees.push_back(t);
        CHECK_THROWS_AS(predict_proba(model, probe({0.0f})), DimensionMismatch);
    }
}

TEST_CASE("predict thresholding", "[forest]") {
    ForestModel model;
    model.feature_dim = 1;
    model.params.n_trees = 1;
    Tree t;
    t.nodes.push_back({});
    t.nodes[0].n_empty = 3;
    t.nodes[0].n_animal = 7; // proba 0.7
    model.trees.push_back(t);

    CHECK(predict(model, probe({0.0f}), 0.5) == Label::animal);
    CHECK(predict(model, probe({0.0f}), 0.7) == Label::animal); // >= rule on the boundary
    CHECK(predict(model, probe({0.0f}), 0.71) == Label::empty);
    CHECK_THROWS_AS(predict(model, probe({0.0f}), 1.5), BadThreshold);
    CHECK_THROWS_AS(predict(model, probe({0.0f}), -0.1), BadThreshold);
}

TEST_CASE("threshold sweep is monotone", "[forest]") {
    Rng rng(7);
    std::vector<FeatureVector> data;
    for (int i = 0; i < 80; ++i) {
        const float x = float(rng.next_double());
        // noisy labels so probabilities spread over (0,1)
        const bool animal = rng.next_double() < 0.3 + 0.4 * x;
        data.push_back(fv({x, float(rng.next_double())}, animal ? Label::animal : Label::empty));
    }
    ForestParams params;
    params.n_trees = 40;
    const ForestModel model = train_forest(data, params, 11);

    std::size_t prev_animals = data.size() + 1;
    for (double threshold = 0.0; threshold <= 1.0; threshold += 0.05) {
        std::size_t animals = 0;
        for (const auto& d : data) animals += predict(model, d, threshold) == Label::animal;
        CHECK(animals <= prev_animals);
        prev_animals = animals;
        if (threshold == 0.0) CHECK(animals == data.size()); // proba >= 0 always
    }
}

TEST_CASE("forest determinism and errors", "[forest]") {
    Rng rng(13);
    std::vector<FeatureVector> data;
    for (int i = 0; i < 50; ++i)
        data.push_back(fv({float(rng.next_double()), float(rng.next_double())},
                          rng.next_double() < 0.5 ? Label::empty : Label::animal));

    SECTION("same seed gives the identical forest") {
        ForestParams params;
        params.n_trees = 12;
        const ForestModel a = train_forest(data, params, 21);
        const ForestModel b = train_forest(data, params, 21);
        REQUIRE(a.trees.size() == b.trees.size());
        for (std::size_t i = 0; i < a.trees.size(); ++i) CHECK(same_tree(a.trees[i], b.trees[i]));

        const ForestModel c = train_forest(data, params, 22);
        bool any_differs = false;
        for (std::size_t i = 0; i < a.trees.size(); ++i)
            any_differs |= !same_tree(a.trees[i], c.trees[i]);
        CHECK(any_differs);
    }

    SECTION("chosen splits never increase weighted impurity") {
        ForestParams params;
        params.n_trees = 8;
        const ForestModel model = train_forest(data, params, 31);
        for (const Tree& tree : model.trees) {
            for (const TreeNode& node : tree.nodes) {
                if (node.is_leaf()) continue;
                const TreeNode& l = tree.nodes[node.left];
                const TreeNode& r = tree.nodes[node.right];
                const double parent = detail::gini(node.n_empty, node.n_animal);
                const double child =
                    (double(l.n_empty + l.n_animal) * detail::gini(l.n_empty, l.n_animal) +
                     double(r.n_empty + r.n_animal) * detail::gini(r.n_empty, r.n_animal)) /
                    double(node.n_empty + node.n_animal);
                CHECK(child <= parent + 1e-12);
            }
        }
    }

    SECTION("single class or ragged dims are rejected") {
        std::vector<FeatureVector> one_class = {fv({0.1f}, Label::empty), fv({0.2f}, Label::empty)};
        CHECK_THROWS_AS(train_forest(one_class, {}, 1), SingleClass);

        std::vector<FeatureVector> ragged = {fv({0.1f}, Label::empty),
                                             fv({0.2f, 0.3f}, Label::animal)};
        CHECK_THROWS_AS(train_forest(ragged, {}, 1), DimensionMismatch);
    }
}
