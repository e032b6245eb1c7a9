#include "octsvm/cart.hpp"
#include "cart_oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace octsvm;
using testutil::make_dataset;
using testutil::random_dataset;
using testutil::node_rows;
using testutil::rescan;
using testutil::weighted_gini;

namespace {

CartParams params(int depth, double alpha = 0.0, double min_leaf = 0.05) {
    CartParams p;
    p.max_depth = depth;
    p.alpha = alpha;
    p.min_leaf_fraction = min_leaf;
    return p;
}

Dataset quartet() { return make_dataset({{0.1}, {0.2}, {0.8}, {0.9}}, {-1, -1, 1, 1}); }

Dataset xor_corners() { return make_dataset({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {1, 1, -1, -1}); }

Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    int k = 0;
    for (double a : v) x[k++] = a;
    return x;
}

double training_impurity(const AxisTree& t) {
    double s = 0.0;
    t.collect(0, [&](int id) {
        const AxisNode& n = t.nodes[id];
        if (n.leaf) s += static_cast<double>(n.count()) / t.sample_size * gini(n.negatives, n.positives);
    });
    return s;
}

// Is every split of `small` also present, at the same position, in `big`?
bool is_subtree(const AxisTree& small, int a, const AxisTree& big, int b) {
    const AxisNode& s = small.nodes[a];
    const AxisNode& g = big.nodes[b];
    if (s.count() != g.count()) return false;
    if (s.leaf) return true;
    if (g.leaf || s.feature != g.feature || s.threshold != g.threshold) return false;
    return is_subtree(small, s.left, big, g.left) && is_subtree(small, s.right, big, g.right);
}

}  // namespace

TEST(Cart, SeparableQuartet) {
    const AxisTree t = cart_train(quartet(), params(3));
    ASSERT_FALSE(t.nodes[0].leaf);
    EXPECT_EQ(t.nodes[0].feature, 0);
    EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 0.5);
    EXPECT_EQ(t.leaf_count(), 2);
    EXPECT_DOUBLE_EQ(accuracy(t, quartet()).accuracy_percent, 100.0);
}

TEST(Cart, PredictConventions) {
    const AxisTree t = cart_train(quartet(), params(3));
    EXPECT_EQ(cart_predict(t, vec({0.3})), -1);
    EXPECT_EQ(cart_predict(t, vec({0.5})), 1);  // threshold goes right
    EXPECT_THROW(cart_predict(t, vec({0.3, 0.1})), std::invalid_argument);
}

TEST(Cart, XorDepthOneIsASingleLeaf) {
    // Every axis threshold leaves one point of each class on both sides.
    const Dataset d = xor_corners();
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(weighted_gini(d, {0, 1, 2, 3}, j, 0.5), 0.5);
    const AxisTree t = cart_train(d, params(1));
    EXPECT_EQ(t.nodes.size(), 1u);
    EXPECT_EQ(t.nodes[0].label(), 1);  // 2 vs 2: ties go to +1
    EXPECT_DOUBLE_EQ(accuracy(t, d).accuracy_percent, 50.0);
}

TEST(Cart, XorDepthTwoIsSolved) {
    const AxisTree t = cart_train(xor_corners(), params(2, 0.0, 0.01));
    EXPECT_DOUBLE_EQ(accuracy(t, xor_corners()).accuracy_percent, 100.0);
    EXPECT_EQ(t.depth(), 2);
}

TEST(Cart, PureRootAndSingleLeafPrediction) {
    const Dataset d = make_dataset({{0.1}, {0.5}, {0.7}}, {1, 1, 1});
    const AxisTree t = cart_train(d, params(3));
    EXPECT_EQ(t.nodes.size(), 1u);
    for (double x : {0.0, 0.4, 1.0}) EXPECT_EQ(cart_predict(t, vec({x})), 1);
}

TEST(Cart, MinimumLeafSize) {
    EXPECT_EQ(min_leaf_size(100, 0.05), 5);
    EXPECT_EQ(min_leaf_size(10, 0.05), 1);
    EXPECT_EQ(min_leaf_size(39, 0.05), 1);
    EXPECT_EQ(min_leaf_size(40, 0.05), 2);
    const AxisTree t = cart_train(random_dataset(60, 2, 3), params(6));
    t.collect(0, [&](int id) { EXPECT_GE(t.nodes[id].count(), 3); });
}

TEST(Cart, ParameterValidation) {
    EXPECT_THROW(cart_train(quartet(), params(0)), std::invalid_argument);
    EXPECT_THROW(cart_train(quartet(), params(2, -1.0)), std::invalid_argument);
    EXPECT_THROW(cart_train(quartet(), params(2, 0.0, 0.5)), std::invalid_argument);
    EXPECT_THROW(cart_train(make_dataset({}, {}), params(2)), std::invalid_argument);
}

TEST(Cart, SplitsMatchExhaustiveRescan) {
    for (int k = 0; k < 10; ++k) {
        const Dataset d = random_dataset(30 + 5 * k, 1 + k % 4, 1000 + k);
        const CartParams p = params(3);
        const int min_leaf = min_leaf_size(d.size(), p.min_leaf_fraction);
        const AxisTree t = cart_train(d, p);
        std::vector<int> all(d.size());
        std::iota(all.begin(), all.end(), 0);
        std::vector<std::vector<int>> rows(t.nodes.size());
        node_rows(t, d, 0, all, rows);
        t.collect(0, [&](int id) {
            const AxisNode& n = t.nodes[id];
            int neg = 0, pos = 0;
            for (int i : rows[id]) (d.labels[i] > 0 ? pos : neg)++;
            EXPECT_EQ(n.negatives, neg);
            EXPECT_EQ(n.positives, pos);
            if (n.leaf) return;
            const AxisSplit want = rescan(d, rows[id], min_leaf);
            EXPECT_EQ(n.feature, want.feature) << "dataset " << k << " node " << id;
            EXPECT_DOUBLE_EQ(n.threshold, want.threshold);
            // Children partition the parent's rows.
            EXPECT_EQ(rows[n.left].size() + rows[n.right].size(), rows[id].size());
        });
    }
}

TEST(Cart, DeepTreeFitsDistinctPoints) {
    for (int k = 0; k < 5; ++k) {
        const Dataset d = random_dataset(40, 2, 50 + k);
        const AxisTree t = cart_train(d, params(40, 0.0, 0.001));
        EXPECT_DOUBLE_EQ(accuracy(t, d).accuracy_percent, 100.0);
    }
}

TEST(Cart, PruningProperties) {
    for (int k = 0; k < 6; ++k) {
        const Dataset d = random_dataset(50, 2, 80 + k);
        const AxisTree grown = cart_train(d, params(4, 0.0));
        int prev_leaves = grown.leaf_count();
        for (double alpha : {1e-4, 1e-3, 1e-2, 3e-2, 1e-1, 1.0}) {
            const AxisTree t = cart_train(d, params(4, alpha));
            EXPECT_TRUE(is_subtree(t, 0, grown, 0));
            EXPECT_LE(t.leaf_count(), prev_leaves);
            prev_leaves = t.leaf_count();
            // Impurity added by pruning is paid for by the removed leaves at rate <= alpha.
            const int removed = grown.leaf_count() - t.leaf_count();
            EXPECT_LE(training_impurity(t) - training_impurity(grown), alpha * removed + 1e-12);
        }
        EXPECT_EQ(cart_train(d, params(4, 1.0)).leaf_count(), 1);
    }
}

TEST(Cart, TextDump) {
    const std::string s = to_text(cart_train(quartet(), params(2)));
    EXPECT_NE(s.find("split x0 < 0.5"), std::string::npos);
    EXPECT_NE(s.find("  leaf label=-1 counts=2/0"), std::string::npos);
}
