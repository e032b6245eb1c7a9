#pragma once

// Greedy axis-parallel classification tree (Gini) with weakest-link pruning.

#include "octsvm/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace octsvm {

struct AxisNode {
    bool leaf = true;
    int feature = -1;  // internal nodes: x[feature] < threshold goes left
    double threshold = 0.0;
    int left = -1, right = -1;
    int negatives = 0, positives = 0;
    int depth = 0;

    int count() const { return negatives + positives; }
    int label() const { return positives >= negatives ? 1 : -1; }
};

inline double gini(int negatives, int positives) {
    const double n = negatives + positives;
    if (n == 0) return 0.0;
    const double a = negatives / n, b = positives / n;
    return 1.0 - a * a - b * b;
}

struct AxisTree {
    std::vector<AxisNode> nodes;  // nodes[0] is the root
    int dims = 0;
    int max_depth = 0;
    int sample_size = 0;

    int leaf_count() const {
        int c = 0;
        collect(0, [&](int id) { c += nodes[id].leaf ? 1 : 0; });
        return c;
    }

    int depth() const {
        int d = 0;
        collect(0, [&](int id) { d = std::max(d, nodes[id].depth); });
        return d;
    }

    /// Visits the subtree under `id` in pre-order.
    template <class F>
    void collect(int id, F&& f) const {
        f(id);
        if (!nodes[id].leaf) {
            collect(nodes[id].left, f);
            collect(nodes[id].right, f);
        }
    }
};

struct CartParams {
    int max_depth = 3;
    double min_leaf_fraction = 0.05;
    double alpha = 0.0;  // cost-complexity parameter

    void validate() const {
        if (max_depth < 1) throw std::invalid_argument("CART max_depth must be at least 1");
        if (!(min_leaf_fraction > 0.0 && min_leaf_fraction < 0.5))
            throw std::invalid_argument("CART min_leaf_fraction must lie in (0, 0.5)");
        if (!(alpha >= 0.0)) throw std::invalid_argument("CART alpha must be non-negative");
    }
};

struct AxisSplit {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;  // weighted Gini of the children
};

/// Split of the rows `idx` with the lowest weighted child Gini over all features and midpoints,
/// or feature -1 when no candidate keeps `min_leaf` rows per side. The split may not improve
/// on the node itself; pruning removes such splits when they do not pay off deeper down.
inline AxisSplit best_axis_split(const Dataset& data, const std::vector<int>& idx, int min_leaf) {
    AxisSplit best;
    int neg = 0, pos = 0;
    for (int i : idx) (data.labels[i] > 0 ? pos : neg)++;
    best.impurity = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(idx.size());
    std::vector<int> order = idx;
    for (int j = 0; j < data.dims(); ++j) {
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return data.features(a, j) < data.features(b, j); });
        int ln = 0, lp = 0;
        for (int k = 0; k + 1 < n; ++k) {
            (data.labels[order[k]] > 0 ? lp : ln)++;
            const double v = data.features(order[k], j), w = data.features(order[k + 1], j);
            if (!(v < w)) continue;
            const int nl = k + 1, nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double imp = (nl * gini(ln, lp) + nr * gini(neg - ln, pos - lp)) / n;
            if (best.feature < 0 || imp < best.impurity - 1e-12) {
                best.feature = j;
                best.threshold = 0.5 * (v + w);
                best.impurity = imp;
            }
        }
    }
    if (best.feature < 0) best.impurity = gini(neg, pos);
    return best;
}

namespace detail {

inline int grow(AxisTree& tree, const Dataset& data, const std::vector<int>& idx, int depth, int max_depth,
                int min_leaf) {
    AxisNode node;
    node.depth = depth;
    for (int i : idx) (data.labels[i] > 0 ? node.positives : node.negatives)++;
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (depth >= max_depth || node.positives == 0 || node.negatives == 0) return id;
    const AxisSplit s = best_axis_split(data, idx, min_leaf);
    if (s.feature < 0) return id;
    std::vector<int> left, right;
    for (int i : idx) (data.features(i, s.feature) < s.threshold ? left : right).push_back(i);
    const int l = grow(tree, data, left, depth + 1, max_depth, min_leaf);
    const int r = grow(tree, data, right, depth + 1, max_depth, min_leaf);
    AxisNode& self = tree.nodes[id];
    self.leaf = false;
    self.feature = s.feature;
    self.threshold = s.threshold;
    self.left = l;
    self.right = r;
    return id;
}

// Resubstitution impurity R(t) = (n_t / N) * gini(t).
inline double node_risk(const AxisTree& tree, int id) {
    const AxisNode& n = tree.nodes[id];
    return static_cast<double>(n.count()) / tree.sample_size * gini(n.negatives, n.positives);
}

}  // namespace detail

/// Collapses the weakest link while its impurity increase per removed split is <= alpha
/// (up to rounding, so alpha = 0 removes splits that gain nothing).
inline void prune(AxisTree& tree, double alpha) {
    while (true) {
        int weakest = -1;
        double weakest_g = 0.0;
        tree.collect(0, [&](int id) {
            if (tree.nodes[id].leaf) return;
            double subtree = 0.0;
            int leaves = 0;
            tree.collect(id, [&](int k) {
                if (tree.nodes[k].leaf) {
                    subtree += detail::node_risk(tree, k);
                    ++leaves;
                }
            });
            const double g = (detail::node_risk(tree, id) - subtree) / (leaves - 1);
            if (weakest < 0 || g < weakest_g - 1e-15) {
                weakest = id;
                weakest_g = g;
            }
        });
        if (weakest < 0 || weakest_g > alpha + 1e-12) return;
        tree.nodes[weakest].leaf = true;
        tree.nodes[weakest].feature = -1;
        tree.nodes[weakest].left = tree.nodes[weakest].right = -1;
    }
}

/// Minimum observations per leaf: 5% of the sample by default, at least one.
inline int min_leaf_size(int n, double fraction) {
    return std::max(1, static_cast<int>(std::floor(fraction * n + 1e-9)));
}

inline AxisTree cart_train(const Dataset& data, const CartParams& params) {
    params.validate();
    if (data.size() < 1) throw std::invalid_argument("cart_train: empty dataset");
    check_labels(data.labels);
    AxisTree tree;
    tree.dims = data.dims();
    tree.max_depth = params.max_depth;
    tree.sample_size = data.size();
    std::vector<int> idx(data.size());
    for (int i = 0; i < data.size(); ++i) idx[i] = i;
    detail::grow(tree, data, idx, 0, params.max_depth, min_leaf_size(data.size(), params.min_leaf_fraction));
    prune(tree, params.alpha);
    // Drop nodes no longer reachable so the stored tree is compact.
    AxisTree compact = tree;
    compact.nodes.clear();
    auto copy = [&](auto&& self, int id) -> int {
        const int nid = static_cast<int>(compact.nodes.size());
        compact.nodes.push_back(tree.nodes[id]);
        if (!tree.nodes[id].leaf) {
            const int l = self(self, tree.nodes[id].left);
            const int r = self(self, tree.nodes[id].right);
            compact.nodes[nid].left = l;
            compact.nodes[nid].right = r;
        }
        return nid;
    };
    copy(copy, 0);
    return compact;
}

inline int cart_leaf(const AxisTree& tree, const VectorRef& x) {
    if (x.size() != tree.dims) throw std::invalid_argument("cart_predict: dimension mismatch");
    int id = 0;
    while (!tree.nodes[id].leaf) {
        const AxisNode& n = tree.nodes[id];
        id = x[n.feature] < n.threshold ? n.left : n.right;
    }
    return id;
}

inline int cart_predict(const AxisTree& tree, const VectorRef& x) { return tree.nodes[cart_leaf(tree, x)].label(); }

inline ConfusionSummary accuracy(const AxisTree& tree, const Dataset& test) {
    return accuracy_of([&](const VectorRef& x) { return cart_predict(tree, x); }, test);
}

/// Indented text, one node per line.
inline std::string to_text(const AxisTree& tree) {
    std::ostringstream os;
    os.precision(17);
    tree.collect(0, [&](int id) {
        const AxisNode& n = tree.nodes[id];
        os << std::string(2 * n.depth, ' ');
        if (n.leaf)
            os << "leaf label=" << n.label();
        else
            os << "split x" << n.feature << " < " << n.threshold;
        os << " counts=" << n.negatives << "/" << n.positives << '\n';
    });
    return os.str();
}

}  // namespace octsvm
