#pragma once

// Tree topology, datasets and the prediction rule of a trained tree.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace octsvm {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Per-feature (min, max) recorded when a matrix is normalized.
struct FeatureScaling {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t dims() const { return min.size(); }

    /// Maps a raw value of feature j into [0,1]; out-of-range values are clamped.
    double apply(std::size_t j, double raw) const {
        const double range = max[j] - min[j];
        if (!(range > 0.0)) return 0.0;
        return std::clamp((raw - min[j]) / range, 0.0, 1.0);
    }
};

struct Dataset {
    FeatureMatrix features;  // n x p, values in [0,1]
    std::vector<int> labels;  // entries in {-1,+1}
    std::vector<std::string> feature_names;
    FeatureScaling scaling;

    int size() const { return static_cast<int>(features.rows()); }
    int dims() const { return static_cast<int>(features.cols()); }
    Vector row(int i) const { return features.row(i).transpose(); }
};

inline void check_labels(const std::vector<int>& labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1 && labels[i] != -1)
            throw std::invalid_argument("label at row " + std::to_string(i) + " is not -1 or +1");
    }
}

/// Min-max scales every column to [0,1]. Constant columns become all zeros.
inline Dataset normalize_features(const FeatureMatrix& raw, std::vector<int> labels,
                                  std::vector<std::string> feature_names = {}) {
    if (raw.rows() < 1 || raw.cols() < 1) throw std::invalid_argument("normalize_features: empty matrix");
    if (static_cast<Eigen::Index>(labels.size()) != raw.rows())
        throw std::invalid_argument("normalize_features: label count does not match row count");
    check_labels(labels);
    const Eigen::Index n = raw.rows(), p = raw.cols();
    FeatureScaling scaling;
    scaling.min.resize(p);
    scaling.max.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(raw(i, j)))
                throw std::invalid_argument("normalize_features: non-finite value in column " + std::to_string(j));
        }
        scaling.min[j] = raw.col(j).minCoeff();
        scaling.max[j] = raw.col(j).maxCoeff();
    }
    Dataset out;
    out.features.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) out.features(i, j) = scaling.apply(j, raw(i, j));
    out.labels = std::move(labels);
    out.feature_names = std::move(feature_names);
    out.scaling = std::move(scaling);
    return out;
}

/// Applies stored scaling to out-of-sample rows (clamping to [0,1]).
inline Dataset apply_scaling(const FeatureScaling& scaling, const FeatureMatrix& raw, std::vector<int> labels,
                             std::vector<std::string> feature_names = {}) {
    if (static_cast<std::size_t>(raw.cols()) != scaling.dims())
        throw std::invalid_argument("apply_scaling: feature count mismatch");
    if (static_cast<Eigen::Index>(labels.size()) != raw.rows())
        throw std::invalid_argument("apply_scaling: label count does not match row count");
    check_labels(labels);
    Dataset out;
    out.features.resize(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        for (Eigen::Index j = 0; j < raw.cols(); ++j) {
            if (!std::isfinite(raw(i, j)))
                throw std::invalid_argument("apply_scaling: non-finite value in column " + std::to_string(j));
            out.features(i, j) = scaling.apply(j, raw(i, j));
        }
    }
    out.labels = std::move(labels);
    out.feature_names = std::move(feature_names);
    out.scaling = scaling;
    return out;
}

/// Rows `indices` of `data`, keeping its scaling.
inline Dataset subset(const Dataset& data, const std::vector<int>& indices) {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), data.features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        out.features.row(static_cast<Eigen::Index>(k)) = data.features.row(indices[k]);
        out.labels.push_back(data.labels[indices[k]]);
    }
    out.feature_names = data.feature_names;
    out.scaling = data.scaling;
    return out;
}

inline bool has_both_classes(const std::vector<int>& labels) {
    bool pos = false, neg = false;
    for (int y : labels) (y > 0 ? pos : neg) = true;
    return pos && neg;
}

/// Training sets need n >= 2 and both classes.
inline void require_trainable(const Dataset& data) {
    check_labels(data.labels);
    if (data.size() < 2) throw std::invalid_argument("training set needs at least two observations");
    if (!has_both_classes(data.labels)) throw std::invalid_argument("training set contains a single class");
}

/// Majority class; ties go to +1.
inline int majority_label(const std::vector<int>& labels) {
    long balance = 0;
    for (int y : labels) balance += y;
    return balance >= 0 ? 1 : -1;
}

/// Complete binary tree of depth D, nodes 1..T in breadth-first order.
class TreeTopology {
public:
    TreeTopology() : TreeTopology(0) {}
    explicit TreeTopology(int depth) : depth_(depth) {
        if (depth < 0) throw std::invalid_argument("tree depth must be non-negative");
        if (depth > 20) throw std::invalid_argument("tree depth too large");
        node_count_ = (1 << (depth + 1)) - 1;
    }

    int depth() const { return depth_; }
    int node_count() const { return node_count_; }

    int parent(int t) const {
        check(t);
        if (t == 1) throw std::out_of_range("the root has no parent");
        return t / 2;
    }
    int left_child(int t) const { return 2 * t; }
    int right_child(int t) const { return 2 * t + 1; }
    bool has_children(int t) const { return 2 * t <= node_count_; }
    bool is_left_branch(int t) const { return t >= 2 && t % 2 == 0; }
    bool is_right_branch(int t) const { return t >= 3 && t % 2 == 1; }

    int level_of(int t) const {
        check(t);
        int level = 0;
        while (t > 1) {
            t /= 2;
            ++level;
        }
        return level;
    }

    std::vector<int> level(int k) const {
        if (k < 0 || k > depth_) throw std::out_of_range("level out of range");
        std::vector<int> nodes;
        for (int t = 1 << k; t < (1 << (k + 1)); ++t) nodes.push_back(t);
        return nodes;
    }

    std::vector<std::vector<int>> levels() const {
        std::vector<std::vector<int>> out;
        for (int k = 0; k <= depth_; ++k) out.push_back(level(k));
        return out;
    }

    std::vector<int> left_branch_nodes() const {
        std::vector<int> out;
        for (int t = 2; t <= node_count_; t += 2) out.push_back(t);
        return out;
    }

    std::vector<int> right_branch_nodes() const {
        std::vector<int> out;
        for (int t = 3; t <= node_count_; t += 2) out.push_back(t);
        return out;
    }

    /// Nodes with children, {1..floor(T/2)}.
    std::vector<int> branch_nodes() const {
        std::vector<int> out;
        for (int t = 1; t <= node_count_ / 2; ++t) out.push_back(t);
        return out;
    }

    /// Leaves, {floor(T/2)+1..T}.
    std::vector<int> leaf_nodes() const {
        std::vector<int> out;
        for (int t = node_count_ / 2 + 1; t <= node_count_; ++t) out.push_back(t);
        return out;
    }

    /// Nodes from the root down to leaf `t`, inclusive.
    std::vector<int> path_to(int t) const {
        check(t);
        std::vector<int> path;
        for (int u = t; u >= 1; u /= 2) path.push_back(u);
        std::reverse(path.begin(), path.end());
        return path;
    }

    friend bool operator==(const TreeTopology& a, const TreeTopology& b) { return a.depth_ == b.depth_; }

private:
    void check(int t) const {
        if (t < 1 || t > node_count_) throw std::out_of_range("node index " + std::to_string(t) + " out of range");
    }

    int depth_ = 0;
    int node_count_ = 1;
};

inline TreeTopology build_topology(int depth) { return TreeTopology(depth); }

struct Hyperplane {
    Vector weights;
    double intercept = 0.0;

    double evaluate(const VectorRef& x) const { return weights.dot(x) + intercept; }
};

/// A trained tree: one hyperplane and one split flag per node.
struct TreeClassifier {
    TreeTopology topology;
    std::vector<Hyperplane> hyperplanes;  // index t-1
    std::vector<bool> split_active;       // index t-1
    int fallback_label = 1;

    int dims() const { return hyperplanes.empty() ? 0 : static_cast<int>(hyperplanes.front().weights.size()); }
    const Hyperplane& node(int t) const { return hyperplanes.at(t - 1); }
    bool active(int t) const { return split_active.at(t - 1); }

    /// An all-inactive tree predicting `fallback` everywhere.
    static TreeClassifier constant(const TreeTopology& topo, int p, int fallback) {
        TreeClassifier tree;
        tree.topology = topo;
        tree.hyperplanes.assign(topo.node_count(), Hyperplane{Vector::Zero(p), 0.0});
        tree.split_active.assign(topo.node_count(), false);
        tree.fallback_label = fallback;
        return tree;
    }

    /// Throws when the hierarchy or zero-coefficient invariants are broken.
    void validate() const {
        const int T = topology.node_count();
        if (static_cast<int>(hyperplanes.size()) != T || static_cast<int>(split_active.size()) != T)
            throw std::invalid_argument("tree classifier node arrays do not match the topology");
        if (fallback_label != 1 && fallback_label != -1) throw std::invalid_argument("fallback label must be -1 or +1");
        const int p = dims();
        for (int t = 1; t <= T; ++t) {
            if (node(t).weights.size() != p) throw std::invalid_argument("hyperplane dimension mismatch");
            if (t >= 2 && active(t) && !active(topology.parent(t)))
                throw std::invalid_argument("split at node " + std::to_string(t) + " below an inactive parent");
            if (!active(t) && (node(t).weights.squaredNorm() != 0.0 || node(t).intercept != 0.0))
                throw std::invalid_argument("inactive node " + std::to_string(t) + " carries a nonzero hyperplane");
        }
    }
};

/// Visited nodes: from the root while splits are active. Zero goes right.
inline std::vector<int> route(const TreeClassifier& tree, const VectorRef& x) {
    if (x.size() != tree.dims()) throw std::invalid_argument("route: dimension mismatch");
    std::vector<int> path{1};
    int t = 1;
    while (tree.active(t) && tree.topology.has_children(t)) {
        const int next = tree.node(t).evaluate(x) >= 0.0 ? tree.topology.right_child(t) : tree.topology.left_child(t);
        if (!tree.active(next)) break;
        path.push_back(next);
        t = next;
    }
    return path;
}

/// Sign of the last active hyperplane on the routed path.
inline int predict(const TreeClassifier& tree, const VectorRef& x) {
    const std::vector<int> path = route(tree, x);
    const int last = path.back();
    if (!tree.active(last)) return tree.fallback_label;
    return tree.node(last).evaluate(x) >= 0.0 ? 1 : -1;
}

struct ConfusionSummary {
    int correct = 0;
    int total = 0;
    double accuracy_percent = 0.0;
};

inline ConfusionSummary summarize(int correct, int total) {
    if (total <= 0) throw std::invalid_argument("accuracy: empty test set");
    return {correct, total, 100.0 * correct / total};
}

template <typename Predictor>
ConfusionSummary accuracy_of(Predictor&& predictor, const Dataset& test) {
    if (test.size() == 0) throw std::invalid_argument("accuracy: empty test set");
    int correct = 0;
    for (int i = 0; i < test.size(); ++i) correct += predictor(test.row(i)) == test.labels[i] ? 1 : 0;
    return summarize(correct, test.size());
}

inline ConfusionSummary accuracy(const TreeClassifier& tree, const Dataset& test) {
    return accuracy_of([&](const Vector& x) { return predict(tree, x); }, test);
}

}  // namespace octsvm
