#pragma once

// Data ingestion, label noise, cross-validation, grid search, experiments and
// reports.

#include "octsvm/branch_and_bound.hpp"
#include "octsvm/cart.hpp"
#include "octsvm/core.hpp"
#include "octsvm/formulation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace octsvm {

// ---------------------------------------------------------------- CSV input

class CsvError : public std::runtime_error {
public:
    CsvError(const std::string& source, int row, int column, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(row) + ":" + std::to_string(column) + ": " + what),
          row_(row),
          column_(column) {}
    int row() const { return row_; }        // 1-based line number
    int column() const { return column_; }  // 1-based field number, 0 for whole-line errors

private:
    int row_, column_;
};

enum class HeaderMode { detect, present, absent };

struct CsvOptions {
    char delimiter = ',';
    int label_column = -1;  // negative counts from the end
    HeaderMode header = HeaderMode::detect;
    bool labels = true;  // false: every column is a feature
};

struct RawTable {
    FeatureMatrix features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;

    int rows() const { return static_cast<int>(features.rows()); }
    int cols() const { return static_cast<int>(features.cols()); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_fields(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, delimiter)) out.push_back(trim(cur));
    if (!line.empty() && line.back() == delimiter) out.push_back("");
    return out;
}

inline bool parse_number(const std::string& s, double& v) {
    if (s.empty()) return false;
    try {
        std::size_t pos = 0;
        v = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(v);
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace detail

inline RawTable parse_csv(std::istream& in, const CsvOptions& options = {}, const std::string& source = "<csv>") {
    std::vector<std::vector<std::string>> lines;
    std::vector<int> line_no;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (detail::trim(line).empty()) continue;
        lines.push_back(detail::split_fields(line, options.delimiter));
        line_no.push_back(number);
    }
    if (lines.empty()) throw CsvError(source, 0, 0, "no data rows");

    bool header = options.header == HeaderMode::present;
    if (options.header == HeaderMode::detect) {
        header = true;
        double v;
        for (const std::string& f : lines.front()) header = header && !detail::parse_number(f, v);
    }
    const std::size_t width = lines.front().size();
    const int first = header ? 1 : 0;
    const int n = static_cast<int>(lines.size()) - first;
    if (n <= 0) throw CsvError(source, line_no.front(), 0, "header without data rows");
    const int cols = static_cast<int>(width);
    int label_col = -1;
    if (options.labels) {
        label_col = options.label_column < 0 ? cols + options.label_column : options.label_column;
        if (label_col < 0 || label_col >= cols) throw CsvError(source, line_no.front(), 0, "label column out of range");
    }
    const int p = cols - (options.labels ? 1 : 0);
    if (p < 1) throw CsvError(source, line_no.front(), 0, "no feature columns");

    RawTable t;
    t.features.resize(n, p);
    for (int c = 0, j = 0; c < cols; ++c) {
        if (c == label_col) continue;
        t.feature_names.push_back(header ? lines.front()[c] : "x" + std::to_string(j + 1));
        ++j;
    }
    for (int r = 0; r < n; ++r) {
        const auto& fields = lines[first + r];
        const int ln = line_no[first + r];
        if (fields.size() != width)
            throw CsvError(source, ln, 0,
                           "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
        for (int c = 0, j = 0; c < cols; ++c) {
            double v;
            if (!detail::parse_number(fields[c], v))
                throw CsvError(source, ln, c + 1, "non-numeric value '" + fields[c] + "'");
            if (c == label_col) {
                if (v == 1.0)
                    t.labels.push_back(1);
                else if (v == -1.0 || v == 0.0)
                    t.labels.push_back(-1);
                else
                    throw CsvError(source, ln, c + 1, "unknown label '" + fields[c] + "'");
            } else {
                t.features(r, j++) = v;
            }
        }
    }
    return t;
}

inline RawTable load_csv(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_csv(in, options, path);
}

struct DatasetManifest {
    std::string name;
    int n = 0;
    int p = 0;
};

/// Shapes of the benchmark datasets used in the published experiments.
inline const std::vector<DatasetManifest>& benchmark_manifests() {
    static const std::vector<DatasetManifest> m = {
        {"Australian", 690, 14}, {"BreastCancer", 683, 9}, {"Heart", 270, 13}, {"Ionosphere", 351, 34},
        {"MONK's", 415, 7},      {"Parkinson", 240, 40},   {"Sonar", 208, 60}, {"Wholesale", 440, 7},
    };
    return m;
}

/// Throws if `table` does not have the shape recorded for dataset `name`.
inline void check_manifest(const RawTable& table, const std::string& name) {
    for (const DatasetManifest& m : benchmark_manifests()) {
        if (m.name != name) continue;
        if (table.rows() != m.n || table.cols() != m.p)
            throw std::runtime_error(name + ": expected n=" + std::to_string(m.n) + " p=" + std::to_string(m.p) +
                                     ", found n=" + std::to_string(table.rows()) + " p=" + std::to_string(table.cols()));
        return;
    }
    throw std::invalid_argument("no manifest for dataset " + name);
}

// ------------------------------------------------------------ randomness

/// Uniform integer in [0, bound) by rejection; platform independent, unlike std distributions.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do v = rng();
    while (v >= limit);
    return v % bound;
}

template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

/// Seed for a sub-stream, mixed with splitmix64 so neighbouring inputs diverge.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    for (std::uint64_t p : parts) h = mix(h ^ p);
    return h;
}

// ------------------------------------------------------ noise and folds

/// Negates exactly round(fraction * n) labels (half up), chosen uniformly without replacement.
inline Dataset flip_labels(const Dataset& data, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("flip fraction must lie in [0,1)");
    const int n = data.size();
    const int count = static_cast<int>(std::floor(fraction * n + 0.5));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    seeded_shuffle(idx, rng);
    Dataset out = data;
    for (int k = 0; k < count; ++k) out.labels[idx[k]] = -out.labels[idx[k]];
    return out;
}

/// Seeded partition of 0..n-1 into k sorted folds whose sizes differ by at most one.
inline std::vector<std::vector<int>> kfold(int n, int k, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("kfold: k must be positive");
    if (k > n) throw std::invalid_argument("kfold: more folds than observations");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    seeded_shuffle(idx, rng);
    std::vector<std::vector<int>> folds(k);
    int pos = 0;
    for (int f = 0; f < k; ++f) {
        const int size = n / k + (f < n % k ? 1 : 0);
        folds[f].assign(idx.begin() + pos, idx.begin() + pos + size);
        std::sort(folds[f].begin(), folds[f].end());
        pos += size;
    }
    return folds;
}

enum class FoldScheme {
    train_one,   // train on one fold, test on the others (the published protocol)
    train_rest,  // standard k-fold: train on k-1 folds, test on one
};

struct FoldSplit {
    std::vector<int> train, test;
};

inline FoldSplit fold_split(const std::vector<std::vector<int>>& folds, int f, FoldScheme scheme) {
    FoldSplit s;
    for (int g = 0; g < static_cast<int>(folds.size()); ++g) {
        auto& dst = (g == f) == (scheme == FoldScheme::train_one) ? s.train : s.test;
        dst.insert(dst.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

/// Seeded split keeping the class ratio: about `fraction` of each class goes to the first part.
inline FoldSplit stratified_split(const std::vector<int>& labels, double fraction, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FoldSplit s;
    for (int cls : {-1, 1}) {
        std::vector<int> idx;
        for (int i = 0; i < static_cast<int>(labels.size()); ++i)
            if (labels[i] == cls) idx.push_back(i);
        seeded_shuffle(idx, rng);
        int take = static_cast<int>(std::floor(fraction * static_cast<double>(idx.size()) + 0.5));
        if (idx.size() >= 2) take = std::clamp(take, 1, static_cast<int>(idx.size()) - 1);
        s.train.insert(s.train.end(), idx.begin(), idx.begin() + take);
        s.test.insert(s.test.end(), idx.begin() + take, idx.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

// -------------------------------------------------------- training

enum class Method { octsvm, resvm, cart };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::octsvm: return "OCTSVM";
        case Method::resvm: return "RESVM";
        case Method::cart: return "CART";
    }
    return "?";
}

inline Method parse_method(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
    if (s == "OCTSVM") return Method::octsvm;
    if (s == "RESVM") return Method::resvm;
    if (s == "CART") return Method::cart;
    throw std::invalid_argument("unknown method '" + s + "'");
}

struct Hyperparameters {
    double c1 = 1.0, c2 = 0.1, c3 = 0.01;
    double alpha = 0.0;

    std::string describe(Method m) const {
        std::ostringstream os;
        os << std::setprecision(6);
        if (m == Method::cart)
            os << "alpha=" << alpha;
        else {
            os << "c1=" << c1 << " c2=" << c2;
            if (m == Method::octsvm) os << " c3=" << c3;
        }
        return os.str();
    }
};

struct TrainSettings {
    int octsvm_depth = 2;
    int cart_depth = 3;
    double coef_bound = 10.0;
    double min_leaf_fraction = 0.05;
    Budget budget;
    BranchOptions branch;
};

struct TrainedModel {
    Method method = Method::octsvm;
    Hyperparameters hyper;
    TreeClassifier tree;  // OCTSVM and RE-SVM (depth 0)
    AxisTree cart;
    FeatureScaling scaling;
    std::vector<std::string> feature_names;
    // Solver outcome; NaN gap for CART.
    double gap = std::numeric_limits<double>::quiet_NaN();
    SolveStatus status = SolveStatus::optimal;

    int dims() const { return method == Method::cart ? cart.dims : tree.dims(); }

    int predict(const VectorRef& x) const { return method == Method::cart ? cart_predict(cart, x) : octsvm::predict(tree, x); }
};

inline TrainedModel train_model(Method method, const Dataset& data, const Hyperparameters& hyper,
                                const TrainSettings& settings) {
    TrainedModel m;
    m.method = method;
    m.hyper = hyper;
    m.scaling = data.scaling;
    m.feature_names = data.feature_names;
    if (method == Method::cart) {
        CartParams params;
        params.max_depth = settings.cart_depth;
        params.min_leaf_fraction = settings.min_leaf_fraction;
        params.alpha = hyper.alpha;
        m.cart = cart_train(data, params);
        return m;
    }
    require_trainable(data);
    MinlpModel model;
    if (method == Method::octsvm) {
        ModelConfig cfg;
        cfg.c1 = hyper.c1;
        cfg.c2 = hyper.c2;
        cfg.c3 = hyper.c3;
        cfg.depth = settings.octsvm_depth;
        cfg.coef_bound = settings.coef_bound;
        model = build_octsvm_model(data, TreeTopology(cfg.depth), cfg);
    } else {
        model = build_resvm_model(data, hyper.c1, hyper.c2, settings.coef_bound);
    }
    const SolveResult r = branch_and_bound(model, settings.budget, settings.branch);
    if (!r.incumbent) throw std::runtime_error(std::string("no feasible tree found (") + to_string(r.status) + ")");
    m.tree = extract_tree(model, *r.incumbent);
    m.gap = r.gap;
    m.status = r.status;
    return m;
}

inline ConfusionSummary accuracy(const TrainedModel& model, const Dataset& test) {
    return accuracy_of([&](const VectorRef& x) { return model.predict(x); }, test);
}

// ------------------------------------------------------ grid search

struct Grids {
    std::vector<double> c1, c2, c3, alpha;

    static std::vector<double> powers_of_ten(int lo, int hi) {
        std::vector<double> v;
        for (int i = lo; i <= hi; ++i) v.push_back(std::pow(10.0, i));
        return v;
    }

    static Grids published() { return {powers_of_ten(-5, 5), powers_of_ten(-5, 5), powers_of_ten(-2, 2), powers_of_ten(-5, 5)}; }

    std::vector<Hyperparameters> points(Method m) const {
        std::vector<Hyperparameters> out;
        if (m == Method::cart) {
            for (double a : alpha) out.push_back({1.0, 0.0, 0.0, a});
            return out;
        }
        const std::vector<double> c3s = m == Method::octsvm ? c3 : std::vector<double>{0.0};
        for (double a : c1)
            for (double b : c2)
                for (double c : c3s) out.push_back({a, b, c, 0.0});
        return out;
    }
};

struct GridPointResult {
    Hyperparameters hyper;
    double validation_accuracy = std::numeric_limits<double>::quiet_NaN();
    std::string error;  // empty on success
};

struct GridChoice {
    Hyperparameters hyper;
    double validation_accuracy = 0.0;
    std::vector<GridPointResult> points;
    TrainedModel model;  // winner retrained on the full training data
};

class GridSearchError : public std::runtime_error {
public:
    GridSearchError(const std::string& what, std::vector<GridPointResult> points)
        : std::runtime_error(what), points(std::move(points)) {}
    std::vector<GridPointResult> points;
};

/// Is `a` preferred over `b` at equal validation accuracy: simpler (smaller c3 or alpha), then cheaper.
inline bool simpler(const Hyperparameters& a, const Hyperparameters& b, Method m) {
    if (m == Method::cart) return a.alpha < b.alpha;
    if (a.c3 != b.c3) return a.c3 < b.c3;
    if (a.c2 != b.c2) return a.c2 < b.c2;
    return a.c1 < b.c1;
}

/// Picks the grid point with the best accuracy on a stratified 25% validation part after
/// training on the other 75%, then retrains it on all of `train`.
inline GridChoice grid_search(const Dataset& train, Method method, const Grids& grids, const TrainSettings& settings,
                              std::uint64_t seed) {
    const std::vector<Hyperparameters> points = grids.points(method);
    if (points.empty()) throw std::invalid_argument("grid_search: empty grid");
    GridChoice choice;
    if (points.size() > 1) {
        const FoldSplit split = stratified_split(train.labels, 0.75, seed);
        const Dataset fit = subset(train, split.train), val = subset(train, split.test);
        int best = -1;
        for (const Hyperparameters& h : points) {
            GridPointResult r{h, std::numeric_limits<double>::quiet_NaN(), ""};
            try {
                if (val.size() == 0) throw std::runtime_error("empty validation part");
                const TrainedModel m = train_model(method, fit, h, settings);
                r.validation_accuracy = accuracy(m, val).accuracy_percent;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
            choice.points.push_back(r);
            const int k = static_cast<int>(choice.points.size()) - 1;
            if (!r.error.empty()) continue;
            if (best < 0 || r.validation_accuracy > choice.points[best].validation_accuracy ||
                (r.validation_accuracy == choice.points[best].validation_accuracy &&
                 simpler(h, choice.points[best].hyper, method)))
                best = k;
        }
        if (best < 0) {
            std::string msg = "grid_search: every grid point failed";
            for (const GridPointResult& r : choice.points) msg += "\n  " + r.hyper.describe(method) + ": " + r.error;
            throw GridSearchError(msg, choice.points);
        }
        choice.hyper = choice.points[best].hyper;
        choice.validation_accuracy = choice.points[best].validation_accuracy;
    } else {
        choice.hyper = points.front();
        choice.validation_accuracy = std::numeric_limits<double>::quiet_NaN();
        choice.points.push_back({points.front(), choice.validation_accuracy, ""});
    }
    choice.model = train_model(method, train, choice.hyper, settings);
    return choice;
}

// ---------------------------------------------------------- experiments

struct ExperimentSpec {
    std::string dataset;
    std::string dataset_name;  // defaults to the file stem
    CsvOptions csv;
    std::vector<Method> methods = {Method::octsvm, Method::resvm, Method::cart};
    std::vector<double> flip_fractions = {0.0, 0.2, 0.3, 0.4};
    int folds = 4;
    int replications = 4;
    std::vector<std::uint64_t> seeds;  // one per replication; default 1..replications
    FoldScheme fold_scheme = FoldScheme::train_one;
    Grids grids = Grids::published();
    TrainSettings train;

    ExperimentSpec() {
        train.budget.time_limit = 30.0;
        train.budget.gap_target = 0.05;
    }

    std::string name() const {
        return dataset_name.empty() ? std::filesystem::path(dataset).stem().string() : dataset_name;
    }

    std::uint64_t seed(int replication) const {
        return replication < static_cast<int>(seeds.size()) ? seeds[replication] : static_cast<std::uint64_t>(replication + 1);
    }

    /// Wall-clock budgets make timings (and possibly results) run dependent.
    bool deterministic() const { return !std::isfinite(train.budget.time_limit); }

    void validate() const {
        if (methods.empty()) throw std::invalid_argument("spec: methods must not be empty");
        if (flip_fractions.empty()) throw std::invalid_argument("spec: flip_fractions must not be empty");
        for (double f : flip_fractions)
            if (!(f >= 0.0 && f < 0.5)) throw std::invalid_argument("spec: flip fractions must lie in [0, 0.5)");
        if (folds < 2) throw std::invalid_argument("spec: folds must be at least 2");
        if (replications < 1) throw std::invalid_argument("spec: replications must be positive");
        if (!seeds.empty() && static_cast<int>(seeds.size()) != replications)
            throw std::invalid_argument("spec: need one seed per replication");
        for (Method m : methods) {
            if (m != Method::cart && (grids.c1.empty() || grids.c2.empty()))
                throw std::invalid_argument("spec: c1 and c2 grids must not be empty");
            if (m == Method::octsvm && grids.c3.empty()) throw std::invalid_argument("spec: c3 grid must not be empty");
            if (m == Method::cart && grids.alpha.empty()) throw std::invalid_argument("spec: alpha grid must not be empty");
        }
        train.budget.validate();
    }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const std::string& f : split_fields(value, ',')) {
        double v;
        if (!parse_number(f, v)) throw std::invalid_argument("spec: " + key + ": '" + f + "' is not a number");
        out.push_back(v);
    }
    return out;
}

inline double parse_scalar(const std::string& key, const std::string& value) {
    double v;
    if (!parse_number(value, v)) {
        if (value == "inf" || value == "none") return std::numeric_limits<double>::infinity();
        throw std::invalid_argument("spec: " + key + ": '" + value + "' is not a number");
    }
    return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_scalar(key, value);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw std::invalid_argument("spec: " + key + " must be an integer");
    return static_cast<int>(v);
}

}  // namespace detail

/// Flat `key = value` text; lists are comma separated; `#` starts a comment.
/// Relative dataset paths resolve against `base_dir`.
inline ExperimentSpec parse_spec(std::istream& in, const std::string& base_dir = "") {
    ExperimentSpec s;
    std::string line;
    int number = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("spec line " + std::to_string(number) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw std::invalid_argument("spec: duplicate key " + key);
        if (key == "dataset") {
            std::filesystem::path p(value);
            s.dataset = p.is_absolute() || base_dir.empty() ? value : (std::filesystem::path(base_dir) / p).string();
        } else if (key == "dataset_name") {
            s.dataset_name = value;
        } else if (key == "label_column") {
            s.csv.label_column = detail::parse_int(key, value);
        } else if (key == "delimiter") {
            if (value.size() != 1 && value != "tab") throw std::invalid_argument("spec: delimiter must be one character");
            s.csv.delimiter = value == "tab" ? '\t' : value[0];
        } else if (key == "header") {
            if (value == "auto") s.csv.header = HeaderMode::detect;
            else if (value == "true" || value == "yes") s.csv.header = HeaderMode::present;
            else if (value == "false" || value == "no") s.csv.header = HeaderMode::absent;
            else throw std::invalid_argument("spec: header must be auto, true or false");
        } else if (key == "methods") {
            s.methods.clear();
            for (const std::string& m : detail::split_fields(value, ',')) s.methods.push_back(parse_method(m));
        } else if (key == "flip_fractions") {
            s.flip_fractions = detail::parse_list(key, value);
        } else if (key == "folds") {
            s.folds = detail::parse_int(key, value);
        } else if (key == "replications") {
            s.replications = detail::parse_int(key, value);
        } else if (key == "seeds") {
            s.seeds.clear();
            for (double v : detail::parse_list(key, value)) {
                if (v < 0 || v != std::floor(v)) throw std::invalid_argument("spec: seeds must be non-negative integers");
                s.seeds.push_back(static_cast<std::uint64_t>(v));
            }
        } else if (key == "fold_scheme") {
            if (value == "train_one") s.fold_scheme = FoldScheme::train_one;
            else if (value == "train_rest") s.fold_scheme = FoldScheme::train_rest;
            else throw std::invalid_argument("spec: fold_scheme must be train_one or train_rest");
        } else if (key == "c1_grid") {
            s.grids.c1 = detail::parse_list(key, value);
        } else if (key == "c2_grid") {
            s.grids.c2 = detail::parse_list(key, value);
        } else if (key == "c3_grid") {
            s.grids.c3 = detail::parse_list(key, value);
        } else if (key == "alpha_grid") {
            s.grids.alpha = detail::parse_list(key, value);
        } else if (key == "octsvm_depth") {
            s.train.octsvm_depth = detail::parse_int(key, value);
        } else if (key == "cart_depth") {
            s.train.cart_depth = detail::parse_int(key, value);
        } else if (key == "coef_bound") {
            s.train.coef_bound = detail::parse_scalar(key, value);
        } else if (key == "min_leaf_fraction") {
            s.train.min_leaf_fraction = detail::parse_scalar(key, value);
        } else if (key == "time_limit") {
            s.train.budget.time_limit = detail::parse_scalar(key, value);
        } else if (key == "node_limit") {
            s.train.budget.node_limit = detail::parse_int(key, value);
        } else if (key == "gap_target") {
            s.train.budget.gap_target = detail::parse_scalar(key, value);
        } else {
            throw std::invalid_argument("spec: unknown key " + key);
        }
    }
    // A node limit without an explicit time limit selects the reproducible mode.
    if (seen.count("node_limit") && !seen.count("time_limit"))
        s.train.budget.time_limit = std::numeric_limits<double>::infinity();
    if (s.dataset.empty()) throw std::invalid_argument("spec: dataset is required");
    s.validate();
    return s;
}

inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_spec(in, std::filesystem::path(path).parent_path().string());
}

struct ReportRow {
    std::string dataset;
    Method method = Method::octsvm;
    double flip_percent = 0.0;
    int replication = 0;
    int fold = 0;
    double accuracy_percent = std::numeric_limits<double>::quiet_NaN();
    double solve_gap = std::numeric_limits<double>::quiet_NaN();
    double wall_time = std::numeric_limits<double>::quiet_NaN();
    std::string hyperparameters;
    std::string error;  // empty when the cell succeeded

    bool ok() const { return error.empty(); }
};

struct AggregateRow {
    std::string dataset;
    Method method = Method::octsvm;
    bool average = false;  // the per-(dataset, method) "Average" line
    double flip_percent = 0.0;
    double mean_accuracy = std::numeric_limits<double>::quiet_NaN();
    int cells = 0;
};

struct Report {
    std::vector<ReportRow> rows;
    bool timings = true;  // false in deterministic (node-limited) mode

    /// Means over successful rows per (dataset, method, flip), plus one Average per (dataset, method).
    std::vector<AggregateRow> aggregates() const {
        std::map<std::tuple<std::string, int, double>, std::pair<double, int>> per_flip;
        std::map<std::pair<std::string, int>, std::pair<double, int>> per_method;
        for (const ReportRow& r : rows) {
            auto& a = per_flip[{r.dataset, static_cast<int>(r.method), r.flip_percent}];
            auto& b = per_method[{r.dataset, static_cast<int>(r.method)}];
            if (!r.ok()) continue;
            a.first += r.accuracy_percent;
            a.second += 1;
            b.first += r.accuracy_percent;
            b.second += 1;
        }
        std::vector<AggregateRow> out;
        for (const auto& [key, acc] : per_method) {
            for (const auto& [fk, fv] : per_flip) {
                if (std::get<0>(fk) != key.first || std::get<1>(fk) != key.second) continue;
                AggregateRow a{key.first, static_cast<Method>(key.second), false, std::get<2>(fk),
                               fv.second ? fv.first / fv.second : std::numeric_limits<double>::quiet_NaN(), fv.second};
                out.push_back(a);
            }
            out.push_back({key.first, static_cast<Method>(key.second), true, 0.0,
                           acc.second ? acc.first / acc.second : std::numeric_limits<double>::quiet_NaN(), acc.second});
        }
        return out;
    }
};

/// Data of one (replication, flip fraction, fold) cell: scaling fitted on the training rows,
/// training labels flipped, test labels untouched.
struct ExperimentCell {
    std::vector<int> train_rows, test_rows;  // indices into the loaded table
    Dataset train, test;
    std::uint64_t grid_seed = 0;
};

inline ExperimentCell experiment_cell(const RawTable& table, const ExperimentSpec& spec, int replication,
                                      int flip_index, int fold) {
    const std::uint64_t seed = spec.seed(replication);
    const auto folds = kfold(table.rows(), spec.folds, derive_seed(seed, {1}));
    const FoldSplit split = fold_split(folds, fold, spec.fold_scheme);
    ExperimentCell c;
    c.train_rows = split.train;
    c.test_rows = split.test;
    auto gather = [&](const std::vector<int>& rows, FeatureMatrix& x, std::vector<int>& y) {
        x.resize(static_cast<Eigen::Index>(rows.size()), table.cols());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            x.row(static_cast<Eigen::Index>(k)) = table.features.row(rows[k]);
            y.push_back(table.labels[rows[k]]);
        }
    };
    FeatureMatrix train_raw, test_raw;
    std::vector<int> train_labels, test_labels;
    gather(split.train, train_raw, train_labels);
    gather(split.test, test_raw, test_labels);
    const std::uint64_t fi = static_cast<std::uint64_t>(flip_index), f = static_cast<std::uint64_t>(fold);
    const Dataset clean = normalize_features(train_raw, train_labels, table.feature_names);
    c.train = flip_labels(clean, spec.flip_fractions.at(flip_index), derive_seed(seed, {2, fi, f}));
    c.test = apply_scaling(clean.scaling, test_raw, test_labels, table.feature_names);
    c.grid_seed = derive_seed(seed, {3, fi, f});
    return c;
}

/// One row per (replication, flip fraction, fold, method) cell, sorted by
/// (dataset, method, flip, replication, fold). Failing cells are recorded, not fatal.
inline Report run_experiment(const ExperimentSpec& spec, const RawTable& table, std::ostream* progress = nullptr) {
    spec.validate();
    check_labels(table.labels);
    Report report;
    report.timings = !spec.deterministic();
    for (int rep = 0; rep < spec.replications; ++rep) {
        for (int fi = 0; fi < static_cast<int>(spec.flip_fractions.size()); ++fi) {
            for (int f = 0; f < spec.folds; ++f) {
                const ExperimentCell cell = experiment_cell(table, spec, rep, fi, f);
                for (Method method : spec.methods) {
                    ReportRow row;
                    row.dataset = spec.name();
                    row.method = method;
                    row.flip_percent = 100.0 * spec.flip_fractions[fi];
                    row.replication = rep + 1;
                    row.fold = f + 1;
                    const auto start = std::chrono::steady_clock::now();
                    try {
                        const GridChoice g = grid_search(cell.train, method, spec.grids, spec.train, cell.grid_seed);
                        row.accuracy_percent = accuracy(g.model, cell.test).accuracy_percent;
                        row.solve_gap = g.model.gap;
                        row.hyperparameters = g.hyper.describe(method);
                    } catch (const std::exception& e) {
                        row.error = e.what();
                        std::replace(row.error.begin(), row.error.end(), '\n', ' ');
                    }
                    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                    if (progress)
                        *progress << row.dataset << ' ' << to_string(method) << " flip=" << row.flip_percent
                                  << " rep=" << row.replication << " fold=" << row.fold << " acc=" << row.accuracy_percent
                                  << (row.ok() ? "" : " error: " + row.error) << std::endl;
                    report.rows.push_back(std::move(row));
                }
            }
        }
    }
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tuple(a.dataset, static_cast<int>(a.method), a.flip_percent, a.replication, a.fold) <
               std::tuple(b.dataset, static_cast<int>(b.method), b.flip_percent, b.replication, b.fold);
    });
    return report;
}

inline Report run_experiment(const ExperimentSpec& spec, std::ostream* progress = nullptr) {
    if (spec.dataset.empty()) throw std::invalid_argument("spec: dataset is required");
    spec.validate();
    return run_experiment(spec, load_csv(spec.dataset, spec.csv), progress);
}

// ------------------------------------------------------------ reports

namespace detail {

inline std::string fixed(double v, int digits) {
    if (std::isnan(v)) return "NA";
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

inline std::string csv_field(const std::string& s, char delimiter) {
    if (s.find_first_of(std::string("\"\n") + delimiter) == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

}  // namespace detail

inline std::string report_table(const Report& report, char delimiter = ',') {
    std::ostringstream os;
    const char d = delimiter;
    os << "dataset" << d << "method" << d << "flip_percent" << d << "replication" << d << "fold" << d
       << "accuracy_percent" << d << "solve_gap" << d << "wall_time" << d << "hyperparameters" << d << "error\n";
    for (const ReportRow& r : report.rows) {
        os << detail::csv_field(r.dataset, d) << d << to_string(r.method) << d << detail::fixed(r.flip_percent, 0) << d
           << r.replication << d << r.fold << d << detail::fixed(r.accuracy_percent, 2) << d
           << detail::fixed(r.solve_gap, 6) << d << (report.timings ? detail::fixed(r.wall_time, 3) : "-") << d
           << detail::csv_field(r.hyperparameters, d) << d << detail::csv_field(r.error, d) << '\n';
    }
    return os.str();
}

/// Datasets down the side, one line per flip level plus "Average", methods across.
inline std::string aggregate_table(const Report& report) {
    const auto agg = report.aggregates();
    std::vector<Method> methods;
    std::vector<std::string> datasets;
    for (const AggregateRow& a : agg) {
        if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) methods.push_back(a.method);
        if (std::find(datasets.begin(), datasets.end(), a.dataset) == datasets.end()) datasets.push_back(a.dataset);
    }
    std::sort(methods.begin(), methods.end(), [](Method a, Method b) { return std::string(to_string(a)) < to_string(b); });
    std::ostringstream os;
    os << std::left << std::setw(16) << "Dataset" << std::setw(10) << "Flip(%)";
    for (Method m : methods) os << std::right << std::setw(10) << to_string(m);
    os << '\n';
    for (const std::string& ds : datasets) {
        std::vector<double> flips;
        for (const AggregateRow& a : agg)
            if (a.dataset == ds && !a.average && std::find(flips.begin(), flips.end(), a.flip_percent) == flips.end())
                flips.push_back(a.flip_percent);
        std::sort(flips.begin(), flips.end());
        auto line = [&](const std::string& label, bool average, double flip, bool first) {
            os << std::left << std::setw(16) << (first ? ds : "") << std::setw(10) << label;
            for (Method m : methods) {
                double v = std::numeric_limits<double>::quiet_NaN();
                for (const AggregateRow& a : agg)
                    if (a.dataset == ds && a.method == m && a.average == average && (average || a.flip_percent == flip))
                        v = a.mean_accuracy;
                os << std::right << std::setw(10) << detail::fixed(v, 2);
            }
            os << '\n';
        };
        for (std::size_t k = 0; k < flips.size(); ++k) line(detail::fixed(flips[k], 0), false, flips[k], k == 0);
        line("Average", true, 0.0, flips.empty());
    }
    return os.str();
}

/// Writes the per-cell table to `path` and the aggregate table to `path` + ".summary.txt".
/// Returns the summary path.
inline std::string write_report(const Report& report, const std::string& path, const std::string& format = "csv") {
    if (report.rows.empty()) throw std::invalid_argument("write_report: empty report");
    char delimiter;
    if (format == "csv") delimiter = ',';
    else if (format == "tsv") delimiter = '\t';
    else throw std::invalid_argument("write_report: unknown format " + format);
    const std::string summary = path + ".summary.txt";
    for (const auto& [file, text] : {std::pair{path, report_table(report, delimiter)}, std::pair{summary, aggregate_table(report)}}) {
        std::ofstream out(file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + file);
        out << text;
        if (!out) throw std::runtime_error("error writing " + file);
    }
    return summary;
}

// ------------------------------------------------------- model files

inline nlohmann::json to_json(const TrainedModel& m) {
    using nlohmann::json;
    json j;
    j["format"] = "octsvm-model";
    j["version"] = 1;
    j["method"] = to_string(m.method);
    j["hyperparameters"] = {{"c1", m.hyper.c1}, {"c2", m.hyper.c2}, {"c3", m.hyper.c3}, {"alpha", m.hyper.alpha}};
    j["scaling"] = {{"min", m.scaling.min}, {"max", m.scaling.max}};
    j["feature_names"] = m.feature_names;
    if (std::isfinite(m.gap)) j["gap"] = m.gap;
    j["status"] = to_string(m.status);
    if (m.method == Method::cart) {
        json nodes = json::array();
        for (const AxisNode& n : m.cart.nodes)
            nodes.push_back({{"leaf", n.leaf}, {"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                             {"right", n.right}, {"negatives", n.negatives}, {"positives", n.positives}, {"depth", n.depth}});
        j["cart"] = {{"dims", m.cart.dims}, {"max_depth", m.cart.max_depth}, {"sample_size", m.cart.sample_size}, {"nodes", nodes}};
    } else {
        const TreeClassifier& t = m.tree;
        json nodes = json::array();
        for (int k = 1; k <= t.topology.node_count(); ++k) {
            const Hyperplane& h = t.node(k);
            std::vector<double> w(h.weights.data(), h.weights.data() + h.weights.size());
            nodes.push_back({{"node", k}, {"active", t.active(k)}, {"weights", w}, {"intercept", h.intercept}});
        }
        j["tree"] = {{"depth", t.topology.depth()}, {"dims", t.dims()}, {"fallback_label", t.fallback_label}, {"nodes", nodes}};
    }
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "octsvm-model") throw std::invalid_argument("not an octsvm model file");
    TrainedModel m;
    m.method = parse_method(j.at("method").get<std::string>());
    const auto& h = j.at("hyperparameters");
    m.hyper = {h.at("c1").get<double>(), h.at("c2").get<double>(), h.at("c3").get<double>(), h.at("alpha").get<double>()};
    m.scaling.min = j.at("scaling").at("min").get<std::vector<double>>();
    m.scaling.max = j.at("scaling").at("max").get<std::vector<double>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("gap")) m.gap = j.at("gap").get<double>();
    if (m.method == Method::cart) {
        const auto& c = j.at("cart");
        m.cart.dims = c.at("dims").get<int>();
        m.cart.max_depth = c.at("max_depth").get<int>();
        m.cart.sample_size = c.at("sample_size").get<int>();
        for (const auto& n : c.at("nodes")) {
            AxisNode a;
            a.leaf = n.at("leaf").get<bool>();
            a.feature = n.at("feature").get<int>();
            a.threshold = n.at("threshold").get<double>();
            a.left = n.at("left").get<int>();
            a.right = n.at("right").get<int>();
            a.negatives = n.at("negatives").get<int>();
            a.positives = n.at("positives").get<int>();
            a.depth = n.at("depth").get<int>();
            m.cart.nodes.push_back(a);
        }
        const int count = static_cast<int>(m.cart.nodes.size());
        if (count == 0) throw std::invalid_argument("model file: empty CART tree");
        for (const AxisNode& a : m.cart.nodes)
            if (!a.leaf && (a.left <= 0 || a.left >= count || a.right <= 0 || a.right >= count || a.feature < 0 ||
                            a.feature >= m.cart.dims))
                throw std::invalid_argument("model file: malformed CART node");
    } else {
        const auto& t = j.at("tree");
        const int dims = t.at("dims").get<int>();
        m.tree.topology = TreeTopology(t.at("depth").get<int>());
        m.tree.fallback_label = t.at("fallback_label").get<int>();
        for (const auto& n : t.at("nodes")) {
            const auto w = n.at("weights").get<std::vector<double>>();
            if (static_cast<int>(w.size()) != dims) throw std::invalid_argument("model file: weight length mismatch");
            m.tree.hyperplanes.push_back({Eigen::Map<const Vector>(w.data(), dims), n.at("intercept").get<double>()});
            m.tree.split_active.push_back(n.at("active").get<bool>());
        }
        m.tree.validate();
    }
    return m;
}

inline void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << std::setw(2) << to_json(m) << '\n';
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace octsvm
