#pragma once

// Best-bound branch and bound over the continuous relaxation, with depth-first
// plunging after each branching and a rounding heuristic for incumbents.

#include "octsvm/feasibility.hpp"
#include "octsvm/formulation.hpp"
#include "octsvm/relaxation.hpp"
#include "octsvm/solve_result.hpp"

#include <chrono>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <queue>

namespace octsvm {

/// Branching priority class of a binary: d, then z, then xi, then theta.
inline int branching_class(Role role) {
    switch (role) {
        case Role::d: return 0;
        case Role::z: return 1;
        case Role::xi: return 2;
        case Role::theta: return 3;
        default: return 4;
    }
}

/// Fractional binary to branch on. Throws when every binary is integral within `tol`.
inline int select_branching(const std::vector<double>& values, const MinlpModel& model, double tol = 1e-6) {
    int best = -1, best_class = 5;
    double best_frac = 0.0;
    for (int k = 0; k < model.num_variables(); ++k) {
        const Variable& v = model.variables[k];
        if (v.kind != VarKind::binary) continue;
        const double frac = std::abs(values[k] - std::round(values[k]));
        if (frac <= tol) continue;
        const int cls = branching_class(v.role);
        if (cls < best_class || (cls == best_class && frac > best_frac)) {
            best = k;
            best_class = cls;
            best_frac = frac;
        }
    }
    if (best < 0) throw std::invalid_argument("select_branching: every binary is integral");
    return best;
}

inline int select_branching(const RelaxSolution& relax, const MinlpModel& model, double tol = 1e-6) {
    return select_branching(relax.values, model, tol);
}

namespace detail {

inline bool tree_binaries_integral(const MinlpModel& model, const std::vector<double>& x, double tol) {
    for (int k = 0; k < model.num_variables(); ++k) {
        const Variable& v = model.variables[k];
        if (v.kind == VarKind::binary && v.role != Role::theta && std::abs(x[k] - std::round(x[k])) > tol) return false;
    }
    return true;
}

inline std::pair<std::vector<double>, std::vector<double>> model_bounds(const MinlpModel& model) {
    std::vector<double> lo, up;
    for (const Variable& v : model.variables) {
        lo.push_back(v.lower);
        up.push_back(v.upper);
    }
    return {lo, up};
}

inline std::optional<Solution> polished_if_feasible(const MinlpModel& model, const std::vector<double>& x,
                                                    double tol = 1e-6) {
    Solution sol = polish(model, x);
    if (!check_feasible(sol, model, tol).passes()) return std::nullopt;
    return sol;
}

// One rounding pass from point x. Returns the fixed-structure optimum if feasible.
inline std::optional<Solution> round_and_resolve(const MinlpModel& model, const std::vector<double>& x,
                                                 const RelaxOptions& options, double split_threshold = 0.5) {
    const VariableLayout& L = model.layout;
    const Dataset& data = model.data;
    const ModelConfig& cfg = model.config;
    auto [lo, up] = model_bounds(model);
    auto fix = [&](int id, double v) { lo[id] = up[id] = v; };
    auto hinge = [](double v) { return std::max(0.0, 1.0 - v); };
    auto relabel = [&](int i, double f) {
        const double y = data.labels[i];
        return cfg.c1 * hinge(-y * f) + cfg.c2 < cfg.c1 * hinge(y * f);
    };

    if (model.kind == ModelKind::resvm) {
        for (int i = 0; i < L.n; ++i) {
            double f = x[L.omega0_id(1)];
            for (int j = 0; j < L.p; ++j) f += x[L.omega_id(1, j)] * data.features(i, j);
            fix(L.xi_id(i, 1), relabel(i, f) ? 1.0 : 0.0);
        }
    } else {
        const TreeTopology& topo = model.topology;
        std::vector<bool> active(L.nodes + 1, false);
        for (int t = 1; t <= L.nodes; ++t) {
            active[t] = x[L.d_id(t)] >= split_threshold && (t == 1 || active[topo.parent(t)]);
            fix(L.d_id(t), active[t] ? 1.0 : 0.0);
        }
        auto value = [&](int i, int t) {
            double f = x[L.omega0_id(t)];
            if (active[t])
                for (int j = 0; j < L.p; ++j) f += x[L.omega_id(t, j)] * data.features(i, j);
            return f;
        };
        for (int i = 0; i < L.n; ++i) {
            std::vector<bool> on_path(L.nodes + 1, false);
            int t = 1;
            while (true) {
                on_path[t] = true;
                const double f = value(i, t);
                fix(L.xi_id(i, t), relabel(i, f) ? 1.0 : 0.0);
                if (!topo.has_children(t)) break;
                const bool right = f >= 0.0;
                fix(L.theta_id(i, t), right ? 1.0 : 0.0);
                t = right ? topo.right_child(t) : topo.left_child(t);
            }
            for (int s = 1; s <= L.nodes; ++s) {
                fix(L.z_id(i, s), on_path[s] ? 1.0 : 0.0);
                if (!on_path[s]) fix(L.xi_id(i, s), 0.0);
            }
        }
    }
    const RelaxSolution r = solve_relaxation(model, lo, up, options);
    if (r.status == RelaxStatus::infeasible || r.values.empty()) return std::nullopt;
    return polished_if_feasible(model, r.values);
}

}  // namespace detail

namespace detail {

// Split indicators are scaled by the norm big-M, so a clearly useful hyperplane can sit
// below 0.5; the second threshold keeps every split the relaxation uses at all.
inline constexpr double kSplitThresholds[] = {0.5, 0.01};

inline std::optional<Solution> rounding_passes(const MinlpModel& model, const std::vector<double>& start,
                                               const RelaxOptions& options, int rounds) {
    std::optional<Solution> best;
    std::vector<std::vector<bool>> tried;
    for (double threshold : kSplitThresholds) {
        std::vector<bool> pattern;
        if (model.kind == ModelKind::octsvm)
            for (int t = 1; t <= model.layout.nodes; ++t) pattern.push_back(start[model.layout.d_id(t)] >= threshold);
        if (std::find(tried.begin(), tried.end(), pattern) != tried.end()) continue;
        tried.push_back(pattern);
        std::vector<double> x = start;
        std::optional<Solution> local;
        for (int round = 0; round < rounds; ++round) {
            auto sol = round_and_resolve(model, x, options, round == 0 ? threshold : 0.5);
            if (!sol) break;
            if (local && sol->objective >= local->objective - 1e-9) break;
            x = sol->values;
            local = std::move(sol);
        }
        if (local && (!best || local->objective < best->objective)) best = std::move(local);
    }
    return best;
}

}  // namespace detail

/// Rounds a relaxation point to a feasible tree: split indicators at 0.5 (top-down),
/// routing through the rounded hyperplanes, relabeling where it lowers the node's hinge
/// cost, then re-solves the continuous part. Repeats from the new point while it improves.
///
/// With `unrelabeled_start`, also rounds the relaxation that fixes every relabel
/// indicator to 0; there the hyperplanes cannot lean on fractional relabeling.
inline std::optional<Solution> primal_heuristic(const RelaxSolution& relax, const MinlpModel& model,
                                                const RelaxOptions& options = {}, int rounds = 5,
                                                bool unrelabeled_start = false) {
    if (relax.values.size() != model.variables.size()) return std::nullopt;
    if (detail::tree_binaries_integral(model, relax.values, model.config.integrality_tol))
        if (auto sol = detail::polished_if_feasible(model, relax.values)) return sol;

    std::optional<Solution> best = detail::rounding_passes(model, relax.values, options, rounds);
    if (unrelabeled_start) {
        auto [lo, up] = detail::model_bounds(model);
        for (int k = 0; k < model.num_variables(); ++k)
            if (model.variables[k].role == Role::xi) lo[k] = up[k] = 0.0;
        const RelaxSolution r = solve_relaxation(model, lo, up, options);
        if (r.status != RelaxStatus::infeasible && !r.values.empty()) {
            auto alt = detail::rounding_passes(model, r.values, options, rounds);
            if (alt && (!best || alt->objective < best->objective)) best = std::move(alt);
        }
    }
    return best;
}

namespace detail {

// Soft-margin hyperplane (no relabeling) on a subset of rows, under the given labels.
inline std::optional<std::pair<Vector, double>> fit_svm(const Dataset& data, const std::vector<int>& labels,
                                                        const std::vector<int>& rows, double c1, double W,
                                                        const RelaxOptions& options) {
    bool pos = false, neg = false;
    for (int i : rows) (labels[i] > 0 ? pos : neg) = true;
    if (!pos || !neg) return std::nullopt;
    Dataset sub;
    sub.features.resize(static_cast<Eigen::Index>(rows.size()), data.dims());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        sub.features.row(static_cast<Eigen::Index>(k)) = data.features.row(rows[k]);
        sub.labels.push_back(labels[rows[k]]);
    }
    sub.scaling = data.scaling;
    const MinlpModel m = build_resvm_model(sub, c1, 0.0, W);
    auto [lo, up] = model_bounds(m);
    for (int i = 0; i < m.layout.n; ++i) lo[m.layout.xi_id(i, 1)] = up[m.layout.xi_id(i, 1)] = 0.0;
    const RelaxSolution r = solve_relaxation(m, lo, up, options);
    if (r.status != RelaxStatus::optimal) return std::nullopt;
    Vector w(data.dims());
    for (int j = 0; j < data.dims(); ++j) w[j] = r.values[m.layout.omega_id(1, j)];
    return std::make_pair(w, r.values[m.layout.omega0_id(1)]);
}

// Labels replaced by the majority vote of the k nearest other rows (ties keep the label).
inline std::vector<int> neighbour_vote_labels(const Dataset& data, int k) {
    const int n = data.size();
    std::vector<int> out = data.labels;
    k = std::min(k, n - 1);
    for (int i = 0; i < n && k > 0; ++i) {
        std::vector<std::pair<double, int>> dist;
        for (int j = 0; j < n; ++j)
            if (j != i) dist.emplace_back((data.features.row(i) - data.features.row(j)).squaredNorm(), j);
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        int vote = 0;
        for (int q = 0; q < k; ++q) vote += data.labels[dist[q].second];
        if (vote != 0) out[i] = vote > 0 ? 1 : -1;
    }
    return out;
}

}  // namespace detail

/// Incumbent built from the data alone: a soft-margin hyperplane per node, fitted top-down on
/// the rows reaching it, then every depth prefix of that tree is rounded and re-solved.
/// Fitted twice, on the given labels and on 5-nearest-neighbour vote labels; the rounding
/// decides relabels against the given labels either way.
inline std::optional<Solution> svm_seeded_start(const MinlpModel& model, const RelaxOptions& options = {},
                                                int rounds = 5) {
    if (model.kind != ModelKind::octsvm) return std::nullopt;
    const VariableLayout& L = model.layout;
    const TreeTopology& topo = model.topology;
    const Dataset& data = model.data;
    std::optional<Solution> best;
    for (const std::vector<int>& labels : {data.labels, detail::neighbour_vote_labels(data, 5)}) {
        std::vector<double> seed(model.num_variables(), 0.0);
        std::vector<bool> fitted(L.nodes + 1, false);
        std::vector<std::vector<int>> rows(L.nodes + 1);
        rows[1].resize(L.n);
        std::iota(rows[1].begin(), rows[1].end(), 0);
        for (int t = 1; t <= L.nodes; ++t) {
            if (t > 1 && !fitted[topo.parent(t)]) continue;
            const auto plane =
                detail::fit_svm(data, labels, rows[t], model.config.c1, model.config.coef_bound, options);
            if (!plane) continue;
            fitted[t] = true;
            seed[L.d_id(t)] = 1.0;
            for (int j = 0; j < L.p; ++j) seed[L.omega_id(t, j)] = plane->first[j];
            seed[L.omega0_id(t)] = plane->second;
            if (!topo.has_children(t)) continue;
            for (int i : rows[t]) {
                const double f = plane->second + data.features.row(i).dot(plane->first);
                rows[f >= 0.0 ? topo.right_child(t) : topo.left_child(t)].push_back(i);
            }
        }
        for (int depth = 0; depth <= topo.depth(); ++depth) {
            std::vector<double> x = seed;
            for (int t = 1; t <= L.nodes; ++t)
                if (topo.level_of(t) > depth) x[L.d_id(t)] = 0.0;
            auto sol = detail::rounding_passes(model, x, options, rounds);
            if (sol && (!best || sol->objective < best->objective)) best = std::move(sol);
        }
    }
    return best;
}

inline std::optional<Solution> primal_heuristic(const RelaxSolution& relax, const MinlpModel& model, const Dataset& data,
                                                const TreeTopology& topo) {
    if (data.size() != model.data.size() || !(topo == model.topology))
        throw std::invalid_argument("primal_heuristic: data or topology does not match the model");
    return primal_heuristic(relax, model);
}

struct BranchOptions {
    RelaxOptions relax;
    int heuristic_rounds = 5;
    int heuristic_warmup = 20;    // run the heuristic at each of the first nodes
    int heuristic_interval = 25;  // then at every k-th node
    bool seeded_start = true;     // svm_seeded_start before the root
    double log_interval = 1.0;    // seconds between trace lines
    std::ostream* log = nullptr;
};

namespace detail {

// Relative tolerance below which a node bound counts as no better than the incumbent.
inline constexpr double kPruneTol = 1e-7;

struct Node {
    std::vector<std::int8_t> fix;  // per binary: -1 free, 0, 1
    double bound = -kInf;
    long id = 0;
    int depth = 0;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

// Fixes implied by rows over binaries only, plus z_it = 0 => xi_it = 0 (no loss of optimality:
// a relabel outside the observation's path costs c2 and changes nothing else).
class Propagator {
public:
    explicit Propagator(const MinlpModel& model) : model_(model), index_(model.num_variables(), -1) {
        binaries_ = model.binaries();
        for (int b = 0; b < static_cast<int>(binaries_.size()); ++b) index_[binaries_[b]] = b;
        for (int r = 0; r < static_cast<int>(model.rows.size()); ++r) {
            bool all = !model.rows[r].terms.empty();
            for (const Term& t : model.rows[r].terms) all = all && index_[t.var] >= 0;
            if (all) rows_.push_back(r);
        }
        if (model.kind == ModelKind::octsvm) {
            const VariableLayout& L = model.layout;
            for (int i = 0; i < L.n; ++i)
                for (int t = 1; t <= L.nodes; ++t) implied_.push_back({index_[L.z_id(i, t)], index_[L.xi_id(i, t)]});
        }
    }

    const std::vector<int>& binaries() const { return binaries_; }

    std::vector<std::int8_t> initial() const {
        std::vector<std::int8_t> fix(binaries_.size(), -1);
        for (std::size_t b = 0; b < binaries_.size(); ++b) {
            const Variable& v = model_.variables[binaries_[b]];
            if (v.lower > 0.5) fix[b] = 1;
            else if (v.upper < 0.5) fix[b] = 0;
        }
        return fix;
    }

    /// False when the fixings are contradictory.
    bool run(std::vector<std::int8_t>& fix) const {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& [zb, xb] : implied_)
                if (fix[zb] == 0 && fix[xb] != 0) {
                    if (fix[xb] == 1) {
                        // Both fixed: leave it to the relaxation (still feasible, just dominated).
                        continue;
                    }
                    fix[xb] = 0;
                    changed = true;
                }
            for (int r : rows_) {
                const LinearRow& row = model_.rows[r];
                if (row.sense == Sense::le || row.sense == Sense::eq) {
                    if (!tighten(row.terms, row.rhs, 1.0, fix, changed)) return false;
                }
                if (row.sense == Sense::ge || row.sense == Sense::eq) {
                    if (!tighten(row.terms, -row.rhs, -1.0, fix, changed)) return false;
                }
            }
        }
        return true;
    }

private:
    // sign * sum a x <= rhs
    bool tighten(const std::vector<Term>& terms, double rhs, double sign, std::vector<std::int8_t>& fix,
                 bool& changed) const {
        double min_act = 0.0;
        for (const Term& t : terms) {
            const double a = sign * t.coef;
            const int f = fix[index_[t.var]];
            min_act += f < 0 ? std::min(0.0, a) : a * f;
        }
        if (min_act > rhs + 1e-9) return false;
        for (const Term& t : terms) {
            const int b = index_[t.var];
            if (fix[b] >= 0) continue;
            const double a = sign * t.coef;
            // Moving this binary off its cheapest value costs |a|.
            if (min_act + std::abs(a) > rhs + 1e-9) {
                fix[b] = a > 0 ? 0 : 1;
                changed = true;
            }
        }
        return true;
    }

    const MinlpModel& model_;
    std::vector<int> binaries_;
    std::vector<int> index_;
    std::vector<int> rows_;
    std::vector<std::pair<int, int>> implied_;
};

}  // namespace detail

inline SolveResult branch_and_bound(const MinlpModel& model, const Budget& budget, const BranchOptions& options = {}) {
    budget.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

    const detail::Propagator prop(model);
    const std::vector<int>& binaries = prop.binaries();
    const auto [base_lo, base_up] = detail::model_bounds(model);
    const double int_tol = model.config.integrality_tol;

    SolveResult res;
    std::priority_queue<detail::Node, std::vector<detail::Node>, detail::NodeOrder> open;
    double pruned_floor = detail::kInf;  // least bound among nodes closed without an incumbent of their own
    long next_id = 1;
    double last_log = -detail::kInf;

    auto incumbent_value = [&] { return res.objective(); };
    auto prune_level = [&] {
        const double inc = incumbent_value();
        return inc - detail::kPruneTol * std::max(1.0, std::abs(inc));
    };
    auto offer = [&](std::optional<Solution> sol) {
        if (sol && sol->objective < incumbent_value()) {
            res.incumbent = std::move(sol);
            return true;
        }
        return false;
    };
    auto global_bound = [&](const std::optional<detail::Node>& current) {
        double lb = pruned_floor;
        if (!open.empty()) lb = std::min(lb, open.top().bound);
        if (current) lb = std::min(lb, current->bound);
        return std::min(lb, incumbent_value());
    };
    auto log_line = [&](const std::optional<detail::Node>& current, bool force) {
        const double now = elapsed();
        if (!force && res.nodes_explored > 10 && now - last_log < options.log_interval) return;
        last_log = now;
        LogLine l;
        l.nodes = res.nodes_explored;
        l.bound = global_bound(current);
        l.incumbent = incumbent_value();
        l.gap = relative_gap(l.incumbent, l.bound);
        l.time = now;
        l.open = open.size() + (current ? 1 : 0);
        res.trace.push_back(l);
        if (options.log) *options.log << format_log_line(l) << '\n';
    };

    if (options.seeded_start) offer(svm_seeded_start(model, options.relax, options.heuristic_rounds));

    std::optional<detail::Node> current = detail::Node{prop.initial(), -detail::kInf, 0, 0};
    bool limit_hit = false, gap_hit = false;
    while (true) {
        if (!current) {
            if (open.empty()) break;
            current = open.top();
            open.pop();
        }
        if (res.nodes_explored >= budget.node_limit || elapsed() >= budget.time_limit) {
            limit_hit = true;
            break;
        }
        if (res.incumbent && relative_gap(incumbent_value(), global_bound(current)) <= budget.gap_target) {
            gap_hit = true;
            break;
        }
        detail::Node node = std::move(*current);
        current.reset();
        ++res.nodes_explored;

        if (res.incumbent && node.bound >= prune_level()) {
            pruned_floor = std::min(pruned_floor, node.bound);
            log_line(current, false);
            continue;
        }
        if (!prop.run(node.fix)) {
            log_line(current, false);
            continue;
        }
        std::vector<double> lo = base_lo, up = base_up;
        for (std::size_t b = 0; b < binaries.size(); ++b)
            if (node.fix[b] >= 0) lo[binaries[b]] = up[binaries[b]] = node.fix[b];
        const RelaxSolution relax = solve_relaxation(model, lo, up, options.relax);
        if (relax.status == RelaxStatus::infeasible) {
            log_line(current, false);
            continue;
        }
        const double bound = std::isfinite(relax.bound) ? std::max(node.bound, relax.bound) : node.bound;
        if (res.incumbent && bound >= prune_level()) {
            pruned_floor = std::min(pruned_floor, bound);
            log_line(current, false);
            continue;
        }

        bool improved = false;
        const bool heuristic_due = res.nodes_explored <= options.heuristic_warmup ||
                                   res.nodes_explored % options.heuristic_interval == 0;
        if (relax.status == RelaxStatus::optimal && heuristic_due)
            improved = offer(primal_heuristic(relax, model, options.relax, options.heuristic_rounds,
                                              res.nodes_explored == 1));

        if (detail::tree_binaries_integral(model, relax.values, int_tol)) {
            // Every remaining theta is free to follow the hyperplane sign, so this point is
            // (up to polishing) optimal for the node.
            auto sol = detail::polished_if_feasible(model, relax.values);
            improved = offer(sol) || improved;
            if (!sol) pruned_floor = std::min(pruned_floor, bound);
            log_line(current, improved);
            continue;
        }

        const int var = select_branching(relax.values, model, int_tol);
        const int b = static_cast<int>(std::find(binaries.begin(), binaries.end(), var) - binaries.begin());
        const std::int8_t dive = relax.values[var] >= 0.5 ? 1 : 0;
        detail::Node near{node.fix, bound, next_id++, node.depth + 1};
        detail::Node far{std::move(node.fix), bound, next_id++, node.depth + 1};
        near.fix[b] = dive;
        far.fix[b] = static_cast<std::int8_t>(1 - dive);
        open.push(std::move(far));
        current = std::move(near);
        log_line(current, improved);
    }

    res.wall_time = elapsed();
    res.best_bound = global_bound(current);
    if (current) open.push(std::move(*current));
    if (!res.incumbent) {
        res.status = limit_hit ? SolveStatus::time_limit : SolveStatus::infeasible;
        if (!limit_hit) res.best_bound = detail::kInf;
        res.gap = detail::kInf;
    } else {
        res.gap = relative_gap(incumbent_value(), res.best_bound);
        if (limit_hit)
            res.status = SolveStatus::time_limit;
        else if (gap_hit)
            res.status = res.gap <= 1e-6 ? SolveStatus::optimal : SolveStatus::gap_limit;
        else
            res.status = res.gap <= std::max(budget.gap_target, detail::kPruneTol) ? SolveStatus::optimal
                                                                                    : SolveStatus::gap_limit;
    }
    log_line(std::nullopt, true);
    if (options.log) *options.log << res.summary() << '\n';
    return res;
}

}  // namespace octsvm
