#pragma once

// Builders for the tree program (OCTSVM) and the single-hyperplane relabeling
// SVM (RE-SVM), with big-M constants, McCormick rows for the products
// beta = xi * omega, and the mapping from solutions back to classifiers.

#include "octsvm/core.hpp"
#include "octsvm/feasibility.hpp"
#include "octsvm/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace octsvm {

/// With x in [0,1]^p and |omega_tj|, |omega_t0| <= W, |omega_t'x + omega_t0| <= W (p + 1).
inline MConstants big_m_values(int p, const ModelConfig& config) {
    if (p < 1) throw std::invalid_argument("big_m_values: p must be positive");
    if (!(config.coef_bound > 0.0)) throw std::invalid_argument("big_m_values: coefficient bound must be positive");
    const double W = config.coef_bound;
    MConstants m;
    m.route = W * (p + 1);
    m.error = 1.0 + W * (p + 1);
    m.norm = W * std::sqrt(static_cast<double>(p));
    return m;
}

/// Indices of one product term beta = xi * omega.
struct BilinearIndex {
    int beta;
    int xi;
    int omega;
};

/// Four McCormick rows; exact for binary xi and |omega| <= W.
inline std::array<LinearRow, 4> linearize_bilinear(const BilinearIndex& idx, double W, Family family) {
    std::array<LinearRow, 4> rows;
    // beta <= W xi
    rows[0] = {{{idx.beta, 1.0}, {idx.xi, -W}}, Sense::le, 0.0, family};
    // beta >= -W xi
    rows[1] = {{{idx.beta, 1.0}, {idx.xi, W}}, Sense::ge, 0.0, family};
    // beta <= omega + W (1 - xi)
    rows[2] = {{{idx.beta, 1.0}, {idx.omega, -1.0}, {idx.xi, W}}, Sense::le, W, family};
    // beta >= omega - W (1 - xi)
    rows[3] = {{{idx.beta, 1.0}, {idx.omega, -1.0}, {idx.xi, -W}}, Sense::ge, -W, family};
    return rows;
}

namespace detail {

inline std::string join_name(const std::string& base, std::initializer_list<int> indices) {
    std::string out = base;
    for (int v : indices) out += "_" + std::to_string(v);
    return out;
}

inline void require_data(const Dataset& data) {
    require_trainable(data);
    if (data.dims() < 1) throw std::invalid_argument("dataset has no features");
    if (static_cast<int>(data.labels.size()) != data.size())
        throw std::invalid_argument("dataset label count does not match row count");
}

// Variable blocks shared by both builders: omega, omega0, delta, e, beta, beta0, xi.
inline void add_hyperplane_blocks(MinlpModel& m, int n, int p, int nodes, bool tree_names, double delta_upper) {
    const double W = m.config.coef_bound;
    VariableLayout& L = m.layout;
    L.n = n;
    L.p = p;
    L.nodes = nodes;
    auto name = [&](const std::string& base, int i, int t, int j) {
        // i, t, j are 1-based in names; negative entries are omitted.
        std::string out = base;
        if (i >= 0) out += "_" + std::to_string(i);
        if (tree_names && t >= 0) out += "_" + std::to_string(t);
        if (j >= 0) out += "_" + std::to_string(j);
        return out;
    };

    L.omega = m.num_variables();
    for (int t = 1; t <= nodes; ++t)
        for (int j = 0; j < p; ++j)
            m.add_variable({name("w", -1, t, j + 1), VarKind::continuous, -W, W, Role::omega, -1, t, j});
    L.omega0 = m.num_variables();
    for (int t = 1; t <= nodes; ++t)
        m.add_variable({tree_names ? name("w0", -1, t, -1) : "w0", VarKind::continuous, -W, W, Role::omega0, -1, t, -1});
    L.delta = m.num_variables();
    m.add_variable({tree_names ? "delta" : "epi", VarKind::continuous, 0.0, delta_upper, Role::delta, -1, -1, -1});
    L.error = m.num_variables();
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= nodes; ++t)
            m.add_variable({name("e", i + 1, t, -1), VarKind::continuous, 0.0, m.big_m.error, Role::error, i, t, -1});
    L.beta = m.num_variables();
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= nodes; ++t)
            for (int j = 0; j < p; ++j)
                m.add_variable({name("beta", i + 1, t, j + 1), VarKind::continuous, -W, W, Role::beta, i, t, j});
    L.beta0 = m.num_variables();
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= nodes; ++t)
            m.add_variable({name("beta0", i + 1, t, -1), VarKind::continuous, -W, W, Role::beta0, i, t, -1});
    L.xi = m.num_variables();
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= nodes; ++t)
            m.add_variable({name("xi", i + 1, t, -1), VarKind::binary, 0.0, 1.0, Role::xi, i, t, -1});
}

// y (omega'x + omega0) - 2 y (beta'x + beta0) + e [- M z] >= 1 [- M]
inline LinearRow hinge_row(const MinlpModel& m, int i, int t, double big_m, bool with_z, Family family) {
    const VariableLayout& L = m.layout;
    const double y = m.data.labels[i];
    LinearRow row;
    row.family = family;
    row.sense = Sense::ge;
    for (int j = 0; j < L.p; ++j) {
        const double xj = m.data.features(i, j);
        if (xj != 0.0) {
            row.terms.push_back({L.omega_id(t, j), y * xj});
            row.terms.push_back({L.beta_id(i, t, j), -2.0 * y * xj});
        }
    }
    row.terms.push_back({L.omega0_id(t), y});
    row.terms.push_back({L.beta0_id(i, t), -2.0 * y});
    row.terms.push_back({L.error_id(i, t), 1.0});
    row.rhs = 1.0;
    if (with_z) {
        row.terms.push_back({L.z_id(i, t), -big_m});
        row.rhs = 1.0 - big_m;
    }
    return row;
}

inline void add_bilinear_rows(MinlpModel& m, int i, int t, Family family) {
    const VariableLayout& L = m.layout;
    const double W = m.config.coef_bound;
    for (int j = 0; j <= L.p; ++j) {
        const BilinearIndex idx = j < L.p ? BilinearIndex{L.beta_id(i, t, j), L.xi_id(i, t), L.omega_id(t, j)}
                                          : BilinearIndex{L.beta0_id(i, t), L.xi_id(i, t), L.omega0_id(t)};
        for (LinearRow& r : linearize_bilinear(idx, W, family)) m.rows.push_back(std::move(r));
    }
}

}  // namespace detail

/// The tree program: margin, hinge errors, relabeling, split complexity and routing logic.
inline MinlpModel build_octsvm_model(const Dataset& data, const TreeTopology& topo, const ModelConfig& config) {
    config.validate();
    detail::require_data(data);
    if (topo.depth() != config.depth) throw std::invalid_argument("topology depth does not match the configured depth");

    MinlpModel m;
    m.kind = ModelKind::octsvm;
    m.config = config;
    m.topology = topo;
    m.data = data;
    const int n = data.size(), p = data.dims(), T = topo.node_count();
    m.big_m = big_m_values(p, config);
    const double W = config.coef_bound;
    const MConstants& M = m.big_m;

    detail::add_hyperplane_blocks(m, n, p, T, true, W * std::sqrt(static_cast<double>(p)) / 2.0);
    VariableLayout& L = m.layout;
    L.z = m.num_variables();
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= T; ++t)
            m.add_variable({detail::join_name("z", {i + 1, t}), VarKind::binary, 0.0, 1.0, Role::z, i, t, -1});
    L.theta = m.num_variables();
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= T; ++t)
            m.add_variable({detail::join_name("th", {i + 1, t}), VarKind::binary, 0.0, 1.0, Role::theta, i, t, -1});
    L.d = m.num_variables();
    for (int t = 1; t <= T; ++t)
        m.add_variable({detail::join_name("d", {t}), VarKind::binary, 0.0, 1.0, Role::d, -1, t, -1});

    // Objective: delta + c1 sum e + c2 sum xi + c3 sum d.
    m.objective.push_back({L.delta, 1.0});
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= T; ++t) m.objective.push_back({L.error_id(i, t), config.c1});
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= T; ++t) m.objective.push_back({L.xi_id(i, t), config.c2});
    for (int t = 1; t <= T; ++t) m.objective.push_back({L.d_id(t), config.c3});

    // octsvm_1: 1/2 ||omega_t|| <= delta
    for (int t = 1; t <= T; ++t) {
        ConeRow c;
        c.family = Family::octsvm_1;
        c.head.terms = {{L.delta, 1.0}};
        for (int j = 0; j < p; ++j) c.tail.push_back(AffineExpr{{{L.omega_id(t, j), 0.5}}, 0.0});
        m.cones.push_back(std::move(c));
    }
    // octsvm_2: hinge with relabeling, deactivated when z_it = 0
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= T; ++t) m.rows.push_back(detail::hinge_row(m, i, t, M.error, true, Family::octsvm_2));
    // octsvm_3: beta_itj = xi_it omega_tj, linearized, j = 0..p
    for (int i = 0; i < n; ++i)
        for (int t = 1; t <= T; ++t) detail::add_bilinear_rows(m, i, t, Family::octsvm_3);
    // octsvm_4: ||omega_t|| <= M d_t
    for (int t = 1; t <= T; ++t) {
        ConeRow c;
        c.family = Family::octsvm_4;
        c.head.terms = {{L.d_id(t), M.norm}};
        for (int j = 0; j < p; ++j) c.tail.push_back(AffineExpr{{{L.omega_id(t, j), 1.0}}, 0.0});
        m.cones.push_back(std::move(c));
    }
    // octsvm_5: d_t <= d_p(t)
    for (int t = 2; t <= T; ++t)
        m.rows.push_back({{{L.d_id(t), 1.0}, {L.d_id(topo.parent(t)), -1.0}}, Sense::le, 0.0, Family::octsvm_5});
    // octsvm_6: one node per level
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k <= topo.depth(); ++k) {
            LinearRow r{{}, Sense::eq, 1.0, Family::octsvm_6};
            for (int t : topo.level(k)) r.terms.push_back({L.z_id(i, t), 1.0});
            m.rows.push_back(std::move(r));
        }
    }
    // octsvm_7: z_it <= z_ip(t)
    for (int i = 0; i < n; ++i)
        for (int t = 2; t <= T; ++t)
            m.rows.push_back(
                {{{L.z_id(i, t), 1.0}, {L.z_id(i, topo.parent(t)), -1.0}}, Sense::le, 0.0, Family::octsvm_7});
    // octsvm_8 / octsvm_9: theta_it marks the side of the hyperplane
    for (int i = 0; i < n; ++i) {
        for (int t = 1; t <= T; ++t) {
            std::vector<Term> f;
            for (int j = 0; j < p; ++j)
                if (data.features(i, j) != 0.0) f.push_back({L.omega_id(t, j), data.features(i, j)});
            f.push_back({L.omega0_id(t), 1.0});
            LinearRow ge{f, Sense::ge, -M.route, Family::octsvm_8};
            ge.terms.push_back({L.theta_id(i, t), -M.route});
            LinearRow le{f, Sense::le, 0.0, Family::octsvm_9};
            le.terms.push_back({L.theta_id(i, t), -M.route});
            m.rows.push_back(std::move(ge));
            m.rows.push_back(std::move(le));
        }
    }
    // octsvm_10 / octsvm_11: left child on theta = 0, right child on theta = 1
    for (int i = 0; i < n; ++i) {
        for (int t : topo.left_branch_nodes()) {
            const int pt = topo.parent(t);
            m.rows.push_back({{{L.z_id(i, pt), 1.0}, {L.z_id(i, t), -1.0}, {L.theta_id(i, pt), -1.0}},
                              Sense::le,
                              0.0,
                              Family::octsvm_10});
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int t : topo.right_branch_nodes()) {
            const int pt = topo.parent(t);
            m.rows.push_back({{{L.z_id(i, pt), 1.0}, {L.z_id(i, t), -1.0}, {L.theta_id(i, pt), 1.0}},
                              Sense::le,
                              1.0,
                              Family::octsvm_11});
        }
    }
    if (config.symmetry_cut)
        m.rows.push_back({{{L.omega_id(1, 0), 1.0}}, Sense::ge, 0.0, Family::symmetry});
    m.validate();
    return m;
}

/// Single-hyperplane SVM with relabeling: min 1/2 ||omega||^2 + c1 sum e + c2 sum xi.
inline MinlpModel build_resvm_model(const Dataset& data, double c1, double c2, double coef_bound = 10.0) {
    detail::require_data(data);
    ModelConfig config;
    config.c1 = c1;
    config.c2 = c2;
    config.c3 = 0.0;
    config.depth = 0;
    config.coef_bound = coef_bound;
    config.validate();

    MinlpModel m;
    m.kind = ModelKind::resvm;
    m.config = config;
    m.topology = TreeTopology(0);
    m.data = data;
    const int n = data.size(), p = data.dims();
    m.big_m = big_m_values(p, config);
    const double W = coef_bound;
    detail::add_hyperplane_blocks(m, n, p, 1, false, W * W * p / 2.0);
    VariableLayout& L = m.layout;
    L.z = L.theta = L.d = m.num_variables();

    m.objective.push_back({L.delta, 1.0});
    for (int i = 0; i < n; ++i) m.objective.push_back({L.error_id(i, 1), c1});
    for (int i = 0; i < n; ++i) m.objective.push_back({L.xi_id(i, 1), c2});

    for (int i = 0; i < n; ++i) m.rows.push_back(detail::hinge_row(m, i, 1, 0.0, false, Family::resvm_hinge));
    for (int i = 0; i < n; ++i) detail::add_bilinear_rows(m, i, 1, Family::resvm_bilinear);

    // 1/2 ||omega||^2 <= s  <=>  ||(omega, s - 1/2)|| <= s + 1/2
    ConeRow epi;
    epi.family = Family::resvm_epigraph;
    epi.head = AffineExpr{{{L.delta, 1.0}}, 0.5};
    for (int j = 0; j < p; ++j) epi.tail.push_back(AffineExpr{{{L.omega_id(1, j), 1.0}}, 0.0});
    epi.tail.push_back(AffineExpr{{{L.delta, 1.0}}, -0.5});
    m.cones.push_back(std::move(epi));
    m.validate();
    return m;
}

/// Copy of `model` with the given binaries fixed and every other binary relaxed to [0,1].
inline MinlpModel continuous_subproblem(const MinlpModel& model, const std::map<int, int>& fixing) {
    MinlpModel sub = model;
    for (const auto& [id, value] : fixing) {
        if (id < 0 || id >= model.num_variables() || model.variables[id].kind != VarKind::binary)
            throw std::invalid_argument("continuous_subproblem: fixing refers to a non-binary variable");
        if (value != 0 && value != 1) throw std::invalid_argument("continuous_subproblem: fixed value must be 0 or 1");
        sub.variables[id].lower = sub.variables[id].upper = value;
    }
    for (Variable& v : sub.variables) v.kind = VarKind::continuous;
    return sub;
}

/// Recomputes the objective from the role-tagged values, without the model's objective vector.
inline double objective_of(const MinlpModel& model, const Solution& sol) {
    if (static_cast<int>(sol.values.size()) != model.num_variables())
        throw std::invalid_argument("objective_of: solution does not cover all variables");
    const ModelConfig& cfg = model.config;
    double margin = 0.0, errors = 0.0, relabels = 0.0, splits = 0.0;
    double omega_sq = 0.0;
    for (int k = 0; k < model.num_variables(); ++k) {
        const double v = sol.values[k];
        switch (model.variables[k].role) {
            case Role::delta: margin += v; break;
            case Role::error: errors += v; break;
            case Role::xi: relabels += v; break;
            case Role::d: splits += v; break;
            case Role::omega: omega_sq += v * v; break;
            default: break;
        }
    }
    if (model.kind == ModelKind::resvm) margin = 0.5 * omega_sq;
    return margin + cfg.c1 * errors + cfg.c2 * relabels + cfg.c3 * splits;
}

/// Same four-term sum computed from explicit totals.
inline double objective_of(double delta, double sum_e, double sum_xi, double sum_d, const ModelConfig& cfg) {
    return delta + cfg.c1 * sum_e + cfg.c2 * sum_xi + cfg.c3 * sum_d;
}

/// Cleans a point whose binaries are (nearly) integral: rounds binaries, clips to bounds,
/// restores beta = xi * omega exactly and sets the dependent continuous variables
/// (e, delta, routing sides) to their smallest consistent values.
inline Solution polish(const MinlpModel& model, std::vector<double> x) {
    const VariableLayout& L = model.layout;
    const Dataset& data = model.data;
    for (int k = 0; k < model.num_variables(); ++k) {
        const Variable& v = model.variables[k];
        if (v.kind == VarKind::binary) x[k] = std::round(x[k]);
        x[k] = std::clamp(x[k], v.lower, v.upper);
    }
    const bool tree = model.kind == ModelKind::octsvm;
    if (tree) {
        for (int t = 1; t <= L.nodes; ++t)
            if (x[L.d_id(t)] < 0.5)
                for (int j = 0; j < L.p; ++j) x[L.omega_id(t, j)] = 0.0;
    }
    auto node_value = [&](int i, int t) {
        double f = x[L.omega0_id(t)];
        for (int j = 0; j < L.p; ++j) f += x[L.omega_id(t, j)] * data.features(i, j);
        return f;
    };
    for (int i = 0; i < L.n; ++i) {
        for (int t = 1; t <= L.nodes; ++t) {
            const double xi = x[L.xi_id(i, t)];
            double g = 0.0;
            for (int j = 0; j < L.p; ++j) {
                const double b = xi * x[L.omega_id(t, j)];
                x[L.beta_id(i, t, j)] = b;
                g += b * data.features(i, j);
            }
            x[L.beta0_id(i, t)] = xi * x[L.omega0_id(t)];
            g += x[L.beta0_id(i, t)];
            const double y = data.labels[i];
            const double f = node_value(i, t);
            double slack = 1.0 - y * f + 2.0 * y * g;
            if (tree) slack -= model.big_m.error * (1.0 - x[L.z_id(i, t)]);
            x[L.error_id(i, t)] = std::clamp(slack, 0.0, model.big_m.error);
            if (tree) {
                const TreeTopology& topo = model.topology;
                if (topo.has_children(t) && x[L.z_id(i, t)] > 0.5)
                    x[L.theta_id(i, t)] = x[L.z_id(i, topo.right_child(t))] > 0.5 ? 1.0 : 0.0;
                else
                    x[L.theta_id(i, t)] = f >= 0.0 ? 1.0 : 0.0;
            }
        }
    }
    double margin = 0.0;
    for (int t = 1; t <= L.nodes; ++t) {
        double sq = 0.0;
        for (int j = 0; j < L.p; ++j) sq += x[L.omega_id(t, j)] * x[L.omega_id(t, j)];
        margin = tree ? std::max(margin, 0.5 * std::sqrt(sq)) : 0.5 * sq;
    }
    const Variable& dv = model.variables[L.delta];
    x[L.delta] = std::clamp(margin, dv.lower, std::max(dv.upper, margin));
    Solution sol{std::move(x), 0.0};
    sol.objective = model.evaluate_objective(sol.values);
    return sol;
}

/// Classifier from an integral, feasible solution. Inactive nodes get zero hyperplanes.
inline TreeClassifier extract_tree(const MinlpModel& model, const Solution& sol) {
    const ModelConfig& cfg = model.config;
    const ViolationReport report = check_feasible(sol, model, std::max(cfg.feasibility_tol, cfg.integrality_tol));
    if (report["integrality"] > cfg.integrality_tol) throw std::invalid_argument("extract_tree: solution is not integral");
    if (!report.passes()) throw std::invalid_argument("extract_tree: infeasible solution (" + report.describe() + ")");

    const VariableLayout& L = model.layout;
    TreeClassifier tree;
    tree.topology = model.topology;
    tree.fallback_label = majority_label(model.data.labels);
    for (int t = 1; t <= L.nodes; ++t) {
        const bool active = model.kind == ModelKind::resvm || sol.values[L.d_id(t)] > 0.5;
        Hyperplane h{Vector::Zero(L.p), 0.0};
        if (active) {
            for (int j = 0; j < L.p; ++j) h.weights[j] = sol.values[L.omega_id(t, j)];
            h.intercept = sol.values[L.omega0_id(t)];
        }
        tree.hyperplanes.push_back(std::move(h));
        tree.split_active.push_back(active);
    }
    tree.validate();
    return tree;
}

inline TreeClassifier extract_tree(const MinlpModel& model, const Solution& sol, const TreeTopology& topo,
                                   const Dataset& data) {
    if (!(topo == model.topology)) throw std::invalid_argument("extract_tree: topology mismatch");
    if (data.size() != model.data.size() || data.dims() != model.data.dims())
        throw std::invalid_argument("extract_tree: dataset mismatch");
    return extract_tree(model, sol);
}

namespace detail {

inline std::string lp_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline void lp_linear(std::ostream& os, const std::vector<Term>& terms, const MinlpModel& m) {
    bool first = true;
    for (const Term& t : terms) {
        if (t.coef == 0.0) continue;
        os << (t.coef < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
        const double a = std::abs(t.coef);
        if (a != 1.0) os << lp_number(a) << ' ';
        os << m.variables[t.var].name;
        first = false;
    }
    if (first) os << "0 " << m.variables.front().name;
}

}  // namespace detail

/// CPLEX LP text. Cone rows are written as ||tail||^2 - head^2 <= 0 with head >= 0 implied by bounds.
inline void write_lp(const MinlpModel& m, std::ostream& os) {
    os << "\\ " << (m.kind == ModelKind::octsvm ? "OCTSVM" : "RE-SVM") << " n=" << m.layout.n << " p=" << m.layout.p
       << " depth=" << m.topology.depth() << "\n";
    os << "Minimize\n obj: ";
    detail::lp_linear(os, m.objective, m);
    if (m.objective_constant != 0.0) os << " + " << detail::lp_number(m.objective_constant) << " constant";
    os << "\nSubject To\n";
    std::map<Family, int> counter;
    for (const LinearRow& r : m.rows) {
        os << ' ' << to_string(r.family) << '_' << ++counter[r.family] << ": ";
        detail::lp_linear(os, r.terms, m);
        os << (r.sense == Sense::le ? " <= " : r.sense == Sense::ge ? " >= " : " = ") << detail::lp_number(r.rhs) << "\n";
    }
    for (const ConeRow& c : m.cones) {
        // Expand sum_k (a_k'x + b_k)^2 - (h'x + h0)^2 <= 0.
        std::map<std::pair<int, int>, double> quad;
        std::map<int, double> lin;
        double constant = 0.0;
        auto add_square = [&](const AffineExpr& e, double sign) {
            for (const Term& a : e.terms) {
                for (const Term& b : e.terms) {
                    const auto key = std::minmax(a.var, b.var);
                    quad[{key.first, key.second}] += sign * a.coef * b.coef;
                }
                lin[a.var] += sign * 2.0 * a.coef * e.constant;
            }
            constant += sign * e.constant * e.constant;
        };
        for (const AffineExpr& e : c.tail) add_square(e, 1.0);
        add_square(c.head, -1.0);
        os << ' ' << to_string(c.family) << '_' << ++counter[c.family] << ": ";
        bool first = true;
        for (const auto& [v, a] : lin) {
            if (a == 0.0) continue;
            os << (a < 0 ? (first ? "-" : " - ") : (first ? "" : " + ")) << detail::lp_number(std::abs(a)) << ' '
               << m.variables[v].name;
            first = false;
        }
        os << (first ? "[ " : " + [ ");
        bool qfirst = true;
        for (const auto& [key, a] : quad) {
            if (a == 0.0) continue;
            os << (a < 0 ? (qfirst ? "-" : " - ") : (qfirst ? "" : " + ")) << detail::lp_number(std::abs(a)) << ' ';
            if (key.first == key.second)
                os << m.variables[key.first].name << " ^ 2";
            else
                os << m.variables[key.first].name << " * " << m.variables[key.second].name;
            qfirst = false;
        }
        os << " ] <= " << detail::lp_number(-constant) << "\n";
    }
    os << "Bounds\n";
    for (const Variable& v : m.variables) {
        if (v.kind == VarKind::binary) continue;
        os << ' ' << detail::lp_number(v.lower) << " <= " << v.name << " <= " << detail::lp_number(v.upper) << "\n";
    }
    os << "Binaries\n";
    for (const Variable& v : m.variables)
        if (v.kind == VarKind::binary) os << ' ' << v.name << "\n";
    os << "End\n";
}

inline std::string to_lp_string(const MinlpModel& m) {
    std::ostringstream os;
    write_lp(m, os);
    return os.str();
}

}  // namespace octsvm
