#pragma once

// Abstract mixed-integer conic model: typed variables, tagged linear rows,
// second-order-cone rows and a linear objective.

#include "octsvm/core.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace octsvm {

enum class VarKind { continuous, binary };

enum class Role { omega, omega0, delta, error, beta, beta0, xi, z, theta, d };

inline const char* to_string(Role role) {
    switch (role) {
        case Role::omega: return "omega";
        case Role::omega0: return "omega0";
        case Role::delta: return "delta";
        case Role::error: return "e";
        case Role::beta: return "beta";
        case Role::beta0: return "beta0";
        case Role::xi: return "xi";
        case Role::z: return "z";
        case Role::theta: return "theta";
        case Role::d: return "d";
    }
    return "?";
}

/// Constraint families. octsvm_1..11 follow the tree model; resvm_* belong to the single-hyperplane model.
enum class Family {
    octsvm_1,
    octsvm_2,
    octsvm_3,
    octsvm_4,
    octsvm_5,
    octsvm_6,
    octsvm_7,
    octsvm_8,
    octsvm_9,
    octsvm_10,
    octsvm_11,
    resvm_hinge,
    resvm_bilinear,
    resvm_epigraph,
    symmetry,
};

inline constexpr std::array<Family, 15> kAllFamilies = {
    Family::octsvm_1,  Family::octsvm_2,    Family::octsvm_3,       Family::octsvm_4,       Family::octsvm_5,
    Family::octsvm_6,  Family::octsvm_7,    Family::octsvm_8,       Family::octsvm_9,       Family::octsvm_10,
    Family::octsvm_11, Family::resvm_hinge, Family::resvm_bilinear, Family::resvm_epigraph, Family::symmetry,
};

inline const char* to_string(Family f) {
    switch (f) {
        case Family::octsvm_1: return "octsvm_1";
        case Family::octsvm_2: return "octsvm_2";
        case Family::octsvm_3: return "octsvm_3";
        case Family::octsvm_4: return "octsvm_4";
        case Family::octsvm_5: return "octsvm_5";
        case Family::octsvm_6: return "octsvm_6";
        case Family::octsvm_7: return "octsvm_7";
        case Family::octsvm_8: return "octsvm_8";
        case Family::octsvm_9: return "octsvm_9";
        case Family::octsvm_10: return "octsvm_10";
        case Family::octsvm_11: return "octsvm_11";
        case Family::resvm_hinge: return "resvm_hinge";
        case Family::resvm_bilinear: return "resvm_bilinear";
        case Family::resvm_epigraph: return "resvm_epigraph";
        case Family::symmetry: return "symmetry";
    }
    return "?";
}

enum class Sense { le, ge, eq };

struct Variable {
    std::string name;
    VarKind kind = VarKind::continuous;
    double lower = 0.0;
    double upper = 0.0;
    Role role = Role::omega;
    int obs = -1;   // observation index i (0-based), -1 if none
    int node = -1;  // tree node t (1-based), -1 if none
    int coord = -1; // feature index j (0-based), -1 if none
};

struct Term {
    int var;
    double coef;
};

/// Sum of terms plus a constant.
struct AffineExpr {
    std::vector<Term> terms;
    double constant = 0.0;

    double evaluate(const std::vector<double>& x) const {
        double v = constant;
        for (const Term& t : terms) v += t.coef * x[t.var];
        return v;
    }
};

struct LinearRow {
    std::vector<Term> terms;
    Sense sense = Sense::le;
    double rhs = 0.0;
    Family family = Family::octsvm_2;

    double activity(const std::vector<double>& x) const {
        double v = 0.0;
        for (const Term& t : terms) v += t.coef * x[t.var];
        return v;
    }

    double violation(const std::vector<double>& x) const {
        const double a = activity(x);
        switch (sense) {
            case Sense::le: return std::max(0.0, a - rhs);
            case Sense::ge: return std::max(0.0, rhs - a);
            case Sense::eq: return std::abs(a - rhs);
        }
        return 0.0;
    }
};

/// ||tail|| <= head.
struct ConeRow {
    AffineExpr head;
    std::vector<AffineExpr> tail;
    Family family = Family::octsvm_1;

    double violation(const std::vector<double>& x) const {
        double sq = 0.0;
        for (const AffineExpr& e : tail) {
            const double v = e.evaluate(x);
            sq += v * v;
        }
        return std::max(0.0, std::sqrt(sq) - head.evaluate(x));
    }
};

enum class ModelKind { octsvm, resvm };

/// Cost and bound parameters of the tree program.
struct ModelConfig {
    double c1 = 1.0;
    double c2 = 0.1;
    double c3 = 0.01;
    int depth = 1;
    double coef_bound = 10.0;  // W
    double feasibility_tol = 1e-6;
    double integrality_tol = 1e-6;
    bool symmetry_cut = false;

    void validate() const {
        if (!(c1 > 0.0)) throw std::invalid_argument("c1 must be positive");
        if (!(c2 >= 0.0)) throw std::invalid_argument("c2 must be non-negative");
        if (!(c3 >= 0.0)) throw std::invalid_argument("c3 must be non-negative");
        if (depth < 0) throw std::invalid_argument("depth must be non-negative");
        if (!(coef_bound > 0.0)) throw std::invalid_argument("coefficient bound must be positive");
        if (!(feasibility_tol > 0.0 && feasibility_tol < 1.0) || !(integrality_tol > 0.0 && integrality_tol < 1.0))
            throw std::invalid_argument("tolerances must lie in (0,1)");
    }
};

struct MConstants {
    double error = 0.0;  // hinge rows
    double route = 0.0;  // routing rows
    double norm = 0.0;   // ||omega_t|| <= M d_t
};

/// Index arithmetic for the variable blocks of a built model. Unused blocks have size zero.
struct VariableLayout {
    int n = 0, p = 0, nodes = 0;
    int omega = 0, omega0 = 0, delta = 0, error = 0, beta = 0, beta0 = 0, xi = 0, z = 0, theta = 0, d = 0;

    int omega_id(int t, int j) const { return omega + (t - 1) * p + j; }
    int omega0_id(int t) const { return omega0 + (t - 1); }
    int error_id(int i, int t) const { return error + i * nodes + (t - 1); }
    int beta_id(int i, int t, int j) const { return beta + (i * nodes + (t - 1)) * p + j; }
    int beta0_id(int i, int t) const { return beta0 + i * nodes + (t - 1); }
    int xi_id(int i, int t) const { return xi + i * nodes + (t - 1); }
    int z_id(int i, int t) const { return z + i * nodes + (t - 1); }
    int theta_id(int i, int t) const { return theta + i * nodes + (t - 1); }
    int d_id(int t) const { return d + (t - 1); }
};

struct MinlpModel {
    ModelKind kind = ModelKind::octsvm;
    std::vector<Variable> variables;
    std::vector<LinearRow> rows;
    std::vector<ConeRow> cones;
    std::vector<Term> objective;
    double objective_constant = 0.0;

    // Problem data the model was built from; used by structure-aware routines.
    ModelConfig config;
    MConstants big_m;
    TreeTopology topology;
    Dataset data;
    VariableLayout layout;

    int num_variables() const { return static_cast<int>(variables.size()); }

    int add_variable(Variable v) {
        if (v.kind == VarKind::binary) {
            v.lower = std::max(v.lower, 0.0);
            v.upper = std::min(v.upper, 1.0);
        }
        variables.push_back(std::move(v));
        return num_variables() - 1;
    }

    int count(VarKind kind) const {
        int c = 0;
        for (const Variable& v : variables) c += v.kind == kind ? 1 : 0;
        return c;
    }

    int count_rows(Family f) const {
        int c = 0;
        for (const LinearRow& r : rows) c += r.family == f ? 1 : 0;
        for (const ConeRow& r : cones) c += r.family == f ? 1 : 0;
        return c;
    }

    std::vector<int> binaries() const {
        std::vector<int> ids;
        for (int k = 0; k < num_variables(); ++k)
            if (variables[k].kind == VarKind::binary) ids.push_back(k);
        return ids;
    }

    double evaluate_objective(const std::vector<double>& x) const {
        double v = objective_constant;
        for (const Term& t : objective) v += t.coef * x[t.var];
        return v;
    }

    /// Throws if a row references a missing variable or a binary has non-[0,1] bounds.
    void validate() const {
        const int nv = num_variables();
        auto check_terms = [&](const std::vector<Term>& terms) {
            for (const Term& t : terms)
                if (t.var < 0 || t.var >= nv) throw std::logic_error("row references unknown variable");
        };
        for (const LinearRow& r : rows) check_terms(r.terms);
        for (const ConeRow& c : cones) {
            check_terms(c.head.terms);
            for (const AffineExpr& e : c.tail) check_terms(e.terms);
        }
        check_terms(objective);
        for (const Variable& v : variables) {
            if (v.kind == VarKind::binary && (v.lower < 0.0 || v.upper > 1.0))
                throw std::logic_error("binary variable " + v.name + " has bounds outside [0,1]");
            if (!(v.lower <= v.upper)) throw std::logic_error("variable " + v.name + " has empty bounds");
        }
    }
};

/// A point assigning a value to every variable of a model.
struct Solution {
    std::vector<double> values;
    double objective = 0.0;
};

}  // namespace octsvm
