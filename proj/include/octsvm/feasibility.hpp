#pragma once

// Constraint audit of a full assignment against every row family of a model,
// plus the un-linearized product identity beta = xi * omega.

#include "octsvm/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>

namespace octsvm {

struct ViolationReport {
    std::map<std::string, double> by_family;  // max violation per family
    double max_violation = 0.0;
    double tolerance = 1e-6;

    bool passes() const { return max_violation <= tolerance; }

    double operator[](const std::string& family) const {
        auto it = by_family.find(family);
        return it == by_family.end() ? 0.0 : it->second;
    }

    void record(const std::string& family, double v) {
        double& slot = by_family[family];
        slot = std::max(slot, v);
        max_violation = std::max(max_violation, v);
    }

    std::string describe() const {
        std::ostringstream os;
        for (const auto& [name, v] : by_family) os << name << '=' << v << ' ';
        return os.str();
    }
};

/// Name of the report entry holding the product identity check.
inline constexpr const char* kBilinearIdentity = "bilinear_identity";

inline ViolationReport check_feasible(const Solution& sol, const MinlpModel& model, double tol = 1e-6) {
    ViolationReport report;
    report.tolerance = tol;
    if (static_cast<int>(sol.values.size()) != model.num_variables())
        throw std::invalid_argument("check_feasible: solution does not cover all variables");
    const std::vector<double>& x = sol.values;

    for (const Family f : kAllFamilies) {
        if (model.count_rows(f) > 0) report.by_family[to_string(f)] = 0.0;
    }
    for (const LinearRow& r : model.rows) report.record(to_string(r.family), r.violation(x));
    for (const ConeRow& c : model.cones) report.record(to_string(c.family), c.violation(x));

    report.by_family["bounds"] = 0.0;
    report.by_family["integrality"] = 0.0;
    for (int k = 0; k < model.num_variables(); ++k) {
        const Variable& v = model.variables[k];
        report.record("bounds", std::max({0.0, v.lower - x[k], x[k] - v.upper}));
        if (v.kind == VarKind::binary) report.record("integrality", std::abs(x[k] - std::round(x[k])));
    }

    // beta_itj = xi_it * omega_tj for j = 0..p (j = 0 is the intercept).
    const VariableLayout& L = model.layout;
    report.by_family[kBilinearIdentity] = 0.0;
    for (int i = 0; i < L.n; ++i) {
        for (int t = 1; t <= L.nodes; ++t) {
            const double xi = x[L.xi_id(i, t)];
            for (int j = 0; j < L.p; ++j)
                report.record(kBilinearIdentity, std::abs(x[L.beta_id(i, t, j)] - xi * x[L.omega_id(t, j)]));
            report.record(kBilinearIdentity, std::abs(x[L.beta0_id(i, t)] - xi * x[L.omega0_id(t)]));
        }
    }
    return report;
}

}  // namespace octsvm
