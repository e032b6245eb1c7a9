#pragma once

// Continuous relaxation of a MinlpModel under (node) variable bounds: a light
// presolve turns the model into a cone program, the interior point solver
// handles it, and the answer is mapped back to model variables.
//
// Presolve steps, repeated to a fixpoint:
//   * substitute fixed variables;
//   * drop rows implied by the bounds, detect rows the bounds make impossible;
//   * turn single-variable rows into bounds;
//   * merge parallel rows (a pair x - y <= 0, x - y >= 0 becomes x - y = 0);
//   * a cone whose head is the constant 0 forces every tail entry to 0;
//   * drop cones the bounds already imply.
// Without the last three, fixed binaries leave cones and slabs with empty
// interior, which interior point methods handle poorly.

#include "octsvm/model.hpp"
#include "octsvm/socp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

namespace octsvm {

enum class RelaxStatus { optimal, infeasible, numerical_failure };

inline const char* to_string(RelaxStatus s) {
    switch (s) {
        case RelaxStatus::optimal: return "optimal";
        case RelaxStatus::infeasible: return "infeasible";
        case RelaxStatus::numerical_failure: return "numerical-failure";
    }
    return "?";
}

struct RelaxSolution {
    std::vector<double> values;
    double objective = std::numeric_limits<double>::infinity();
    double bound = -std::numeric_limits<double>::infinity();  // valid lower bound (dual side)
    RelaxStatus status = RelaxStatus::numerical_failure;
    double max_violation = 0.0;
    int iterations = 0;
};

struct RelaxOptions {
    socp::Settings socp;
    double feasibility_tol = 1e-7;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RangeRow {
    std::vector<Term> terms;
    double lo = -kInf;
    double up = kInf;
    bool active = true;
};

struct PresolvedCone {
    AffineExpr head;
    std::vector<AffineExpr> tail;
    bool active = true;
};

class Presolver {
public:
    Presolver(const MinlpModel& model, std::vector<double> lower, std::vector<double> upper)
        : model_(model), lo_(std::move(lower)), up_(std::move(upper)) {
        for (const LinearRow& r : model.rows) {
            RangeRow w;
            w.terms = r.terms;
            if (r.sense != Sense::ge) w.up = r.rhs;
            if (r.sense != Sense::le) w.lo = r.rhs;
            rows_.push_back(std::move(w));
        }
        for (const ConeRow& c : model.cones) cones_.push_back({c.head, c.tail, true});
    }

    /// False if the bounds and rows are contradictory.
    bool run() {
        for (std::size_t k = 0; k < lo_.size(); ++k)
            if (lo_[k] > up_[k] + tol_) return false;
        for (int pass = 0; pass < 50; ++pass) {
            changed_ = false;
            for (RangeRow& r : rows_)
                if (r.active && !reduce_row(r)) return false;
            if (!merge_parallel()) return false;
            for (PresolvedCone& c : cones_)
                if (c.active && !reduce_cone(c)) return false;
            if (!changed_) break;
        }
        return true;
    }

    bool is_fixed(int k) const { return up_[k] - lo_[k] <= 1e-10; }
    double fixed_value(int k) const { return 0.5 * (lo_[k] + up_[k]); }
    const std::vector<double>& lower() const { return lo_; }
    const std::vector<double>& upper() const { return up_; }
    const std::vector<RangeRow>& rows() const { return rows_; }
    const std::vector<PresolvedCone>& cones() const { return cones_; }

private:
    // Removes fixed variables from a term list; returns the constant they contribute.
    double strip_fixed(std::vector<Term>& terms) const {
        double c = 0.0;
        std::vector<Term> kept;
        kept.reserve(terms.size());
        for (const Term& t : terms) {
            if (t.coef == 0.0) continue;
            if (is_fixed(t.var))
                c += t.coef * fixed_value(t.var);
            else
                kept.push_back(t);
        }
        terms.swap(kept);
        return c;
    }

    std::pair<double, double> activity_range(const std::vector<Term>& terms) const {
        double amin = 0.0, amax = 0.0;
        for (const Term& t : terms) {
            if (t.coef > 0) {
                amin += t.coef * lo_[t.var];
                amax += t.coef * up_[t.var];
            } else {
                amin += t.coef * up_[t.var];
                amax += t.coef * lo_[t.var];
            }
        }
        return {amin, amax};
    }

    void set_bounds(int k, double lo, double up) {
        if (lo > lo_[k] + 1e-12) {
            lo_[k] = lo;
            changed_ = true;
        }
        if (up < up_[k] - 1e-12) {
            up_[k] = up;
            changed_ = true;
        }
        if (lo_[k] > up_[k]) {
            // Within tolerance (checked by the caller): collapse to a point.
            const double mid = 0.5 * (lo_[k] + up_[k]);
            lo_[k] = up_[k] = mid;
        }
    }

    bool reduce_row(RangeRow& r) {
        const double c = strip_fixed(r.terms);
        r.lo -= c;
        r.up -= c;
        if (r.lo > r.up + tol_) return false;
        if (r.terms.empty()) {
            if (r.lo > tol_ || r.up < -tol_) return false;
            r.active = false;
            changed_ = true;
            return true;
        }
        const auto [amin, amax] = activity_range(r.terms);
        if (amin > r.up + tol_ || amax < r.lo - tol_) return false;
        if (amin >= r.lo - 1e-12 && amax <= r.up + 1e-12) {
            r.active = false;
            changed_ = true;
            return true;
        }
        if (r.terms.size() == 1) {
            const Term t = r.terms.front();
            double lo = r.lo / t.coef, up = r.up / t.coef;
            if (t.coef < 0) std::swap(lo, up);
            if (lo > up_[t.var] + tol_ || up < lo_[t.var] - tol_) return false;
            set_bounds(t.var, std::max(lo, lo_[t.var]), std::min(up, up_[t.var]));
            r.active = false;
            changed_ = true;
        }
        return true;
    }

    bool merge_parallel() {
        std::map<std::vector<std::pair<int, double>>, int> seen;
        for (int k = 0; k < static_cast<int>(rows_.size()); ++k) {
            RangeRow& r = rows_[k];
            if (!r.active) continue;
            std::sort(r.terms.begin(), r.terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
            const double s = r.terms.front().coef;
            std::vector<std::pair<int, double>> key;
            key.reserve(r.terms.size());
            for (const Term& t : r.terms) key.emplace_back(t.var, t.coef / s);
            auto [it, inserted] = seen.emplace(std::move(key), k);
            if (inserted) continue;
            RangeRow& base = rows_[it->second];
            const double s0 = base.terms.front().coef;
            // Express r in base's scaling: (a/s) x in [lo/s, up/s], times s0.
            const double f = s0 / s;
            double lo = r.lo * f, up = r.up * f;
            if (f < 0) std::swap(lo, up);
            base.lo = std::max(base.lo, lo);
            base.up = std::min(base.up, up);
            if (base.lo > base.up + tol_) return false;
            if (base.lo > base.up) base.lo = base.up = 0.5 * (base.lo + base.up);
            r.active = false;
            changed_ = true;
        }
        for (RangeRow& r : rows_) {
            if (r.active && r.up - r.lo <= 1e-10 && r.up != r.lo) r.lo = r.up = 0.5 * (r.lo + r.up);
        }
        return true;
    }

    bool reduce_cone(PresolvedCone& c) {
        c.head.constant += strip_fixed(c.head.terms);
        std::vector<AffineExpr> tail;
        for (AffineExpr& e : c.tail) {
            e.constant += strip_fixed(e.terms);
            if (e.terms.empty() && std::abs(e.constant) <= 1e-15) continue;
            tail.push_back(std::move(e));
        }
        c.tail.swap(tail);
        if (c.head.terms.empty()) {
            double const_norm = 0.0;
            for (const AffineExpr& e : c.tail)
                if (e.terms.empty()) const_norm += e.constant * e.constant;
            if (c.head.constant < -tol_ || std::sqrt(const_norm) > c.head.constant + tol_) return false;
            if (c.head.constant <= 1e-12) {
                for (const AffineExpr& e : c.tail) {
                    if (e.terms.empty()) continue;
                    RangeRow r;
                    r.terms = e.terms;
                    r.lo = r.up = -e.constant;
                    rows_.push_back(std::move(r));
                }
                c.active = false;
                changed_ = true;
                return true;
            }
        }
        if (c.tail.empty()) {
            RangeRow r;
            r.terms = c.head.terms;
            r.lo = -c.head.constant;
            rows_.push_back(std::move(r));
            c.active = false;
            changed_ = true;
            return true;
        }
        // Redundant when the largest tail norm over the box is below the smallest head value.
        double sq = 0.0;
        for (const AffineExpr& e : c.tail) {
            auto [amin, amax] = activity_range(e.terms);
            const double m = std::max(std::abs(amin + e.constant), std::abs(amax + e.constant));
            sq += m * m;
        }
        const double hmin = activity_range(c.head.terms).first + c.head.constant;
        if (std::sqrt(sq) <= hmin) {
            c.active = false;
            changed_ = true;
        }
        return true;
    }

    const MinlpModel& model_;
    std::vector<double> lo_, up_;
    std::vector<RangeRow> rows_;
    std::vector<PresolvedCone> cones_;
    bool changed_ = false;
    double tol_ = 1e-9;
};

inline double max_violation(const MinlpModel& model, const std::vector<double>& x, const std::vector<double>& lower,
                            const std::vector<double>& upper) {
    double v = 0.0;
    for (const LinearRow& r : model.rows) v = std::max(v, r.violation(x));
    for (const ConeRow& c : model.cones) v = std::max(v, c.violation(x));
    for (std::size_t k = 0; k < x.size(); ++k) v = std::max({v, lower[k] - x[k], x[k] - upper[k]});
    return v;
}

}  // namespace detail

/// Relaxation with explicit variable bounds (binaries treated as continuous).
inline RelaxSolution solve_relaxation(const MinlpModel& model, const std::vector<double>& lower,
                                      const std::vector<double>& upper, const RelaxOptions& options = {}) {
    const int nv = model.num_variables();
    if (static_cast<int>(lower.size()) != nv || static_cast<int>(upper.size()) != nv)
        throw std::invalid_argument("solve_relaxation: bound vectors do not match the model");
    for (int k = 0; k < nv; ++k)
        if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]))
            throw std::invalid_argument("solve_relaxation: variable " + model.variables[k].name + " has infinite bounds");

    RelaxSolution out;
    detail::Presolver pre(model, lower, upper);
    if (!pre.run()) {
        out.status = RelaxStatus::infeasible;
        return out;
    }

    // Columns for the variables left free.
    std::vector<int> column(nv, -1);
    int n = 0;
    for (int k = 0; k < nv; ++k)
        if (!pre.is_fixed(k)) column[k] = n++;

    std::vector<double> x(nv);
    for (int k = 0; k < nv; ++k) x[k] = pre.is_fixed(k) ? pre.fixed_value(k) : 0.0;

    if (n > 0) {
        socp::ConeProgram prog;
        prog.c = Vector::Zero(n);
        for (const Term& t : model.objective)
            if (column[t.var] >= 0) prog.c[column[t.var]] += t.coef;

        std::vector<Eigen::Triplet<double>> a_trip, g_trip;
        std::vector<double> b, h;
        auto add_g = [&](const std::vector<Term>& terms, double sign, double rhs) {
            const int r = static_cast<int>(h.size());
            for (const Term& t : terms) g_trip.emplace_back(r, column[t.var], sign * t.coef);
            h.push_back(rhs);
        };
        const auto& lo = pre.lower();
        const auto& up = pre.upper();
        for (int k = 0; k < nv; ++k) {
            if (column[k] < 0) continue;
            add_g({{k, 1.0}}, -1.0, -lo[k]);
            add_g({{k, 1.0}}, 1.0, up[k]);
        }
        for (const detail::RangeRow& r : pre.rows()) {
            if (!r.active) continue;
            if (r.lo == r.up) {
                const int row = static_cast<int>(b.size());
                for (const Term& t : r.terms) a_trip.emplace_back(row, column[t.var], t.coef);
                b.push_back(r.lo);
                continue;
            }
            if (std::isfinite(r.up)) add_g(r.terms, 1.0, r.up);
            if (std::isfinite(r.lo)) add_g(r.terms, -1.0, -r.lo);
        }
        prog.orthant = static_cast<int>(h.size());
        for (const detail::PresolvedCone& c : pre.cones()) {
            if (!c.active) continue;
            add_g(c.head.terms, -1.0, c.head.constant);
            for (const AffineExpr& e : c.tail) add_g(e.terms, -1.0, e.constant);
            prog.soc_dims.push_back(1 + static_cast<int>(c.tail.size()));
        }
        prog.A.resize(static_cast<int>(b.size()), n);
        prog.A.setFromTriplets(a_trip.begin(), a_trip.end());
        prog.b = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
        prog.G.resize(static_cast<int>(h.size()), n);
        prog.G.setFromTriplets(g_trip.begin(), g_trip.end());
        prog.h = Eigen::Map<const Vector>(h.data(), static_cast<Eigen::Index>(h.size()));

        const socp::Result r = socp::solve(prog, options.socp);
        out.iterations = r.iterations;
        if (r.status == socp::Status::infeasible) {
            out.status = RelaxStatus::infeasible;
            return out;
        }
        if (r.x.size() == n) {
            for (int k = 0; k < nv; ++k)
                if (column[k] >= 0) x[k] = std::clamp(r.x[column[k]], lo[k], up[k]);
        }
        double offset = model.objective_constant;
        for (const Term& t : model.objective)
            if (column[t.var] < 0) offset += t.coef * x[t.var];
        out.status = r.status == socp::Status::optimal ? RelaxStatus::optimal : RelaxStatus::numerical_failure;
        // Any (nearly) dual feasible iterate bounds the optimum, even when the gap did not close.
        if (r.status == socp::Status::optimal || r.dual_residual <= options.feasibility_tol)
            out.bound = r.dual_objective + offset;
    }

    out.values = std::move(x);
    out.objective = model.evaluate_objective(out.values);
    if (n == 0) {
        out.status = RelaxStatus::optimal;
        out.bound = out.objective;
    }
    out.bound = std::min(out.bound, out.objective);
    out.max_violation = detail::max_violation(model, out.values, lower, upper);
    if (out.status == RelaxStatus::optimal && out.max_violation > options.feasibility_tol)
        out.status = RelaxStatus::numerical_failure;
    return out;
}

/// Relaxation of `model` under its own variable bounds.
inline RelaxSolution solve_relaxation(const MinlpModel& model, const RelaxOptions& options = {}) {
    std::vector<double> lower, upper;
    lower.reserve(model.variables.size());
    upper.reserve(model.variables.size());
    for (const Variable& v : model.variables) {
        lower.push_back(v.lower);
        upper.push_back(v.upper);
    }
    return solve_relaxation(model, lower, upper, options);
}

}  // namespace octsvm
