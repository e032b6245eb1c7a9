#include "octsvm/formulation.hpp"
#include "octsvm/relaxation.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace octsvm;
using testutil::make_dataset;
using testutil::random_dataset;

namespace {

ModelConfig config(int depth, double c1 = 1.0, double c2 = 0.1, double c3 = 0.01) {
    ModelConfig c;
    c.depth = depth;
    c.c1 = c1;
    c.c2 = c2;
    c.c3 = c3;
    return c;
}

MinlpModel tree_model(const Dataset& data, int depth) { return build_octsvm_model(data, TreeTopology(depth), config(depth)); }

struct NodePlane {
    std::vector<double> w;
    double w0;
    bool active;
};

// Integral point: route every observation by the given hyperplanes (ω zeroed where inactive),
// relabel where `relabel(i, t)` says so, then let polish fill in e, β, θ and δ.
template <class Relabel>
Solution route_solution(const MinlpModel& m, const std::vector<NodePlane>& planes, Relabel relabel) {
    const VariableLayout& L = m.layout;
    const TreeTopology& topo = m.topology;
    std::vector<double> x(m.num_variables(), 0.0);
    for (int t = 1; t <= L.nodes; ++t) {
        const NodePlane& h = planes[t - 1];
        x[L.d_id(t)] = h.active ? 1.0 : 0.0;
        for (int j = 0; j < L.p; ++j) x[L.omega_id(t, j)] = h.active ? h.w[j] : 0.0;
        x[L.omega0_id(t)] = h.w0;
    }
    for (int i = 0; i < L.n; ++i) {
        int t = 1;
        while (true) {
            x[L.z_id(i, t)] = 1.0;
            x[L.xi_id(i, t)] = relabel(i, t) ? 1.0 : 0.0;
            if (!topo.has_children(t)) break;
            double f = x[L.omega0_id(t)];
            for (int j = 0; j < L.p; ++j) f += x[L.omega_id(t, j)] * m.data.features(i, j);
            t = f >= 0.0 ? topo.right_child(t) : topo.left_child(t);
        }
    }
    return polish(m, x);
}

// Direct evaluation of the un-linearized tree program on an integral point.
double original_violation(const MinlpModel& m, const std::vector<double>& x) {
    const VariableLayout& L = m.layout;
    const TreeTopology& topo = m.topology;
    const double M = m.big_m.error, Mr = m.big_m.route, Mn = m.big_m.norm;
    double v = 0.0;
    auto need = [&](double lhs, double rhs) { v = std::max(v, rhs - lhs); };  // lhs >= rhs
    for (int t = 1; t <= L.nodes; ++t) {
        double sq = 0.0;
        for (int j = 0; j < L.p; ++j) sq += x[L.omega_id(t, j)] * x[L.omega_id(t, j)];
        need(x[L.delta], 0.5 * std::sqrt(sq));
        need(Mn * x[L.d_id(t)], std::sqrt(sq));
        if (t >= 2) need(x[L.d_id(topo.parent(t))], x[L.d_id(t)]);
    }
    for (int i = 0; i < L.n; ++i) {
        const double y = m.data.labels[i];
        for (int k = 0; k <= topo.depth(); ++k) {
            double s = 0.0;
            for (int t : topo.level(k)) s += x[L.z_id(i, t)];
            v = std::max(v, std::abs(s - 1.0));
        }
        for (int t = 1; t <= L.nodes; ++t) {
            double f = x[L.omega0_id(t)];
            for (int j = 0; j < L.p; ++j) f += x[L.omega_id(t, j)] * m.data.features(i, j);
            const double xi = x[L.xi_id(i, t)], z = x[L.z_id(i, t)], th = x[L.theta_id(i, t)];
            need((1.0 - 2.0 * xi) * y * f, 1.0 - x[L.error_id(i, t)] - M * (1.0 - z));
            need(f, -Mr * (1.0 - th));
            need(Mr * th, f);
            if (t >= 2) {
                const int pt = topo.parent(t);
                need(x[L.z_id(i, pt)], z);
                if (topo.is_left_branch(t)) need(x[L.theta_id(i, pt)], x[L.z_id(i, pt)] - z);
                else need(1.0 - x[L.theta_id(i, pt)], x[L.z_id(i, pt)] - z);
            }
        }
    }
    return v;
}

// Feasible interval for β from the four rows at fixed (ξ, ω).
std::pair<double, double> beta_interval(double xi, double omega, double W) {
    const BilinearIndex idx{0, 1, 2};
    double lo = -1e300, hi = 1e300;
    for (const LinearRow& r : linearize_bilinear(idx, W, Family::octsvm_3)) {
        double rest = 0.0, coef = 0.0;
        for (const Term& t : r.terms) {
            if (t.var == 0) coef = t.coef;
            else rest += t.coef * (t.var == 1 ? xi : omega);
        }
        const double bound = (r.rhs - rest) / coef;
        if ((r.sense == Sense::le) == (coef > 0)) hi = std::min(hi, bound);
        else lo = std::max(lo, bound);
    }
    return {lo, hi};
}

}  // namespace

TEST(BigM, Examples) {
    ModelConfig c;
    c.coef_bound = 10;
    MConstants m = big_m_values(1, c);
    EXPECT_DOUBLE_EQ(m.route, 20);
    EXPECT_DOUBLE_EQ(m.error, 21);
    EXPECT_DOUBLE_EQ(m.norm, 10);
    m = big_m_values(4, c);
    EXPECT_DOUBLE_EQ(m.route, 50);
    EXPECT_DOUBLE_EQ(m.error, 51);
    EXPECT_DOUBLE_EQ(m.norm, 20);
    c.coef_bound = 1;
    EXPECT_NEAR(big_m_values(2, c).norm, 1.41421, 1e-5);
    EXPECT_THROW(big_m_values(0, c), std::invalid_argument);
}

TEST(BigM, BoundsTheHyperplaneValue) {
    // |ω'x + ω0| <= W(p+1) over the box corners.
    const double W = 3.0;
    ModelConfig c;
    c.coef_bound = W;
    for (int p = 1; p <= 4; ++p) {
        double worst = 0.0;
        for (int mask = 0; mask < (1 << p); ++mask) worst = std::max(worst, W * (__builtin_popcount(mask) + 1));
        EXPECT_DOUBLE_EQ(big_m_values(p, c).route, worst);
    }
}

TEST(Census, SmallInstance) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), 1);
    EXPECT_EQ(m.count(VarKind::continuous), 25);
    EXPECT_EQ(m.count(VarKind::binary), 21);
    EXPECT_EQ(m.count_rows(Family::octsvm_3), 48);
}

TEST(Census, RootOnlyTree) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}, {0.5}}, {-1, 1, 1}), 0);
    EXPECT_EQ(m.count_rows(Family::octsvm_5), 0);
    EXPECT_EQ(m.count_rows(Family::octsvm_7), 0);
    EXPECT_EQ(m.count_rows(Family::octsvm_6), 3);
    for (const LinearRow& r : m.rows) {
        if (r.family != Family::octsvm_6) continue;
        ASSERT_EQ(r.terms.size(), 1u);
        EXPECT_EQ(r.sense, Sense::eq);
        EXPECT_EQ(r.rhs, 1.0);
        EXPECT_EQ(m.variables[r.terms[0].var].role, Role::z);
    }
}

TEST(Census, ExhaustiveClosedForm) {
    for (int n = 2; n <= 8; ++n) {
        for (int p = 1; p <= 4; ++p) {
            for (int D = 0; D <= 2; ++D) {
                const MinlpModel m = tree_model(random_dataset(n, p, 100 * n + 10 * p + D), D);
                const int T = (1 << (D + 1)) - 1;
                const int left = (T - 1) / 2, right = (T - 1) / 2;
                SCOPED_TRACE("n=" + std::to_string(n) + " p=" + std::to_string(p) + " D=" + std::to_string(D));
                EXPECT_EQ(m.count(VarKind::continuous), T * p + T + 1 + n * T + n * T * p + n * T);
                EXPECT_EQ(m.count(VarKind::binary), 3 * n * T + T);
                EXPECT_EQ(m.count_rows(Family::octsvm_1), T);
                EXPECT_EQ(m.count_rows(Family::octsvm_2), n * T);
                EXPECT_EQ(m.count_rows(Family::octsvm_3), 4 * n * T * (p + 1));
                EXPECT_EQ(m.count_rows(Family::octsvm_4), T);
                EXPECT_EQ(m.count_rows(Family::octsvm_5), T - 1);
                EXPECT_EQ(m.count_rows(Family::octsvm_6), n * (D + 1));
                EXPECT_EQ(m.count_rows(Family::octsvm_7), n * (T - 1));
                EXPECT_EQ(m.count_rows(Family::octsvm_8), n * T);
                EXPECT_EQ(m.count_rows(Family::octsvm_9), n * T);
                EXPECT_EQ(m.count_rows(Family::octsvm_10), n * left);
                EXPECT_EQ(m.count_rows(Family::octsvm_11), n * right);
                EXPECT_EQ(static_cast<int>(m.rows.size() + m.cones.size()),
                          2 * T + n * T + 4 * n * T * (p + 1) + (T - 1) + n * (D + 1) + n * (T - 1) + 2 * n * T +
                              n * (T - 1));
            }
        }
    }
}

TEST(Model, BoundsAndTags) {
    const MinlpModel m = tree_model(random_dataset(5, 3, 4), 2);
    const double W = m.config.coef_bound;
    EXPECT_NO_THROW(m.validate());
    for (const Variable& v : m.variables) {
        switch (v.role) {
            case Role::omega:
            case Role::omega0:
            case Role::beta:
            case Role::beta0:
                EXPECT_EQ(v.lower, -W);
                EXPECT_EQ(v.upper, W);
                break;
            case Role::error:
                EXPECT_EQ(v.lower, 0.0);
                EXPECT_EQ(v.upper, m.big_m.error);
                break;
            case Role::delta:
                EXPECT_EQ(v.lower, 0.0);
                EXPECT_DOUBLE_EQ(v.upper, W * std::sqrt(3.0) / 2);
                break;
            default:
                EXPECT_EQ(v.kind, VarKind::binary);
                EXPECT_EQ(v.lower, 0.0);
                EXPECT_EQ(v.upper, 1.0);
        }
    }
    // Objective: δ + c1 Σe + c2 Σξ + c3 Σd.
    for (const Term& t : m.objective) {
        const Role r = m.variables[t.var].role;
        const double want = r == Role::delta ? 1.0 : r == Role::error ? 1.0 : r == Role::xi ? 0.1 : 0.01;
        EXPECT_EQ(t.coef, want);
    }
    EXPECT_EQ(m.objective.size(), 1u + 2u * 5 * 7 + 7);
}

TEST(Model, RejectsBadInput) {
    EXPECT_THROW(tree_model(make_dataset({{0.1}, {0.2}}, {1, 1}), 1), std::invalid_argument);
    EXPECT_THROW(build_octsvm_model(random_dataset(4, 1, 1), TreeTopology(2), config(1)), std::invalid_argument);
    EXPECT_THROW(build_resvm_model(make_dataset({{0.1}, {0.2}}, {-1, -1}), 1, 1), std::invalid_argument);
    ModelConfig bad = config(1);
    bad.c1 = 0;
    EXPECT_THROW(build_octsvm_model(random_dataset(4, 1, 1), TreeTopology(1), bad), std::invalid_argument);
}

TEST(Model, SymmetryCutIsOptional) {
    ModelConfig c = config(1);
    EXPECT_EQ(build_octsvm_model(random_dataset(4, 2, 3), TreeTopology(1), c).count_rows(Family::symmetry), 0);
    c.symmetry_cut = true;
    EXPECT_EQ(build_octsvm_model(random_dataset(4, 2, 3), TreeTopology(1), c).count_rows(Family::symmetry), 1);
}

TEST(Model, ResvmStructure) {
    const MinlpModel m = build_resvm_model(random_dataset(6, 2, 5), 1.0, 0.5);
    EXPECT_EQ(m.count(VarKind::binary), 6);
    EXPECT_EQ(m.count_rows(Family::resvm_hinge), 6);
    EXPECT_EQ(m.count_rows(Family::resvm_bilinear), 4 * 6 * 3);
    EXPECT_EQ(m.count_rows(Family::resvm_epigraph), 1);
    // ||(ω, s - 1/2)|| <= s + 1/2 holds exactly when s >= ||ω||²/2.
    std::vector<double> x(m.num_variables(), 0.0);
    x[m.layout.omega_id(1, 0)] = 3.0;
    x[m.layout.omega_id(1, 1)] = 4.0;
    x[m.layout.delta] = 12.5;
    EXPECT_NEAR(m.cones[0].violation(x), 0.0, 1e-12);
    x[m.layout.delta] = 12.4;
    EXPECT_GT(m.cones[0].violation(x), 0.0);
}

TEST(Bilinear, ZeroForcesZero) {
    for (double w : {-10.0, -3.0, 0.0, 7.5, 10.0}) {
        const auto [lo, hi] = beta_interval(0.0, w, 10.0);
        EXPECT_DOUBLE_EQ(lo, 0.0);
        EXPECT_DOUBLE_EQ(hi, 0.0);
    }
}

TEST(Bilinear, OneForcesOmega) {
    for (double w : {-10.0, -3.0, 0.0, 7.5, 10.0}) {
        const auto [lo, hi] = beta_interval(1.0, w, 10.0);
        EXPECT_DOUBLE_EQ(lo, w);
        EXPECT_DOUBLE_EQ(hi, w);
    }
}

TEST(Bilinear, HalfGivesMcCormickEnvelope) {
    const auto [lo, hi] = beta_interval(0.5, 4.0, 10.0);
    EXPECT_DOUBLE_EQ(lo, std::max(-5.0, -1.0));
    EXPECT_DOUBLE_EQ(hi, std::min(5.0, 9.0));
}

TEST(Bilinear, ExactForBinaryXiOnAGrid) {
    const double W = 2.5;
    for (int k = 0; k <= 50; ++k) {
        const double w = -W + 2 * W * k / 50.0;
        for (double xi : {0.0, 1.0}) {
            const auto [lo, hi] = beta_interval(xi, w, W);
            EXPECT_NEAR(lo, xi * w, 1e-12);
            EXPECT_NEAR(hi, xi * w, 1e-12);
        }
    }
}

TEST(Objective, ZeroPoint) {
    const MinlpModel m = tree_model(random_dataset(3, 2, 9), 1);
    EXPECT_EQ(objective_of(m, Solution{std::vector<double>(m.num_variables(), 0.0), 0.0}), 0.0);
}

TEST(Objective, FourTermArithmetic) {
    ModelConfig c;
    c.c1 = 0.5;
    c.c2 = 0.1;
    c.c3 = 0.01;
    EXPECT_NEAR(objective_of(1.0, 2.0, 1.0, 1.0, c), 2.11, 1e-15);
    const MinlpModel m = build_octsvm_model(random_dataset(3, 1, 2), TreeTopology(1), [&] {
        ModelConfig k = c;
        k.depth = 1;
        return k;
    }());
    std::vector<double> x(m.num_variables(), 0.0);
    x[m.layout.delta] = 1.0;
    x[m.layout.error_id(2, 3)] = 2.0;
    x[m.layout.xi_id(0, 2)] = 1.0;
    x[m.layout.d_id(1)] = 1.0;
    EXPECT_NEAR(objective_of(m, Solution{x, 0.0}), 2.11, 1e-15);
    EXPECT_NEAR(m.evaluate_objective(x), 2.11, 1e-15);
}

TEST(Objective, MissingValues) {
    const MinlpModel m = tree_model(random_dataset(3, 1, 2), 1);
    EXPECT_THROW(objective_of(m, Solution{{0.0, 1.0}, 0.0}), std::invalid_argument);
}

TEST(Subproblem, EmptyFixingIsNaturalRelaxation) {
    const MinlpModel m = tree_model(random_dataset(3, 1, 2), 1);
    const MinlpModel s = continuous_subproblem(m, {});
    EXPECT_EQ(s.count(VarKind::binary), 0);
    for (int k = 0; k < m.num_variables(); ++k) {
        EXPECT_EQ(s.variables[k].lower, m.variables[k].lower);
        EXPECT_EQ(s.variables[k].upper, m.variables[k].upper);
    }
    EXPECT_EQ(s.rows.size(), m.rows.size());
    EXPECT_EQ(s.objective.size(), m.objective.size());
}

TEST(Subproblem, FixingANonBinaryThrows) {
    const MinlpModel m = tree_model(random_dataset(3, 1, 2), 1);
    EXPECT_THROW(continuous_subproblem(m, {{m.layout.delta, 1}}), std::invalid_argument);
    EXPECT_THROW(continuous_subproblem(m, {{m.layout.d_id(1), 2}}), std::invalid_argument);
}

TEST(Subproblem, FullFeasibleRoutingIsPureSocp) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), 1);
    const Solution s = route_solution(m, {{{1.0}, -0.5, true}, {{0.0}, 0.0, false}, {{0.0}, 0.0, false}},
                                      [](int, int) { return false; });
    std::map<int, int> fix;
    for (int id : m.binaries()) fix[id] = static_cast<int>(std::lround(s.values[id]));
    const MinlpModel sub = continuous_subproblem(m, fix);
    for (int id : m.binaries()) EXPECT_EQ(sub.variables[id].lower, sub.variables[id].upper);
    std::vector<double> lo, up;
    for (const Variable& v : sub.variables) {
        lo.push_back(v.lower);
        up.push_back(v.upper);
    }
    const RelaxSolution r = solve_relaxation(sub, lo, up);
    ASSERT_EQ(r.status, RelaxStatus::optimal);
    EXPECT_LE(r.objective, s.objective + 1e-6);
}

TEST(Subproblem, TwoNodesOnOneLevelIsInfeasible) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), 1);
    const MinlpModel sub = continuous_subproblem(m, {{m.layout.z_id(0, 2), 1}, {m.layout.z_id(0, 3), 1}});
    std::vector<double> lo, up;
    for (const Variable& v : sub.variables) {
        lo.push_back(v.lower);
        up.push_back(v.upper);
    }
    EXPECT_EQ(solve_relaxation(sub, lo, up).status, RelaxStatus::infeasible);
}

TEST(Feasibility, ReportsLevelAndHierarchyViolations) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), 1);
    const Solution ok = route_solution(m, {{{1.0}, -0.5, true}, {{1.0}, -0.1, true}, {{-1.0}, 0.9, true}},
                                       [](int, int) { return false; });
    EXPECT_TRUE(check_feasible(ok, m).passes()) << check_feasible(ok, m).describe();

    Solution two = ok;
    two.values[m.layout.z_id(0, 2)] = two.values[m.layout.z_id(0, 3)] = 1.0;
    EXPECT_DOUBLE_EQ(check_feasible(two, m)["octsvm_6"], 1.0);

    Solution orphan = ok;
    orphan.values[m.layout.d_id(1)] = 0.0;
    orphan.values[m.layout.omega_id(1, 0)] = 0.0;
    EXPECT_DOUBLE_EQ(check_feasible(orphan, m)["octsvm_5"], 1.0);
}

TEST(Feasibility, BilinearIdentityIsAudited) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), 0);
    Solution s = route_solution(m, {{{2.0}, -1.0, true}}, [](int i, int) { return i == 0; });
    EXPECT_NEAR(check_feasible(s, m)[kBilinearIdentity], 0.0, 1e-15);
    s.values[m.layout.beta_id(0, 1, 0)] += 0.5;
    EXPECT_NEAR(check_feasible(s, m)[kBilinearIdentity], 0.5, 1e-12);
    EXPECT_FALSE(check_feasible(s, m).passes());
}

TEST(Feasibility, RowsImplyOriginalConstraints) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int D = trial % 3, p = 1 + trial % 2, n = 4 + trial % 4;
        const MinlpModel m = tree_model(random_dataset(n, p, 500 + trial), D);
        std::vector<NodePlane> planes;
        for (int t = 1; t <= m.topology.node_count(); ++t) {
            const bool parent_active = t == 1 || planes[m.topology.parent(t) - 1].active;
            std::vector<double> w(p);
            for (double& a : w) a = 3 * u(rng);
            planes.push_back({w, 2 * u(rng), parent_active && u(rng) > -0.5});
        }
        const Solution s = route_solution(m, planes, [&](int, int) { return u(rng) > 0.4; });
        const ViolationReport rep = check_feasible(s, m);
        ASSERT_TRUE(rep.passes()) << rep.describe();
        EXPECT_LE(original_violation(m, s.values), 1e-9);
        EXPECT_NEAR(objective_of(m, s), s.objective, 1e-9);
    }
}

TEST(Feasibility, LabelFlipWitness) {
    // y -> -y: negate every hyperplane and mirror each level; objective and feasibility carry over.
    for (int trial = 0; trial < 10; ++trial) {
        const int D = trial % 3;
        Dataset data = random_dataset(6, 2, 900 + trial);
        const MinlpModel m = tree_model(data, D);
        std::mt19937_64 rng(trial);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<NodePlane> planes;
        for (int t = 1; t <= m.topology.node_count(); ++t)
            planes.push_back({{2 * u(rng), 2 * u(rng)}, u(rng), t == 1 || planes[m.topology.parent(t) - 1].active});
        const Solution s = route_solution(m, planes, [&](int, int) { return u(rng) > 0.5; });
        ASSERT_TRUE(check_feasible(s, m).passes());

        for (int& y : data.labels) y = -y;
        const MinlpModel f = tree_model(data, D);
        const VariableLayout& L = m.layout;
        auto mirror = [&](int t) {
            const int k = m.topology.level_of(t);
            return (1 << k) + ((1 << (k + 1)) - 1 - t);
        };
        std::vector<double> x(s.values.size());
        x[L.delta] = s.values[L.delta];
        for (int t = 1; t <= L.nodes; ++t) {
            const int r = mirror(t);
            for (int j = 0; j < L.p; ++j) x[L.omega_id(r, j)] = -s.values[L.omega_id(t, j)];
            x[L.omega0_id(r)] = -s.values[L.omega0_id(t)];
            x[L.d_id(r)] = s.values[L.d_id(t)];
            for (int i = 0; i < L.n; ++i) {
                for (int j = 0; j < L.p; ++j) x[L.beta_id(i, r, j)] = -s.values[L.beta_id(i, t, j)];
                x[L.beta0_id(i, r)] = -s.values[L.beta0_id(i, t)];
                x[L.error_id(i, r)] = s.values[L.error_id(i, t)];
                x[L.xi_id(i, r)] = s.values[L.xi_id(i, t)];
                x[L.z_id(i, r)] = s.values[L.z_id(i, t)];
                x[L.theta_id(i, r)] = 1.0 - s.values[L.theta_id(i, t)];
            }
        }
        const Solution w{x, f.evaluate_objective(x)};
        const ViolationReport rep = check_feasible(w, f);
        // Only points exactly on a hyperplane could break the θ mirror; random data avoids that.
        EXPECT_TRUE(rep.passes()) << rep.describe();
        EXPECT_NEAR(w.objective, s.objective, 1e-12);
    }
}

TEST(ExtractTree, AllPrunedUsesMajority) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}, {0.9}}, {-1, 1, 1}), 1);
    const Solution s = route_solution(m, {{{0.0}, 0.3, false}, {{0.0}, 0.0, false}, {{0.0}, 0.0, false}},
                                      [](int i, int) { return i == 0; });
    const TreeClassifier t = extract_tree(m, s);
    for (int k = 1; k <= 3; ++k) EXPECT_FALSE(t.active(k));
    EXPECT_EQ(t.fallback_label, 1);
    EXPECT_EQ(t.node(1).intercept, 0.0);
}

TEST(ExtractTree, RootOnlySplit) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}, {0.9}}, {-1, 1, 1}), 1);
    const Solution s = route_solution(m, {{{2.0}, -1.0, true}, {{0.0}, 0.4, false}, {{0.0}, -0.2, false}},
                                      [](int, int) { return false; });
    const TreeClassifier t = extract_tree(m, s);
    EXPECT_TRUE(t.active(1));
    EXPECT_FALSE(t.active(2));
    EXPECT_FALSE(t.active(3));
    EXPECT_DOUBLE_EQ(t.node(1).weights[0], 2.0);
    EXPECT_DOUBLE_EQ(t.node(1).intercept, -1.0);
    EXPECT_EQ(t.node(2).intercept, 0.0);
}

TEST(ExtractTree, RejectsFractionalOrInfeasible) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), 1);
    Solution s = route_solution(m, {{{2.0}, -1.0, true}, {{1.0}, 0.0, true}, {{1.0}, 0.0, true}},
                                [](int, int) { return false; });
    Solution frac = s;
    frac.values[m.layout.d_id(3)] = 0.5;
    EXPECT_THROW(extract_tree(m, frac), std::invalid_argument);
    Solution bad = s;
    bad.values[m.layout.z_id(0, 2)] = bad.values[m.layout.z_id(0, 3)] = 1.0;
    EXPECT_THROW(extract_tree(m, bad), std::invalid_argument);
}

TEST(ExtractTree, RouteReplaysAssignments) {
    const MinlpModel m = tree_model(random_dataset(8, 2, 77), 2);
    std::vector<NodePlane> planes = {{{1.0, -1.0}, 0.1, true},  {{2.0, 0.5}, -1.0, true}, {{-1.0, 1.0}, 0.2, true},
                                     {{0.0, 0.0}, 0.0, false}, {{0.0, 0.0}, 0.0, false}, {{1.0, 1.0}, -1.0, true},
                                     {{0.0, 0.0}, 0.0, false}};
    const Solution s = route_solution(m, planes, [](int i, int t) { return (i + t) % 3 == 0; });
    ASSERT_TRUE(check_feasible(s, m).passes());
    const TreeClassifier tree = extract_tree(m, s);
    for (int i = 0; i < 8; ++i) {
        for (int t : route(tree, m.data.row(i))) EXPECT_EQ(s.values[m.layout.z_id(i, t)], 1.0);
    }
}

TEST(LpExport, Sections) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), 1);
    const std::string lp = to_lp_string(m);
    for (const char* s : {"Minimize", "Subject To", "Bounds", "Binaries", "End", "octsvm_11_2:", "octsvm_1_3:"})
        EXPECT_NE(lp.find(s), std::string::npos) << s;
    EXPECT_EQ(lp, to_lp_string(m));
}
