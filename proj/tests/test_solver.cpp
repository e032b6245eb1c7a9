#include "octsvm/branch_and_bound.hpp"
#include "octsvm/brute_force.hpp"
#include "octsvm/formulation.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

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

MinlpModel tree_model(const Dataset& data, const ModelConfig& c) { return build_octsvm_model(data, TreeTopology(c.depth), c); }

Budget exact() {
    Budget b;
    b.time_limit = 120;
    b.gap_target = 1e-7;
    return b;
}

std::pair<std::vector<double>, std::vector<double>> bounds_of(const MinlpModel& m) {
    std::vector<double> lo, up;
    for (const Variable& v : m.variables) {
        lo.push_back(v.lower);
        up.push_back(v.upper);
    }
    return {lo, up};
}

// Independent enumeration: every assignment of the listed binaries, remaining ones must be fixed by `fixed`.
double enumerate_min(const MinlpModel& m, const std::vector<int>& free_ids, const std::map<int, int>& fixed) {
    double best = std::numeric_limits<double>::infinity();
    for (long mask = 0; mask < (1L << free_ids.size()); ++mask) {
        auto [lo, up] = bounds_of(m);
        for (const auto& [id, v] : fixed) lo[id] = up[id] = v;
        for (std::size_t k = 0; k < free_ids.size(); ++k) lo[free_ids[k]] = up[free_ids[k]] = (mask >> k) & 1;
        const RelaxSolution r = solve_relaxation(m, lo, up);
        if (r.status == RelaxStatus::optimal) best = std::min(best, r.objective);
    }
    return best;
}

void expect_feasible(const SolveResult& r, const MinlpModel& m) {
    ASSERT_TRUE(r.incumbent.has_value());
    const ViolationReport rep = check_feasible(*r.incumbent, m, 1e-6);
    EXPECT_TRUE(rep.passes()) << rep.describe();
    EXPECT_NEAR(objective_of(m, *r.incumbent), r.objective(), 1e-6);
}

}  // namespace

TEST(Branching, SplitIndicatorsFirst) {
    const MinlpModel m = tree_model(random_dataset(3, 1, 1), config(1));
    std::vector<double> x(m.num_variables(), 0.0);
    x[m.layout.d_id(1)] = 0.5;
    x[m.layout.theta_id(0, 1)] = 0.5;
    EXPECT_EQ(select_branching(x, m), m.layout.d_id(1));
}

TEST(Branching, MostFractionalWithinAClass) {
    const MinlpModel m = tree_model(random_dataset(3, 1, 1), config(1));
    std::vector<double> x(m.num_variables(), 0.0);
    x[m.layout.z_id(0, 2)] = 0.3;
    x[m.layout.z_id(1, 3)] = 0.45;
    x[m.layout.xi_id(2, 1)] = 0.5;
    EXPECT_EQ(select_branching(x, m), m.layout.z_id(1, 3));
    x[m.layout.z_id(0, 2)] = 0.45;
    EXPECT_EQ(select_branching(x, m), m.layout.z_id(0, 2));  // equal fractionality: lowest id
}

TEST(Branching, IntegralPointThrows) {
    const MinlpModel m = tree_model(random_dataset(3, 1, 1), config(1));
    std::vector<double> x(m.num_variables(), 1.0);
    x[m.layout.d_id(2)] = 1.0 - 1e-7;
    EXPECT_THROW(select_branching(x, m), std::invalid_argument);
}

TEST(BranchAndBound, SingleNodeBudget) {
    const MinlpModel m = tree_model(random_dataset(5, 2, 3), config(1));
    const SolveResult r = branch_and_bound(m, Budget::nodes(1));
    EXPECT_EQ(r.nodes_explored, 1);
    EXPECT_TRUE(std::isfinite(r.best_bound));
    EXPECT_TRUE(r.status == SolveStatus::gap_limit || r.status == SolveStatus::time_limit || r.status == SolveStatus::optimal);
    if (r.incumbent) {
        expect_feasible(r, m);
        EXPECT_LE(r.best_bound, r.objective() + 1e-7);
    }
}

TEST(BranchAndBound, AllBinariesFixedSolvesAtRoot) {
    MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), config(1));
    // Root splits, children pruned, no relabeling.
    std::map<int, int> fix;
    for (int id : m.binaries()) fix[id] = 0;
    fix[m.layout.d_id(1)] = 1;
    for (int i = 0; i < 2; ++i) fix[m.layout.z_id(i, 1)] = 1;
    fix[m.layout.z_id(0, 2)] = 1;
    fix[m.layout.z_id(1, 3)] = 1;
    fix[m.layout.theta_id(1, 1)] = 1;
    fix[m.layout.theta_id(1, 3)] = 1;
    fix[m.layout.theta_id(0, 3)] = 1;
    for (const auto& [id, v] : fix) m.variables[id].lower = m.variables[id].upper = v;
    const SolveResult r = branch_and_bound(m, exact());
    EXPECT_EQ(r.status, SolveStatus::optimal);
    EXPECT_EQ(r.nodes_explored, 1);
    expect_feasible(r, m);
    // Max margin between 0.2 and 0.8: |ω| = 2/0.6, δ = |ω|/2.
    EXPECT_NEAR(r.objective(), 1.0 / 0.6 + 0.01, 1e-6);
}

TEST(BranchAndBound, InfeasibleModel) {
    MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), config(0));
    m.variables[m.layout.z_id(0, 1)].upper = 0.0;
    const SolveResult r = branch_and_bound(m, exact());
    EXPECT_EQ(r.status, SolveStatus::infeasible);
    EXPECT_FALSE(r.incumbent.has_value());
}

TEST(BranchAndBound, MatchesBruteForceOnTinyTree) {
    const MinlpModel m = tree_model(random_dataset(4, 1, 42), config(1));
    const SolveResult bf = brute_force_solve(m, 4, 1, TreeTopology(1));
    const SolveResult bb = branch_and_bound(m, exact());
    EXPECT_EQ(bb.status, SolveStatus::optimal);
    EXPECT_NEAR(bb.objective(), bf.objective(), 1e-6);
    expect_feasible(bb, m);
    expect_feasible(bf, m);
}

TEST(BranchAndBound, BoundStaysBelowOptimum) {
    for (int k = 0; k < 4; ++k) {
        const MinlpModel m = tree_model(random_dataset(5, 2, 60 + k), config(1, 10, 1, 0.1));
        const double opt = brute_force_solve(m).objective();
        for (long limit : {1L, 3L, 10L}) {
            const SolveResult r = branch_and_bound(m, Budget::nodes(limit));
            EXPECT_LE(r.best_bound, opt + 1e-6);
            if (r.incumbent) {
                EXPECT_GE(r.objective(), opt - 1e-6);
                expect_feasible(r, m);
            }
        }
    }
}

TEST(BranchAndBound, DeterministicInNodeMode) {
    const MinlpModel m = tree_model(random_dataset(6, 2, 5), config(1));
    const SolveResult a = branch_and_bound(m, Budget::nodes(15));
    const SolveResult b = branch_and_bound(m, Budget::nodes(15));
    EXPECT_EQ(a.nodes_explored, b.nodes_explored);
    EXPECT_EQ(a.best_bound, b.best_bound);
    EXPECT_EQ(a.status, b.status);
    ASSERT_EQ(a.incumbent.has_value(), b.incumbent.has_value());
    if (a.incumbent) {
        EXPECT_EQ(a.incumbent->values, b.incumbent->values);
    }
}

TEST(BranchAndBound, WritesLogLines) {
    const MinlpModel m = tree_model(random_dataset(4, 1, 8), config(1));
    std::ostringstream log;
    BranchOptions o;
    o.log = &log;
    const SolveResult r = branch_and_bound(m, exact(), o);
    EXPECT_FALSE(r.trace.empty());
    EXPECT_NE(log.str().find("incumbent"), std::string::npos);
    EXPECT_NE(r.summary().find("status=optimal"), std::string::npos);
}

TEST(BranchAndBound, BudgetValidation) {
    const MinlpModel m = tree_model(random_dataset(4, 1, 8), config(0));
    Budget b;
    b.gap_target = 0;
    EXPECT_THROW(branch_and_bound(m, b), std::invalid_argument);
}

TEST(BranchAndBound, OptimumMonotoneInCosts) {
    const Dataset data = random_dataset(5, 1, 21);
    double prev = -1;
    for (double c1 : {0.5, 1.0, 2.0}) {
        const double v = branch_and_bound(tree_model(data, config(1, c1, 0.1, 0.01)), exact()).objective();
        EXPECT_GE(v, prev - 1e-6);
        prev = v;
    }
    prev = -1;
    for (double c2 : {0.0, 0.1, 1.0}) {
        const double v = branch_and_bound(tree_model(data, config(1, 1.0, c2, 0.01)), exact()).objective();
        EXPECT_GE(v, prev - 1e-6);
        prev = v;
    }
}

TEST(BranchAndBound, ResvmTwoPointClosedForm) {
    const MinlpModel m = build_resvm_model(make_dataset({{0.0}, {1.0}}, {-1, 1}), 1e5, 1e5);
    const SolveResult r = branch_and_bound(m, exact());
    ASSERT_EQ(r.status, SolveStatus::optimal);
    expect_feasible(r, m);
    const auto& x = r.incumbent->values;
    EXPECT_NEAR(x[m.layout.omega_id(1, 0)], 2.0, 1e-6);
    EXPECT_NEAR(x[m.layout.omega0_id(1)], -1.0, 1e-6);
    EXPECT_NEAR(r.objective(), 2.0, 1e-6);
}

// Objective of each relabel pattern of a RE-SVM model, by solving the convex subproblem.
std::vector<double> pattern_objectives(const MinlpModel& m) {
    std::vector<double> out;
    const int n = m.layout.n;
    for (int mask = 0; mask < (1 << n); ++mask) {
        auto [lo, up] = bounds_of(m);
        for (int i = 0; i < n; ++i) lo[m.layout.xi_id(i, 1)] = up[m.layout.xi_id(i, 1)] = (mask >> i) & 1;
        const RelaxSolution r = solve_relaxation(m, lo, up);
        out.push_back(r.status == RelaxStatus::optimal ? r.objective : std::numeric_limits<double>::infinity());
    }
    return out;
}

int relabel_mask(const MinlpModel& m, const Solution& s) {
    int mask = 0;
    for (int i = 0; i < m.layout.n; ++i) mask |= (s.values[m.layout.xi_id(i, 1)] > 0.5 ? 1 : 0) << i;
    return mask;
}

TEST(BranchAndBound, ResvmRelabelingFollowsEnumeration) {
    // x = {0, 0.1, 1}, y = {-1, +1, +1}, c1 = 10, c2 = 0.01. Relabeling the lone negative point
    // leaves one class, so ω = 0 is optimal at cost c2; relabeling the middle point still pays a margin.
    const MinlpModel m = build_resvm_model(make_dataset({{0.0}, {0.1}, {1.0}}, {-1, 1, 1}), 10, 0.01);
    const std::vector<double> obj = pattern_objectives(m);
    const int best = static_cast<int>(std::min_element(obj.begin(), obj.end()) - obj.begin());
    EXPECT_EQ(best, 0b001);
    EXPECT_NEAR(obj[0b001], 0.01, 1e-6);
    EXPECT_NEAR(obj[0b010], 0.5 * (2 / 0.9) * (2 / 0.9) + 0.01, 1e-6);
    const SolveResult r = branch_and_bound(m, exact());
    ASSERT_TRUE(r.incumbent);
    EXPECT_NEAR(r.objective(), obj[best], 1e-6);
    EXPECT_EQ(relabel_mask(m, *r.incumbent), best);
}

TEST(BranchAndBound, ResvmRelabelsAnIsolatedMiddlePoint) {
    const MinlpModel m = build_resvm_model(make_dataset({{0.0}, {0.1}, {1.0}}, {1, -1, 1}), 10, 0.01);
    const std::vector<double> obj = pattern_objectives(m);
    const int best = static_cast<int>(std::min_element(obj.begin(), obj.end()) - obj.begin());
    EXPECT_EQ(best, 0b010);
    const SolveResult r = branch_and_bound(m, exact());
    ASSERT_TRUE(r.incumbent);
    EXPECT_EQ(relabel_mask(m, *r.incumbent), 0b010);
    EXPECT_NEAR(r.objective(), 0.01, 1e-6);
}

TEST(BranchAndBound, DepthZeroMatchesResvmDecisions) {
    // Separable tiny sets with prohibitive error and relabel costs: both models separate perfectly,
    // and the tree's δ is half the norm of its own hyperplane.
    const Dataset data = make_dataset({{0.1, 0.2}, {0.3, 0.1}, {0.8, 0.7}, {0.9, 0.95}}, {-1, -1, 1, 1});
    const MinlpModel tm = tree_model(data, config(0, 1e3, 1e3, 0.01));
    const MinlpModel rm = build_resvm_model(data, 1e3, 1e3);
    const SolveResult tr = branch_and_bound(tm, exact()), rr = branch_and_bound(rm, exact());
    expect_feasible(tr, tm);
    expect_feasible(rr, rm);
    const TreeClassifier a = extract_tree(tm, *tr.incumbent), b = extract_tree(rm, *rr.incumbent);
    for (int i = 0; i < data.size(); ++i) {
        EXPECT_EQ(predict(a, data.row(i)), data.labels[i]);
        EXPECT_EQ(predict(a, data.row(i)), predict(b, data.row(i)));
    }
    EXPECT_NEAR(tr.incumbent->values[tm.layout.delta], 0.5 * a.node(1).weights.norm(), 1e-6);
    EXPECT_NEAR(a.node(1).weights.normalized().dot(b.node(1).weights.normalized()), 1.0, 1e-4);
}

TEST(BruteForce, HugeSplitCostKeepsOnlyTheRoot) {
    const MinlpModel m = tree_model(make_dataset({{0.2}, {0.8}}, {-1, 1}), config(1, 1, 0.1, 100));
    const SolveResult r = brute_force_solve(m);
    ASSERT_TRUE(r.incumbent);
    const auto& x = r.incumbent->values;
    EXPECT_EQ(x[m.layout.d_id(2)], 0.0);
    EXPECT_EQ(x[m.layout.d_id(3)], 0.0);
    expect_feasible(r, m);
}

TEST(BruteForce, FreeRelabelingNeverHurts) {
    for (int k = 0; k < 3; ++k) {
        const Dataset data = random_dataset(5, 1, 300 + k);
        const double free = brute_force_solve(tree_model(data, config(1, 1, 0.0, 0.01))).objective();
        const double paid = brute_force_solve(tree_model(data, config(1, 1, 0.5, 0.01))).objective();
        EXPECT_LE(free, paid + 1e-9);
    }
}

TEST(BruteForce, RootOnlyMatchesFullEnumeration) {
    for (int k = 0; k < 3; ++k) {
        const MinlpModel m = tree_model(random_dataset(3, 1 + k % 2, 400 + k), config(0, 2, 0.3, 0.05));
        std::vector<int> free_ids;
        for (int id : m.binaries()) free_ids.push_back(id);
        ASSERT_EQ(free_ids.size(), 10u);
        const double expect = enumerate_min(m, free_ids, {});
        const SolveResult r = brute_force_solve(m);
        EXPECT_NEAR(r.objective(), expect, 1e-6);
        expect_feasible(r, m);
    }
}

TEST(BruteForce, StructureMismatchAndGuard) {
    const MinlpModel m = tree_model(random_dataset(4, 1, 1), config(1));
    EXPECT_THROW(brute_force_solve(m, 4, 2, TreeTopology(1)), std::invalid_argument);
    BruteForceOptions o;
    o.pattern_limit = 3;
    EXPECT_THROW(brute_force_solve(m, o), std::length_error);
}

TEST(Heuristic, IntegralPointIsAFixpoint) {
    const MinlpModel m = tree_model(random_dataset(5, 1, 13), config(1));
    const SolveResult bf = brute_force_solve(m);
    RelaxSolution relax;
    relax.values = bf.incumbent->values;
    relax.objective = bf.objective();
    relax.status = RelaxStatus::optimal;
    const auto h = primal_heuristic(relax, m, m.data, m.topology);
    ASSERT_TRUE(h);
    for (int id : m.binaries()) EXPECT_EQ(h->values[id], bf.incumbent->values[id]);
    EXPECT_NEAR(h->objective, bf.objective(), 1e-9);
}

TEST(Heuristic, SoundFromRootRelaxations) {
    for (int k = 0; k < 12; ++k) {
        const ModelConfig c = config(k % 3, k % 2 ? 10 : 1, k % 2 ? 1 : 0.1, k % 2 ? 0.1 : 0.01);
        const MinlpModel m = tree_model(random_dataset(5 + k % 3, 1 + k % 2, 700 + k), c);
        auto [lo, up] = bounds_of(m);
        const RelaxSolution relax = solve_relaxation(m, lo, up);
        ASSERT_EQ(relax.status, RelaxStatus::optimal);
        const auto h = primal_heuristic(relax, m, m.data, m.topology);
        ASSERT_TRUE(h) << "instance " << k;
        const ViolationReport rep = check_feasible(*h, m);
        EXPECT_TRUE(rep.passes()) << rep.describe();
        EXPECT_GE(h->objective, relax.objective - 1e-6);
    }
}

TEST(Heuristic, ZeroRelaxationGivesPrunedTree) {
    const MinlpModel m = tree_model(random_dataset(5, 2, 17), config(1));
    RelaxSolution relax;
    relax.values.assign(m.num_variables(), 0.0);
    relax.status = RelaxStatus::optimal;
    const auto h = primal_heuristic(relax, m, m.data, m.topology);
    ASSERT_TRUE(h);
    EXPECT_TRUE(check_feasible(*h, m).passes());
    for (int t = 1; t <= 3; ++t) EXPECT_EQ(h->values[m.layout.d_id(t)], 0.0);
}

TEST(Heuristic, RejectsMismatchedStructure) {
    const MinlpModel m = tree_model(random_dataset(5, 2, 17), config(1));
    RelaxSolution relax;
    relax.values.assign(m.num_variables(), 0.0);
    EXPECT_THROW(primal_heuristic(relax, m, m.data, TreeTopology(2)), std::invalid_argument);
}

TEST(SeededStart, NeighbourVoteFixesAnIsolatedLabel) {
    // One negative inside a tight positive cluster; the far negatives vote among themselves.
    const Dataset d = make_dataset({{0.50}, {0.49}, {0.51}, {0.48}, {0.52}, {0.47}, {0.0}, {0.01}, {0.02}, {0.03},
                                    {0.04}, {0.05}},
                                   {-1, 1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1});
    const std::vector<int> v = detail::neighbour_vote_labels(d, 5);
    EXPECT_EQ(v[0], 1);
    for (int i = 1; i < 12; ++i) EXPECT_EQ(v[i], d.labels[i]) << i;
    EXPECT_EQ(detail::neighbour_vote_labels(make_dataset({{0.1}}, {1}), 5), std::vector<int>{1});
}

TEST(SeededStart, FeasibleAndNeverBelowTheOptimum) {
    for (int k = 0; k < 6; ++k) {
        const MinlpModel m = tree_model(random_dataset(5 + k % 2, 1 + k % 2, 900 + k), config(1, 10, 1, 0.1));
        const auto s = svm_seeded_start(m);
        ASSERT_TRUE(s) << "instance " << k;
        const ViolationReport rep = check_feasible(*s, m);
        EXPECT_TRUE(rep.passes()) << rep.describe();
        EXPECT_NEAR(m.evaluate_objective(s->values), s->objective, 1e-6);
        EXPECT_GE(s->objective, brute_force_solve(m).objective() - 1e-6);
    }
    const MinlpModel deep = tree_model(random_dataset(12, 2, 31), config(2, 10, 1, 0.1));
    const auto s = svm_seeded_start(deep);
    ASSERT_TRUE(s);
    EXPECT_TRUE(check_feasible(*s, deep).passes());
    EXPECT_FALSE(svm_seeded_start(build_resvm_model(random_dataset(4, 1, 3), 1, 1)));
}

TEST(SeededStart, RecoversASeparatingRootOnCleanData) {
    const Dataset d = make_dataset({{0.0, 0.1}, {0.1, 0.3}, {0.2, 0.0}, {0.8, 0.9}, {0.9, 0.7}, {1.0, 1.0}},
                                   {-1, -1, -1, 1, 1, 1});
    const MinlpModel m = tree_model(d, config(1, 10, 1, 0.01));
    const auto s = svm_seeded_start(m);
    ASSERT_TRUE(s);
    EXPECT_DOUBLE_EQ(accuracy(extract_tree(m, *s), d).accuracy_percent, 100.0);
    for (int i = 0; i < 6; ++i)
        for (int t = 1; t <= 3; ++t) EXPECT_LT(s->values[m.layout.xi_id(i, t)], 0.5);
}
