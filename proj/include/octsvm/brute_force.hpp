#pragma once

// Exhaustive verification oracle. It never touches the big-M rows: it enumerates
// split sets (downward closed), routings (one leaf per observation) and relabel
// patterns, and solves the remaining convex problem directly.
//
// Per combination the problem separates by node except for the shared margin
// variable delta = max_t 1/2 ||omega_t||:
//   * a node without a split has omega_t = 0, so its cost is a 1-D piecewise
//     linear function of the intercept, minimized over its breakpoints;
//   * a node with a split is an SOCP over (omega_t, omega_t0, e) with sign
//     constraints for the observations it routes onward.
// Node values with (A) and without (B) the margin term give the lower bound
// sum_t B_t + max_t (A_t - B_t), which is exact with one split node. Remaining
// combinations are solved jointly in increasing bound order.

#include "octsvm/formulation.hpp"
#include "octsvm/socp.hpp"
#include "octsvm/solve_result.hpp"

#include <chrono>
#include <map>
#include <numeric>

namespace octsvm {

struct BruteForceOptions {
    double pattern_limit = 1e6;
    socp::Settings socp;
};

namespace oracle {

enum class Margin { none, norm, squared };

// Observations handled by one node: direction -1 left, +1 right, 0 stays (leaf).
struct Block {
    std::vector<int> points;
    std::vector<int> dirs;
    std::vector<int> xi;
};

struct BlockSolution {
    double value = 0.0;  // margin term + c1 * sum e
    std::vector<Vector> omega;
    std::vector<double> omega0;
};

inline BlockSolution solve_blocks(const Dataset& data, double c1, double W, const std::vector<Block>& blocks,
                                  Margin margin, const socp::Settings& settings) {
    const int p = data.dims();
    const bool has_margin = margin != Margin::none;
    std::vector<int> offset;
    int nv = has_margin ? 1 : 0;
    for (const Block& b : blocks) {
        offset.push_back(nv);
        nv += p + 1 + static_cast<int>(b.points.size());
    }
    socp::ConeProgram prog;
    prog.c = Vector::Zero(nv);
    if (has_margin) prog.c[0] = 1.0;
    std::vector<Eigen::Triplet<double>> g;
    std::vector<double> h;
    auto row = [&](std::initializer_list<std::pair<int, double>> terms, double rhs) {
        const int r = static_cast<int>(h.size());
        for (const auto& [col, v] : terms)
            if (v != 0.0) g.emplace_back(r, col, v);
        h.push_back(rhs);
        return r;
    };
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const Block& b = blocks[k];
        const int w = offset[k], w0 = w + p, e = w + p + 1;
        for (int j = 0; j <= p; ++j) {
            row({{w + j, 1.0}}, W);
            row({{w + j, -1.0}}, W);
        }
        for (std::size_t q = 0; q < b.points.size(); ++q) {
            const int i = b.points[q];
            const double yhat = data.labels[i] * (b.xi[q] ? -1.0 : 1.0);
            // yhat * f + e >= 1
            const int r = row({{w0, -yhat}, {e + static_cast<int>(q), -1.0}}, -1.0);
            for (int j = 0; j < p; ++j)
                if (data.features(i, j) != 0.0) g.emplace_back(r, w + j, -yhat * data.features(i, j));
            row({{e + static_cast<int>(q), -1.0}}, 0.0);
            if (b.dirs[q] != 0) {
                // dir * f >= 0
                const double s = b.dirs[q];
                const int rr = row({{w0, -s}}, 0.0);
                for (int j = 0; j < p; ++j)
                    if (data.features(i, j) != 0.0) g.emplace_back(rr, w + j, -s * data.features(i, j));
            }
            prog.c[e + static_cast<int>(q)] = c1;
        }
    }
    prog.orthant = static_cast<int>(h.size());
    if (has_margin) {
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const int w = offset[k];
            if (margin == Margin::norm) {
                // (delta, omega / 2) in the cone
                row({{0, -1.0}}, 0.0);
                for (int j = 0; j < p; ++j) row({{w + j, -0.5}}, 0.0);
                prog.soc_dims.push_back(1 + p);
            } else {
                // ||(omega, u - 1/2)|| <= u + 1/2  <=>  u >= ||omega||^2 / 2
                row({{0, -1.0}}, 0.5);
                for (int j = 0; j < p; ++j) row({{w + j, -1.0}}, 0.0);
                row({{0, -1.0}}, -0.5);
                prog.soc_dims.push_back(2 + p);
            }
        }
    }
    prog.A.resize(0, nv);
    prog.b = Vector::Zero(0);
    prog.G.resize(static_cast<int>(h.size()), nv);
    prog.G.setFromTriplets(g.begin(), g.end());
    prog.h = Eigen::Map<const Vector>(h.data(), static_cast<Eigen::Index>(h.size()));

    const socp::Result r = socp::solve(prog, settings);
    if (r.status != socp::Status::optimal)
        throw std::runtime_error(std::string("brute_force_solve: subproblem solve failed (") + socp::to_string(r.status) +
                                 ")");
    BlockSolution out;
    out.value = r.primal_objective;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        out.omega.push_back(r.x.segment(offset[k], p));
        out.omega0.push_back(r.x[offset[k] + p]);
    }
    return out;
}

struct InactiveSolution {
    double value = 0.0;  // c1 * hinge + c2 * relabels
    double omega0 = 0.0;
    std::vector<int> xi;
};

/// Node without a split: f = omega0 for every observation.
inline InactiveSolution solve_inactive(const Dataset& data, const ModelConfig& cfg, const std::vector<int>& points,
                                       const std::vector<int>& dirs) {
    const double W = cfg.coef_bound, c1 = cfg.c1, c2 = cfg.c2;
    double lo = -W, hi = W;
    for (int d : dirs) {
        if (d > 0) lo = std::max(lo, 0.0);
        if (d < 0) hi = std::min(hi, 0.0);
    }
    auto hinge = [](double v) { return std::max(0.0, 1.0 - v); };
    auto cost = [&](double w0, std::vector<int>* xi) {
        double total = 0.0;
        for (int i : points) {
            const double y = data.labels[i];
            const double keep = c1 * hinge(y * w0), flip = c2 + c1 * hinge(-y * w0);
            if (xi) xi->push_back(flip < keep ? 1 : 0);
            total += std::min(keep, flip);
        }
        return total;
    };
    const double r = c2 / c1;
    InactiveSolution best;
    best.value = std::numeric_limits<double>::infinity();
    for (double cand : {0.0, 1.0, -1.0, r / 2, -r / 2, 1.0 - r, r - 1.0, W, -W, lo, hi}) {
        if (cand < lo || cand > hi) continue;
        const double v = cost(cand, nullptr);
        if (v < best.value - 1e-12) {
            best.value = v;
            best.omega0 = cand;
        }
    }
    cost(best.omega0, &best.xi);
    return best;
}

// Downward-closed subsets of the nodes of `topo`, as per-node flags.
inline std::vector<std::vector<bool>> split_sets(const TreeTopology& topo) {
    const int T = topo.node_count();
    std::vector<std::vector<bool>> out;
    std::vector<bool> cur(T + 1, false);
    // Nodes in breadth-first order; a node may be active only if its parent is.
    auto rec = [&](auto&& self, int t) -> void {
        if (t > T) {
            out.push_back(cur);
            return;
        }
        self(self, t + 1);
        if (t == 1 || cur[topo.parent(t)]) {
            cur[t] = true;
            self(self, t + 1);
            cur[t] = false;
        }
    };
    rec(rec, 1);
    return out;
}

// Leaf reached by observation i under a routing, and the path to it.
inline std::vector<int> leaf_path(const TreeTopology& topo, int leaf_offset) {
    int t = (1 << topo.depth()) + leaf_offset;
    std::vector<int> path;
    while (t >= 1) {
        path.push_back(t);
        t /= 2;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace oracle

/// Exact optimum by enumeration. Throws std::length_error when the number of
/// admissible binary patterns exceeds the guard.
inline SolveResult brute_force_solve(const MinlpModel& model, const BruteForceOptions& options = {}) {
    using namespace oracle;
    const auto start = std::chrono::steady_clock::now();
    const Dataset& data = model.data;
    const ModelConfig& cfg = model.config;
    const VariableLayout& L = model.layout;
    const int n = data.size(), p = data.dims();
    const double W = cfg.coef_bound;
    SolveResult res;
    long solves = 0;

    if (model.kind == ModelKind::resvm) {
        if (std::ldexp(1.0, n) > options.pattern_limit)
            throw std::length_error("brute_force_solve: too many relabel patterns");
        double best = std::numeric_limits<double>::infinity();
        BlockSolution best_sol;
        std::vector<int> best_xi;
        for (long mask = 0; mask < (1L << n); ++mask) {
            Block b;
            for (int i = 0; i < n; ++i) {
                b.points.push_back(i);
                b.dirs.push_back(0);
                b.xi.push_back(static_cast<int>((mask >> i) & 1));
            }
            BlockSolution s = solve_blocks(data, cfg.c1, W, {b}, Margin::squared, options.socp);
            ++solves;
            const double v = s.value + cfg.c2 * std::accumulate(b.xi.begin(), b.xi.end(), 0);
            if (v < best - 1e-12) {
                best = v;
                best_sol = std::move(s);
                best_xi = b.xi;
            }
        }
        std::vector<double> x(model.num_variables(), 0.0);
        for (int j = 0; j < p; ++j) x[L.omega_id(1, j)] = best_sol.omega[0][j];
        x[L.omega0_id(1)] = best_sol.omega0[0];
        for (int i = 0; i < n; ++i) x[L.xi_id(i, 1)] = best_xi[i];
        res.incumbent = polish(model, x);
    } else {
        const TreeTopology& topo = model.topology;
        const int D = topo.depth(), T = topo.node_count(), leaves = 1 << D;
        if (D > 3) throw std::length_error("brute_force_solve: depth too large");
        const auto sets = split_sets(topo);
        std::vector<std::vector<int>> paths;
        for (int l = 0; l < leaves; ++l) paths.push_back(leaf_path(topo, l));
        auto dir_at = [&](const std::vector<int>& path, std::size_t k) {
            if (k + 1 >= path.size()) return 0;
            return path[k + 1] == topo.right_child(path[k]) ? 1 : -1;
        };
        // Relabel choices worth enumerating at a split node: none when the routing
        // sign already agrees with the label (keeping the label is never worse).
        auto xi_options = [&](int i, int dir) { return dir * data.labels[i] > 0 ? 1 : 2; };

        // Guard: admissible patterns = sum over split sets of prod_i sum_leaf prod_active options.
        double patterns = 0.0;
        for (const auto& act : sets) {
            double prod = 1.0;
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (const auto& path : paths) {
                    double q = 1.0;
                    for (std::size_t k = 0; k < path.size(); ++k)
                        if (act[path[k]]) q *= xi_options(i, dir_at(path, k));
                    s += q;
                }
                prod *= s;
            }
            patterns += prod;
        }
        if (patterns > options.pattern_limit)
            throw std::length_error("brute_force_solve: " + std::to_string(static_cast<long long>(patterns)) +
                                    " admissible patterns exceed the guard");

        struct NodeEntry {
            double a = 0.0, b = 0.0;  // with and without margin, including c2 * relabels
            Vector omega;
            double omega0 = 0.0;
        };
        std::map<std::vector<int>, NodeEntry> node_memo;
        std::map<std::vector<int>, InactiveSolution> inactive_memo;
        auto node_key = [](const Block& b) {
            std::vector<int> key;
            for (std::size_t q = 0; q < b.points.size(); ++q)
                key.push_back(b.points[q] * 6 + (b.dirs[q] + 1) * 2 + b.xi[q]);
            return key;
        };
        auto active_entry = [&](const Block& b) -> const NodeEntry& {
            auto key = node_key(b);
            auto it = node_memo.find(key);
            if (it != node_memo.end()) return it->second;
            const double relabel = cfg.c2 * std::accumulate(b.xi.begin(), b.xi.end(), 0);
            NodeEntry e;
            BlockSolution with = solve_blocks(data, cfg.c1, W, {b}, Margin::norm, options.socp);
            BlockSolution without = solve_blocks(data, cfg.c1, W, {b}, Margin::none, options.socp);
            solves += 2;
            e.a = with.value + relabel;
            e.b = std::min(without.value + relabel, e.a);
            e.omega = with.omega[0];
            e.omega0 = with.omega0[0];
            return node_memo.emplace(std::move(key), std::move(e)).first->second;
        };
        auto inactive_entry = [&](const std::vector<int>& pts, const std::vector<int>& dirs) -> const InactiveSolution& {
            std::vector<int> key;
            for (std::size_t q = 0; q < pts.size(); ++q) key.push_back(pts[q] * 3 + dirs[q] + 1);
            auto it = inactive_memo.find(key);
            if (it != inactive_memo.end()) return it->second;
            return inactive_memo.emplace(std::move(key), solve_inactive(data, cfg, pts, dirs)).first->second;
        };

        struct Choice {
            double value = std::numeric_limits<double>::infinity();
            int set = -1;
            std::vector<int> leaf;       // per observation
            std::vector<Block> blocks;   // per node (index t), relabels filled in
            std::vector<Vector> omega;   // per node
            std::vector<double> omega0;  // per node
        };
        Choice best;
        struct Pending {
            double bound;
            int set;
            long routing;
            std::vector<std::vector<int>> xi;  // per active node, in node order
        };
        std::vector<Pending> pending;

        long routings = 1;
        for (int i = 0; i < n; ++i) routings *= leaves;
        auto decode = [&](long r) {
            std::vector<int> leaf(n);
            for (int i = 0; i < n; ++i) {
                leaf[i] = static_cast<int>(r % leaves);
                r /= leaves;
            }
            return leaf;
        };
        auto node_blocks = [&](const std::vector<int>& leaf) {
            std::vector<Block> blocks(T + 1);
            for (int i = 0; i < n; ++i) {
                const auto& path = paths[leaf[i]];
                for (std::size_t k = 0; k < path.size(); ++k) {
                    blocks[path[k]].points.push_back(i);
                    blocks[path[k]].dirs.push_back(dir_at(path, k));
                }
            }
            return blocks;
        };

        for (int s = 0; s < static_cast<int>(sets.size()); ++s) {
            const auto& act = sets[s];
            std::vector<int> active_nodes;
            for (int t = 1; t <= T; ++t)
                if (act[t]) active_nodes.push_back(t);
            const double split_cost = cfg.c3 * static_cast<double>(active_nodes.size());
            for (long r = 0; r < routings; ++r) {
                const std::vector<int> leaf = decode(r);
                std::vector<Block> blocks = node_blocks(leaf);
                double base = split_cost;
                for (int t = 1; t <= T; ++t)
                    if (!act[t]) base += inactive_entry(blocks[t].points, blocks[t].dirs).value;
                if (base >= best.value) continue;

                // Relabel patterns per active node.
                std::vector<std::vector<std::vector<int>>> options_per_node;
                for (int t : active_nodes) {
                    const Block& b = blocks[t];
                    std::vector<int> free;
                    for (std::size_t q = 0; q < b.points.size(); ++q)
                        if (xi_options(b.points[q], b.dirs[q]) == 2) free.push_back(static_cast<int>(q));
                    std::vector<std::vector<int>> pats;
                    for (long m = 0; m < (1L << free.size()); ++m) {
                        std::vector<int> xi(b.points.size(), 0);
                        for (std::size_t f = 0; f < free.size(); ++f) xi[free[f]] = static_cast<int>((m >> f) & 1);
                        pats.push_back(std::move(xi));
                    }
                    options_per_node.push_back(std::move(pats));
                }
                // Walk the cartesian product of node patterns.
                std::vector<std::size_t> idx(active_nodes.size(), 0);
                while (true) {
                    double sum_b = 0.0, lift = 0.0;
                    for (std::size_t a = 0; a < active_nodes.size(); ++a) {
                        Block b = blocks[active_nodes[a]];
                        b.xi = options_per_node[a][idx[a]];
                        const NodeEntry& e = active_entry(b);
                        sum_b += e.b;
                        lift = std::max(lift, e.a - e.b);
                    }
                    const double bound = base + sum_b + lift;
                    if (bound < best.value) {
                        if (active_nodes.size() <= 1) {
                            best.value = bound;
                            best.set = s;
                            best.leaf = leaf;
                            best.blocks = blocks;
                            best.omega.assign(T + 1, Vector::Zero(p));
                            best.omega0.assign(T + 1, 0.0);
                            if (!active_nodes.empty()) {
                                Block& b = best.blocks[active_nodes[0]];
                                b.xi = options_per_node[0][idx[0]];
                                const NodeEntry& e = active_entry(b);
                                best.omega[active_nodes[0]] = e.omega;
                                best.omega0[active_nodes[0]] = e.omega0;
                            }
                        } else {
                            Pending pd{bound, s, r, {}};
                            for (std::size_t a = 0; a < active_nodes.size(); ++a)
                                pd.xi.push_back(options_per_node[a][idx[a]]);
                            pending.push_back(std::move(pd));
                        }
                    }
                    std::size_t a = 0;
                    while (a < idx.size() && ++idx[a] == options_per_node[a].size()) idx[a++] = 0;
                    if (a == idx.size()) break;
                }
            }
        }

        std::stable_sort(pending.begin(), pending.end(),
                         [](const Pending& x, const Pending& y) { return x.bound < y.bound; });
        for (const Pending& pd : pending) {
            if (pd.bound >= best.value - 1e-9) break;
            const auto& act = sets[pd.set];
            const std::vector<int> leaf = decode(pd.routing);
            std::vector<Block> blocks = node_blocks(leaf);
            std::vector<Block> joint;
            std::vector<int> active_nodes;
            double value = 0.0;
            for (int t = 1; t <= T; ++t) {
                if (act[t]) {
                    blocks[t].xi = pd.xi[active_nodes.size()];
                    value += cfg.c3 + cfg.c2 * std::accumulate(blocks[t].xi.begin(), blocks[t].xi.end(), 0);
                    active_nodes.push_back(t);
                    joint.push_back(blocks[t]);
                } else {
                    value += inactive_entry(blocks[t].points, blocks[t].dirs).value;
                }
            }
            const BlockSolution sol = solve_blocks(data, cfg.c1, W, joint, Margin::norm, options.socp);
            ++solves;
            value += sol.value;
            if (value < best.value) {
                best.value = value;
                best.set = pd.set;
                best.leaf = leaf;
                best.blocks = blocks;
                best.omega.assign(T + 1, Vector::Zero(p));
                best.omega0.assign(T + 1, 0.0);
                for (std::size_t a = 0; a < active_nodes.size(); ++a) {
                    best.omega[active_nodes[a]] = sol.omega[a];
                    best.omega0[active_nodes[a]] = sol.omega0[a];
                }
            }
        }

        // Lift to a full model point.
        const auto& act = sets[best.set];
        std::vector<double> x(model.num_variables(), 0.0);
        for (int t = 1; t <= T; ++t) {
            x[L.d_id(t)] = act[t] ? 1.0 : 0.0;
            const Block& b = best.blocks[t];
            std::vector<int> xi = b.xi;
            if (act[t]) {
                for (int j = 0; j < p; ++j) x[L.omega_id(t, j)] = best.omega[t][j];
                x[L.omega0_id(t)] = best.omega0[t];
            } else {
                const InactiveSolution& in = inactive_entry(b.points, b.dirs);
                x[L.omega0_id(t)] = in.omega0;
                xi = in.xi;
            }
            for (std::size_t q = 0; q < b.points.size(); ++q) {
                const int i = b.points[q];
                x[L.z_id(i, t)] = 1.0;
                x[L.xi_id(i, t)] = xi[q];
                if (b.dirs[q] != 0) x[L.theta_id(i, t)] = b.dirs[q] > 0 ? 1.0 : 0.0;
            }
        }
        res.incumbent = polish(model, x);
    }
    res.best_bound = res.incumbent->objective;
    res.gap = 0.0;
    res.status = SolveStatus::optimal;
    res.nodes_explored = solves;
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

/// Overload checking that the model was built for the given structure.
inline SolveResult brute_force_solve(const MinlpModel& model, int n, int p, const TreeTopology& topo,
                                     const BruteForceOptions& options = {}) {
    if (model.data.size() != n || model.data.dims() != p || !(model.topology == topo))
        throw std::invalid_argument("brute_force_solve: structure does not match the model");
    return brute_force_solve(model, options);
}

}  // namespace octsvm
