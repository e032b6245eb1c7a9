#pragma once

// Primal-dual interior point method for second-order cone programs
//
//     minimize    c'x
//     subject to  A x = b
//                 G x + s = h,   s in K = R+^l x Q^{q1} x ... x Q^{qk}
//
// using the homogeneous self-dual embedding, Nesterov-Todd scaling and a
// Mehrotra predictor-corrector step. The reduced KKT system is factored
// with a sparse LDL' and refined iteratively.

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

namespace octsvm::socp {

using Vector = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct ConeProgram {
    Vector c;
    SpMat A;
    Vector b;
    SpMat G;
    Vector h;
    int orthant = 0;            // leading rows of G in the nonnegative orthant
    std::vector<int> soc_dims;  // following blocks, one per second-order cone

    int num_vars() const { return static_cast<int>(c.size()); }
};

enum class Status { optimal, infeasible, unbounded, numerical_failure };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::numerical_failure: return "numerical-failure";
    }
    return "?";
}

struct Settings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    int max_iter = 200;
    double step = 0.99;
    double static_reg = 1e-8;
    int refine_steps = 10;
    // Fallback when progress stalls: the best iterate is accepted as optimal if it is
    // feasible to `feastol_inaccurate` with gap below `gaptol_inaccurate * max(1, |c'x|)`.
    double feastol_inaccurate = 1e-7;
    double gaptol_inaccurate = 1e-6;
    int stall_iterations = 10;
    bool verbose = false;  // one line per iteration on stderr
};

struct Result {
    Status status = Status::numerical_failure;
    Vector x, y, z, s;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

namespace detail {

struct Cones {
    int l = 0;
    std::vector<int> dims;
    std::vector<int> offsets;
    int m = 0;

    Cones(int orthant, const std::vector<int>& soc) : l(orthant), dims(soc) {
        int off = l;
        for (int d : dims) {
            if (d < 1) throw std::invalid_argument("second-order cone dimension must be positive");
            offsets.push_back(off);
            off += d;
        }
        m = off;
    }

    int degree() const { return l + static_cast<int>(dims.size()); }

    /// Unit element e.
    Vector unit() const {
        Vector e = Vector::Zero(m);
        e.head(l).setOnes();
        for (int off : offsets) e[off] = 1.0;
        return e;
    }

    /// Smallest alpha with u + alpha e in K; negative when u is interior.
    double shift_needed(const Vector& u) const {
        double a = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < l; ++i) a = std::max(a, -u[i]);
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const int off = offsets[k], d = dims[k];
            a = std::max(a, u.segment(off + 1, d - 1).norm() - u[off]);
        }
        if (!std::isfinite(a)) a = -1.0;
        return a;
    }

    /// Jordan product u o v.
    Vector product(const Vector& u, const Vector& v) const {
        Vector w(m);
        w.head(l) = u.head(l).cwiseProduct(v.head(l));
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const int off = offsets[k], d = dims[k];
            w[off] = u.segment(off, d).dot(v.segment(off, d));
            w.segment(off + 1, d - 1) = u[off] * v.segment(off + 1, d - 1) + v[off] * u.segment(off + 1, d - 1);
        }
        return w;
    }

    /// Solves lambda o u = v for u.
    Vector divide(const Vector& lambda, const Vector& v) const {
        Vector u(m);
        u.head(l) = v.head(l).cwiseQuotient(lambda.head(l));
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const int off = offsets[k], d = dims[k];
            const double l0 = lambda[off];
            const auto l1 = lambda.segment(off + 1, d - 1);
            const double det = l0 * l0 - l1.squaredNorm();
            const double u0 = (l0 * v[off] - l1.dot(v.segment(off + 1, d - 1))) / det;
            u[off] = u0;
            u.segment(off + 1, d - 1) = (v.segment(off + 1, d - 1) - u0 * l1) / l0;
        }
        return u;
    }

    /// Largest alpha (possibly +inf) with u + alpha du in K, for interior u.
    double max_step(const Vector& u, const Vector& du) const {
        double alpha = std::numeric_limits<double>::infinity();
        for (int i = 0; i < l; ++i)
            if (du[i] < 0.0) alpha = std::min(alpha, -u[i] / du[i]);
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const int off = offsets[k], d = dims[k];
            alpha = std::min(alpha, soc_step(u.segment(off, d), du.segment(off, d)));
        }
        return alpha;
    }

    static double soc_step(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& du) {
        const int d = static_cast<int>(u.size());
        if (d == 1) return du[0] < 0.0 ? -u[0] / du[0] : std::numeric_limits<double>::infinity();
        // q(alpha) = (u0 + alpha du0)^2 - ||u1 + alpha du1||^2 = a alpha^2 + 2 b alpha + c
        const auto u1 = u.tail(d - 1);
        const auto d1 = du.tail(d - 1);
        const double a = du[0] * du[0] - d1.squaredNorm();
        const double b = u[0] * du[0] - u1.dot(d1);
        const double c = std::max(0.0, u[0] * u[0] - u1.squaredNorm());
        double alpha = std::numeric_limits<double>::infinity();
        if (du[0] < 0.0) alpha = -u[0] / du[0];
        const double scale = std::max({std::abs(a), std::abs(b), c, 1e-300});
        if (std::abs(a) <= 1e-14 * scale) {
            if (b < 0.0) alpha = std::min(alpha, -c / (2.0 * b));
        } else {
            const double disc = b * b - a * c;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double q = -(b + (b >= 0.0 ? sq : -sq));
                const double r1 = q / a;
                const double r2 = q != 0.0 ? c / q : std::numeric_limits<double>::infinity();
                for (double r : {r1, r2})
                    if (r > 0.0) alpha = std::min(alpha, r);
            }
        }
        return alpha;
    }
};

/// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
struct Scaling {
    Vector orthant;              // sqrt(s / z)
    std::vector<double> eta;     // per cone
    std::vector<Vector> wbar;    // per cone, wbar' J wbar = 1

    void identity(const Cones& K) {
        orthant = Vector::Ones(K.l);
        eta.assign(K.dims.size(), 1.0);
        wbar.clear();
        for (int d : K.dims) {
            Vector w = Vector::Zero(d);
            w[0] = 1.0;
            wbar.push_back(w);
        }
    }

    bool update(const Cones& K, const Vector& s, const Vector& z) {
        orthant = (s.head(K.l).cwiseQuotient(z.head(K.l))).cwiseSqrt();
        eta.resize(K.dims.size());
        wbar.resize(K.dims.size());
        for (std::size_t k = 0; k < K.dims.size(); ++k) {
            const int off = K.offsets[k], d = K.dims[k];
            const auto sk = s.segment(off, d);
            const auto zk = z.segment(off, d);
            const double sres = sk[0] * sk[0] - sk.tail(d - 1).squaredNorm();
            const double zres = zk[0] * zk[0] - zk.tail(d - 1).squaredNorm();
            if (!(sres > 0.0) || !(zres > 0.0)) return false;
            const Vector sb = sk / std::sqrt(sres);
            const Vector zb = zk / std::sqrt(zres);
            const double gamma = std::sqrt(std::max(0.5 * (1.0 + sb.dot(zb)), 1e-300));
            Vector w(d);
            w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
            w.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
            wbar[k] = w;
            eta[k] = std::pow(sres / zres, 0.25);
        }
        return true;
    }

    /// W v (inverse = false) or W^{-1} v (inverse = true).
    Vector apply(const Cones& K, const Vector& v, bool inverse) const {
        Vector out(K.m);
        if (inverse)
            out.head(K.l) = v.head(K.l).cwiseQuotient(orthant);
        else
            out.head(K.l) = v.head(K.l).cwiseProduct(orthant);
        for (std::size_t k = 0; k < K.dims.size(); ++k) {
            const int off = K.offsets[k], d = K.dims[k];
            const Vector& w = wbar[k];
            const double w0 = w[0];
            const auto w1 = w.tail(d - 1);
            const auto v1 = v.segment(off + 1, d - 1);
            const double v0 = v[off];
            const double dot = w1.dot(v1);
            if (!inverse) {
                out[off] = eta[k] * (w0 * v0 + dot);
                out.segment(off + 1, d - 1) = eta[k] * (v0 * w1 + v1 + (dot / (1.0 + w0)) * w1);
            } else {
                out[off] = (w0 * v0 - dot) / eta[k];
                out.segment(off + 1, d - 1) = (-v0 * w1 + v1 + (dot / (1.0 + w0)) * w1) / eta[k];
            }
        }
        return out;
    }

    /// W^{-2} v.
    Vector apply_inv_sq(const Cones& K, const Vector& v) const {
        Vector out(K.m);
        out.head(K.l) = v.head(K.l).cwiseQuotient(orthant.cwiseProduct(orthant));
        for (std::size_t k = 0; k < K.dims.size(); ++k) {
            const int off = K.offsets[k], d = K.dims[k];
            // (1/eta^2) (2 (J w)(J w)' - J) v
            Vector jw = wbar[k];
            jw.tail(d - 1) *= -1.0;
            const auto vk = v.segment(off, d);
            Vector r = 2.0 * jw.dot(vk) * jw;
            r[0] -= vk[0];
            r.tail(d - 1) += vk.tail(d - 1);
            out.segment(off, d) = r / (eta[k] * eta[k]);
        }
        return out;
    }
};

/// Quasi-definite KKT matrix [reg I, A', G'; A, -reg I, 0; G, 0, -W^2 - reg I] with a fixed
/// sparsity pattern. Solves are refined against the unregularized system.
class KktSystem {
public:
    KktSystem(const ConeProgram& prog, const Cones& K, double reg) : prog_(prog), K_(K), reg_(reg) {
        n_ = prog.num_vars();
        p_ = static_cast<int>(prog.A.rows());
        const int zoff = n_ + p_;
        const int dim = zoff + K.m;

        std::vector<Eigen::Triplet<double>> trip;
        for (int j = 0; j < dim; ++j) trip.emplace_back(j, j, 0.0);
        for (int j = 0; j < n_; ++j) {
            for (SpMat::InnerIterator it(prog.A, j); it; ++it) trip.emplace_back(n_ + it.row(), j, 0.0);
            for (SpMat::InnerIterator it(prog.G, j); it; ++it) trip.emplace_back(zoff + it.row(), j, 0.0);
        }
        for (std::size_t k = 0; k < K.dims.size(); ++k) {
            const int off = zoff + K.offsets[k];
            for (int a = 0; a < K.dims[k]; ++a)
                for (int b = 0; b < a; ++b) trip.emplace_back(off + a, off + b, 0.0);
        }
        kkt_.resize(dim, dim);
        kkt_.setFromTriplets(trip.begin(), trip.end(), [](double x, double) { return x; });
        kkt_.makeCompressed();

        auto pos = [&](int r, int c) {
            const int* begin = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[c];
            const int* end = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[c + 1];
            return static_cast<int>(std::lower_bound(begin, end, r) - kkt_.innerIndexPtr());
        };
        diag_pos_.resize(dim);
        for (int j = 0; j < dim; ++j) diag_pos_[j] = pos(j, j);
        for (int j = 0; j < n_; ++j) {
            for (SpMat::InnerIterator it(prog.A, j); it; ++it) fixed_.push_back({pos(n_ + it.row(), j), it.value()});
            for (SpMat::InnerIterator it(prog.G, j); it; ++it) fixed_.push_back({pos(zoff + it.row(), j), it.value()});
        }
        cone_pos_.resize(K.dims.size());
        for (std::size_t k = 0; k < K.dims.size(); ++k) {
            const int off = zoff + K.offsets[k], d = K.dims[k];
            cone_pos_[k].assign(d * d, -1);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b <= a; ++b) cone_pos_[k][a * d + b] = pos(off + a, off + b);
        }
        solver_.analyzePattern(kkt_);
    }

    /// Refactors for the current scaling; false on breakdown.
    bool factor(const Scaling& W) {
        W_ = &W;
        const int zoff = n_ + p_;
        for (int attempt = 0; attempt < 6; ++attempt) {
            double* values = kkt_.valuePtr();
            std::fill(values, values + kkt_.nonZeros(), 0.0);
            for (int j = 0; j < n_; ++j) values[diag_pos_[j]] = reg_;
            for (int j = n_; j < zoff + K_.m; ++j) values[diag_pos_[j]] = -reg_;
            for (const auto& [ps, v] : fixed_) values[ps] = v;
            for (int r = 0; r < K_.l; ++r) values[diag_pos_[zoff + r]] -= W.orthant[r] * W.orthant[r];
            for (std::size_t k = 0; k < K_.dims.size(); ++k) {
                // W^2 = eta^2 (2 w w' - J)
                const int d = K_.dims[k];
                const Vector& w = W.wbar[k];
                const double e2 = W.eta[k] * W.eta[k];
                for (int a = 0; a < d; ++a) {
                    for (int b = 0; b <= a; ++b) {
                        double v = 2.0 * w[a] * w[b];
                        if (a == b) v += a == 0 ? -1.0 : 1.0;
                        values[cone_pos_[k][a * d + b]] -= e2 * v;
                    }
                }
            }
            solver_.factorize(kkt_);
            if (solver_.info() == Eigen::Success && solver_.vectorD().allFinite()) return true;
            reg_ *= 100.0;
        }
        return false;
    }

    /// Solves [0 A' G'; A 0 0; G 0 -W^2] [x; y; z] = [r1; r2; r3].
    void solve(const Vector& r1, const Vector& r2, const Vector& r3, Vector& x, Vector& y, Vector& z,
               int refine_steps) const {
        const int zoff = n_ + p_;
        Vector rhs(zoff + K_.m);
        rhs << r1, r2, r3;
        Vector sol = solver_.solve(rhs);
        const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
        Vector err = rhs - apply(sol);
        double norm = err.lpNorm<Eigen::Infinity>();
        for (int it = 0; it < refine_steps && norm > 1e-14 * scale; ++it) {
            const Vector next = sol + solver_.solve(err);
            Vector next_err = rhs - apply(next);
            const double next_norm = next_err.lpNorm<Eigen::Infinity>();
            if (!(next_norm < norm)) break;
            sol = next;
            err.swap(next_err);
            norm = next_norm;
        }
        x = sol.head(n_);
        y = sol.segment(n_, p_);
        z = sol.tail(K_.m);
    }

private:
    Vector apply(const Vector& v) const {
        const int zoff = n_ + p_;
        const Vector x = v.head(n_);
        const Vector y = v.segment(n_, p_);
        const Vector z = v.tail(K_.m);
        Vector out(zoff + K_.m);
        out.head(n_) = prog_.G.transpose() * z;
        if (p_ > 0) {
            out.head(n_) += prog_.A.transpose() * y;
            out.segment(n_, p_) = prog_.A * x;
        }
        out.tail(K_.m) = prog_.G * x - W_->apply(K_, W_->apply(K_, z, false), false);
        return out;
    }

    const ConeProgram& prog_;
    const Cones& K_;
    double reg_;
    int n_ = 0, p_ = 0;
    SpMat kkt_;
    std::vector<int> diag_pos_;
    std::vector<std::pair<int, double>> fixed_;
    std::vector<std::vector<int>> cone_pos_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> solver_;
    const Scaling* W_ = nullptr;
};

}  // namespace detail

inline Result solve(const ConeProgram& prog, const Settings& settings = {}) {
    using detail::Cones;
    using detail::Scaling;
    const int n = prog.num_vars();
    const int p = static_cast<int>(prog.A.rows());
    const Cones K(prog.orthant, prog.soc_dims);
    if (prog.G.rows() != K.m || prog.h.size() != K.m || prog.G.cols() != n || prog.A.cols() != n || prog.b.size() != p)
        throw std::invalid_argument("socp::solve: inconsistent problem dimensions");

    Result res;
    detail::KktSystem kkt(prog, K, settings.static_reg);
    Scaling W;
    W.identity(K);
    if (!kkt.factor(W)) return res;

    const Vector e = K.unit();
    Vector x, y, z, s;
    {
        // Primal start: least-squares fit of G x + s = h with A x = b.
        Vector xh, yh, zh;
        kkt.solve(Vector::Zero(n), prog.b, prog.h, xh, yh, zh, settings.refine_steps);
        s = -zh;
        const double ap = K.shift_needed(s);
        if (ap >= -1e-8) s += (1.0 + ap) * e;
        x = xh;
        // Dual start.
        Vector xd;
        kkt.solve(-prog.c, Vector::Zero(p), Vector::Zero(K.m), xd, y, z, settings.refine_steps);
        const double ad = K.shift_needed(z);
        if (ad >= -1e-8) z += (1.0 + ad) * e;
    }
    double tau = 1.0, kap = 1.0;

    const double nb = std::max(1.0, prog.b.norm());
    const double nh = std::max(1.0, prog.h.norm());
    const double nc = std::max(1.0, prog.c.norm());
    const int degree = K.degree();

    struct Snapshot {
        Vector x, y, z, s;
        double tau = 1.0, merit = std::numeric_limits<double>::infinity();
        double pres = 0, dres = 0, gap = 0, pcost = 0, dcost = 0;
    } best;
    int stalled = 0;

    for (int iter = 0; iter <= settings.max_iter; ++iter) {
        res.iterations = iter;
        const Vector rx = prog.A.transpose() * y + prog.G.transpose() * z + prog.c * tau;
        const Vector ry = prog.A * x - prog.b * tau;
        const Vector rz = prog.G * x + s - prog.h * tau;
        const double cx = prog.c.dot(x), by = prog.b.dot(y), hz = prog.h.dot(z);
        const double rt = kap + cx + by + hz;
        const double sz = s.dot(z);
        const double mu = (sz + tau * kap) / (degree + 1);

        const double pres = std::max(ry.norm() / nb, rz.norm() / nh) / tau;
        const double dres = rx.norm() / nc / tau;
        const double pcost = cx / tau, dcost = -(by + hz) / tau;
        const double gap = sz / (tau * tau);
        double relgap = std::numeric_limits<double>::infinity();
        if (pcost < 0.0) relgap = gap / -pcost;
        else if (dcost > 0.0) relgap = gap / dcost;
        res.primal_residual = pres;
        res.dual_residual = dres;
        res.gap = gap;
        res.primal_objective = pcost;
        res.dual_objective = dcost;
        if (settings.verbose)
            std::fprintf(stderr, "%3d pcost %+.9e dcost %+.9e gap %.2e pres %.2e dres %.2e tau %.2e kap %.2e\n", iter,
                         pcost, dcost, gap, pres, dres, tau, kap);

        const double merit = std::max({pres, dres, gap / std::max(1.0, std::abs(pcost))});
        if (merit < 0.9 * best.merit) {
            stalled = 0;
        } else if (++stalled >= settings.stall_iterations) {
            if (settings.verbose) std::fprintf(stderr, "stopped: stalled\n");
            break;
        }
        if (merit < best.merit) best = {x, y, z, s, tau, merit, pres, dres, gap, pcost, dcost};

        if (pres < settings.feastol && dres < settings.feastol && (gap < settings.abstol || relgap < settings.reltol)) {
            res.status = Status::optimal;
            res.x = x / tau;
            res.y = y / tau;
            res.z = z / tau;
            res.s = s / tau;
            return res;
        }
        if (by + hz < 0.0) {
            const double cert = (prog.A.transpose() * y + prog.G.transpose() * z).norm() / -(by + hz);
            if (cert < settings.feastol) {
                res.status = Status::infeasible;
                res.y = y / -(by + hz);
                res.z = z / -(by + hz);
                return res;
            }
        }
        if (cx < 0.0) {
            const double cert = std::max((prog.A * x).norm(), (prog.G * x + s).norm()) / -cx;
            if (cert < settings.feastol) {
                res.status = Status::unbounded;
                res.x = x / -cx;
                return res;
            }
        }
        if (iter == settings.max_iter) break;

        auto stop = [&](const char* why) {
            if (settings.verbose) std::fprintf(stderr, "stopped: %s\n", why);
        };
        if (!W.update(K, s, z)) {
            stop("scaling");
            break;
        }
        const Vector lambda = W.apply(K, z, false);
        if (!kkt.factor(W)) {
            stop("factorization");
            break;
        }

        Vector x1, y1, z1;
        kkt.solve(-prog.c, prog.b, prog.h, x1, y1, z1, settings.refine_steps);
        const double denom = prog.c.dot(x1) + prog.b.dot(y1) + prog.h.dot(z1) - kap / tau;

        auto direction = [&](double eta_res, const Vector& ds_rhs, double dk, Vector& dx, Vector& dy, Vector& dz,
                             Vector& ds, double& dtau, double& dkap) {
            const Vector u = K.divide(lambda, ds_rhs);
            const Vector wu = W.apply(K, u, false);
            Vector x2, y2, z2;
            kkt.solve(-eta_res * rx, -eta_res * ry, -eta_res * rz - wu, x2, y2, z2, settings.refine_steps);
            dtau = (-eta_res * rt - dk / tau - prog.c.dot(x2) - prog.b.dot(y2) - prog.h.dot(z2)) / denom;
            dx = x2 + dtau * x1;
            dy = y2 + dtau * y1;
            dz = z2 + dtau * z1;
            ds = wu - W.apply(K, W.apply(K, dz, false), false);
            dkap = (dk - kap * dtau) / tau;
        };
        auto step_to_boundary = [&](const Vector& ds, const Vector& dz, double dtau, double dkap) {
            double a = std::min(K.max_step(s, ds), K.max_step(z, dz));
            if (dtau < 0.0) a = std::min(a, -tau / dtau);
            if (dkap < 0.0) a = std::min(a, -kap / dkap);
            return a;
        };

        // Predictor.
        Vector dxa, dya, dza, dsa;
        double dtaua = 0.0, dkapa = 0.0;
        const Vector ll = K.product(lambda, lambda);
        direction(1.0, -ll, -tau * kap, dxa, dya, dza, dsa, dtaua, dkapa);
        const double alpha_aff = std::min(1.0, step_to_boundary(dsa, dza, dtaua, dkapa));
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 0.0, 1.0);

        // Corrector.
        const Vector dsa_scaled = W.apply(K, dsa, true);
        const Vector dza_scaled = W.apply(K, dza, false);
        const Vector ds_rhs = -ll - K.product(dsa_scaled, dza_scaled) + sigma * mu * e;
        const double dk = -tau * kap - dtaua * dkapa + sigma * mu;
        Vector dx, dy, dz, ds;
        double dtau = 0.0, dkap = 0.0;
        direction(1.0 - sigma, ds_rhs, dk, dx, dy, dz, ds, dtau, dkap);
        const double alpha = std::min(1.0, settings.step * step_to_boundary(ds, dz, dtau, dkap));
        if (!(alpha > 1e-14) || !dx.allFinite()) {
            stop("step");
            break;
        }

        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kap += alpha * dkap;
        if (!(tau > 0.0) || !(kap > 0.0)) {
            stop("embedding");
            break;
        }
    }
    res.status = Status::numerical_failure;
    if (std::isfinite(best.merit)) {
        x = best.x;
        y = best.y;
        z = best.z;
        s = best.s;
        tau = best.tau;
        res.primal_residual = best.pres;
        res.dual_residual = best.dres;
        res.gap = best.gap;
        res.primal_objective = best.pcost;
        res.dual_objective = best.dcost;
        if (best.pres <= settings.feastol_inaccurate && best.dres <= settings.feastol_inaccurate &&
            best.gap <= settings.gaptol_inaccurate * std::max(1.0, std::abs(best.pcost)))
            res.status = Status::optimal;
    }
    res.x = x / tau;
    res.y = y / tau;
    res.z = z / tau;
    res.s = s / tau;
    return res;
}

}  // namespace octsvm::socp
