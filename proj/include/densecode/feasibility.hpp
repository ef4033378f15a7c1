#pragma once

// Multi-restart local search for mutually Lambda-orthogonal message sets.
//
// Every message j is parameterized by a (kappa_j d) x d isometry V_j whose
// d x d row blocks are its Kraus operators, so completeness holds by
// construction. The objective is the sum over ordered pairs of operators from
// different messages of |Tr(K Lambda K'^dagger)|^2, minimized on the product
// of complex Stiefel manifolds with polar retraction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "densecode/protocol.hpp"
#include "densecode/qmat.hpp"

namespace densecode {

enum class Mode { unitary_only, general };

inline std::string to_string(Mode m) { return m == Mode::unitary_only ? "unitary" : "general"; }

inline Mode parse_mode(const std::string& s) {
    if (s == "unitary" || s == "unitary-only" || s == "unitary_only") return Mode::unitary_only;
    if (s == "general") return Mode::general;
    throw Error("unknown mode '" + s + "' (expected unitary or general)");
}

/// Kraus ranks (kappa_1, ..., kappa_N) of a candidate message set.
class RankProfile {
public:
    RankProfile() = default;
    explicit RankProfile(std::vector<int> kappas) : kappas_(std::move(kappas)) {
        if (kappas_.empty()) throw Error("rank profile must name at least one message");
        for (int k : kappas_)
            if (k < 1) throw Error("Kraus ranks must be positive");
    }

    static RankProfile unitary(int n) { return RankProfile(std::vector<int>(n, 1)); }

    int size() const { return static_cast<int>(kappas_.size()); }
    int total() const { return std::accumulate(kappas_.begin(), kappas_.end(), 0); }
    int operator[](int j) const { return kappas_[j]; }
    const std::vector<int>& kappas() const { return kappas_; }
    bool is_unitary() const {
        return std::all_of(kappas_.begin(), kappas_.end(), [](int k) { return k == 1; });
    }

    RankProfile canonical() const {
        auto k = kappas_;
        std::sort(k.begin(), k.end());
        return RankProfile(std::move(k));
    }

    /// Throws unless sum kappa_j <= d^2.
    void check_bound(int d) const {
        if (total() > d * d)
            throw Error("rank profile " + str() + " has total Kraus rank " + std::to_string(total()) +
                        " > d^2 = " + std::to_string(d * d) + "; no more than d^2 linearly independent states exist");
    }

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < kappas_.size(); ++i) s += (i ? "," : "") + std::to_string(kappas_[i]);
        return s;
    }

    friend bool operator==(const RankProfile&, const RankProfile&) = default;

private:
    std::vector<int> kappas_;
};

enum class Method { levenberg_marquardt, gradient_descent };

struct SearchConfig {
    double success_tol = 1e-11;
    int max_iterations = 5000;
    int restarts = 20;
    std::uint64_t seed = 0;
    bool gauge_fix_identity = true;
    Method method = Method::levenberg_marquardt;

    // Backtracking line search (gradient descent) / step acceptance (Levenberg-Marquardt).
    double initial_step = 1e-1;
    double shrink = 0.5;
    double armijo = 1e-4;

    // A restart is abandoned once the cost has dropped by less than a relative
    // stall_decrease over the last stall_window iterations.
    int stall_window = 50;
    double stall_decrease = 1e-3;

    // Once below success_tol, keep iterating (at most polish_iterations times)
    // until the cost reaches polish_floor; witnesses at singular points such
    // as lambda_0 = d/N converge only linearly and need the room.
    int polish_iterations = 1000;
    double polish_floor = 1e-27;

    // Largest Kraus rank tried by general-mode profile enumeration.
    int max_kappa = 2;

    // Worker threads for independent restarts; results never depend on it.
    int jobs = 1;

    void validate() const {
        if (!(success_tol > 0.0)) throw Error("success_tol must be positive");
        if (restarts < 1) throw Error("restarts must be at least 1");
        if (max_iterations < 1) throw Error("max_iterations must be at least 1");
        if (max_kappa < 1) throw Error("max_kappa must be at least 1");
    }
};

struct RestartRecord {
    std::uint64_t seed = 0;
    double final_cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

enum class Verdict { feasible, infeasible };

inline std::string to_string(Verdict v) { return v == Verdict::feasible ? "feasible" : "infeasible"; }

struct SearchOutcome {
    Verdict verdict = Verdict::infeasible;
    double best_cost = std::numeric_limits<double>::infinity();
    std::optional<MessageSet> witness;
    RankProfile profile;  ///< the profile searched; the witness may realize a smaller one
    std::uint64_t seed = 0;  ///< the configuration seed the restart seeds derive from
    std::vector<RestartRecord> restart_log;

    bool feasible() const { return verdict == Verdict::feasible; }
};

/// sum over ordered pairs of Kraus operators in different messages of |Tr(K Lambda K'^dagger)|^2
inline double orthogonality_cost(const MessageSet& set) {
    const ComplexMatrix g = pairwise_gram(set);
    double cost = 0.0;
    for (int j = 0, a0 = 0; j < set.size(); a0 += set[j].kraus_rank(), ++j) {
        const int kj = set[j].kraus_rank();
        // everything outside the diagonal block of message j, rows of message j
        cost += g.middleRows(a0, kj).cwiseAbs2().sum() - g.block(a0, a0, kj, kj).cwiseAbs2().sum();
    }
    return cost;
}

/// Projection of an ambient direction onto the tangent space of the Stiefel manifold at v.
inline ComplexMatrix project_tangent(const ComplexMatrix& v, const ComplexMatrix& z) {
    const ComplexMatrix s = v.adjoint() * z;
    return z - v * (0.5 * (s + s.adjoint()));
}

/// Riemannian gradient of orthogonality_cost, one stacked (kappa_j d) x d
/// tangent per message, for the metric Re Tr(A^dagger B).
inline std::vector<ComplexMatrix> cost_gradient(const MessageSet& set) {
    const ComplexMatrix g = pairwise_gram(set);
    const Eigen::VectorXd lam = set.spectrum().diagonal();
    const int d = set.dim();
    std::vector<const ComplexMatrix*> ops;
    std::vector<int> owner;
    for (int j = 0; j < set.size(); ++j)
        for (const auto& k : set[j].kraus()) {
            ops.push_back(&k);
            owner.push_back(j);
        }
    std::vector<ComplexMatrix> grads;
    for (int j = 0, a = 0; j < set.size(); ++j) {
        ComplexMatrix euclid(set[j].kraus_rank() * d, d);
        for (int k = 0; k < set[j].kraus_rank(); ++k, ++a) {
            ComplexMatrix acc = ComplexMatrix::Zero(d, d);
            for (std::size_t b = 0; b < ops.size(); ++b)
                if (owner[b] != j) acc += g(a, b) * (*ops[b]);
            euclid.middleRows(k * d, d) = 4.0 * acc * lam.asDiagonal();
        }
        grads.push_back(project_tangent(set[j].to_isometry(), euclid));
    }
    return grads;
}

/// Polar projection of v + step back onto the isometries: U W^dagger from the thin SVD.
inline ComplexMatrix retract(const ComplexMatrix& v, const ComplexMatrix& step) {
    const ComplexMatrix m = v + step;
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(s.size() - 1) <= 1e-12 * std::max(1.0, s(0)))
        throw Error("retract: projection is rank deficient (smallest singular value " +
                    std::to_string(s.size() ? s(s.size() - 1) : 0.0) + ")");
    return svd.matrixU() * svd.matrixV().adjoint();
}

namespace detail {

/// Least-squares formulation: real residual vector (Re, Im of every cross
/// pair a < b) with cost = 2 ||r||^2, Jacobian in an orthonormal real basis
/// of the tangent space of every free message.
class OrthogonalityProblem {
public:
    OrthogonalityProblem(const SchmidtSpectrum& spec, const RankProfile& profile, bool freeze_first)
        : d_(spec.dim()), lam_(spec.diagonal()), kappas_(profile.kappas()) {
        for (int j = 0, a = 0; j < profile.size(); ++j) {
            offset_.push_back(a);
            for (int k = 0; k < kappas_[j]; ++k, ++a) owner_.push_back(j);
        }
        ops_ = static_cast<int>(owner_.size());
        pair_index_.assign(ops_ * ops_, -1);
        for (int a = 0; a < ops_; ++a)
            for (int b = a + 1; b < ops_; ++b)
                if (owner_[a] != owner_[b]) {
                    pair_index_[a * ops_ + b] = static_cast<int>(pairs_.size());
                    pairs_.emplace_back(a, b);
                }
        frozen_ = freeze_first && kappas_[0] == 1;
    }

    int messages() const { return static_cast<int>(kappas_.size()); }
    int pair_count() const { return static_cast<int>(pairs_.size()); }
    bool frozen_first() const { return frozen_; }

    /// Flattened operators F (d^2 x ops) and their Lambda-weighted copies.
    void flatten(const std::vector<ComplexMatrix>& v, ComplexMatrix& flat, ComplexMatrix& weighted) const {
        flat.resize(d_ * d_, ops_);
        weighted.resize(d_ * d_, ops_);
        for (int a = 0; a < ops_; ++a) {
            const int j = owner_[a];
            const int k = a - offset_[j];
            for (int q = 0; q < d_; ++q)
                for (int p = 0; p < d_; ++p) {
                    const Complex x = v[j](k * d_ + p, q);
                    flat(q * d_ + p, a) = x;
                    weighted(q * d_ + p, a) = x * lam_(q);
                }
        }
    }

    Eigen::VectorXd residuals(const std::vector<ComplexMatrix>& v) const {
        ComplexMatrix flat, weighted;
        flatten(v, flat, weighted);
        const ComplexMatrix g = flat.adjoint() * weighted;  // g(b, a) = Tr(K_a Lambda K_b^dagger)
        Eigen::VectorXd r(2 * pair_count());
        for (int i = 0; i < pair_count(); ++i) {
            const Complex x = g(pairs_[i].second, pairs_[i].first);
            r(i) = x.real();
            r(i + pair_count()) = x.imag();
        }
        return r;
    }

    static double cost_of(const Eigen::VectorXd& r) { return 2.0 * r.squaredNorm(); }

    /// Orthonormal (real Frobenius) basis of the tangent space at isometry v.
    std::vector<ComplexMatrix> tangent_basis(const ComplexMatrix& v) const {
        const int n = static_cast<int>(v.rows());
        std::vector<ComplexMatrix> basis;
        const double r2 = 1.0 / std::sqrt(2.0);
        const Complex i1(0.0, 1.0);
        for (int a = 0; a < d_; ++a) {
            ComplexMatrix om = ComplexMatrix::Zero(d_, d_);
            om(a, a) = i1;
            basis.push_back(v * om);
            for (int b = a + 1; b < d_; ++b) {
                om.setZero();
                om(a, b) = r2;
                om(b, a) = -r2;
                basis.push_back(v * om);
                om.setZero();
                om(a, b) = i1 * r2;
                om(b, a) = i1 * r2;
                basis.push_back(v * om);
            }
        }
        if (n > d_) {
            Eigen::HouseholderQR<ComplexMatrix> qr(v);
            const ComplexMatrix perp = (qr.householderQ() * ComplexMatrix::Identity(n, n)).rightCols(n - d_);
            for (int c = 0; c < d_; ++c)
                for (int r = 0; r < n - d_; ++r) {
                    ComplexMatrix z = ComplexMatrix::Zero(n, d_);
                    z.col(c) = perp.col(r);
                    basis.push_back(z);
                    z.col(c) *= i1;
                    basis.push_back(z);
                }
        }
        return basis;
    }

    struct Linearization {
        Eigen::MatrixXd jac;
        std::vector<std::pair<int, const ComplexMatrix*>> directions;  // (message, basis element)
        std::vector<std::vector<ComplexMatrix>> bases;
    };

    void linearize(const std::vector<ComplexMatrix>& v, Linearization& lin) const {
        ComplexMatrix flat, weighted;
        flatten(v, flat, weighted);
        lin.bases.assign(messages(), {});
        lin.directions.clear();
        for (int j = frozen_ ? 1 : 0; j < messages(); ++j) {
            lin.bases[j] = tangent_basis(v[j]);
        }
        for (int j = 0; j < messages(); ++j)
            for (const auto& e : lin.bases[j]) lin.directions.emplace_back(j, &e);

        const int rows = 2 * pair_count();
        lin.jac.setZero(rows, static_cast<Eigen::Index>(lin.directions.size()));
        const ComplexMatrix flat_adj = flat.adjoint();
        ComplexVector ew(d_ * d_);
        for (std::size_t col = 0; col < lin.directions.size(); ++col) {
            const int j = lin.directions[col].first;
            const ComplexMatrix& e = *lin.directions[col].second;
            for (int k = 0; k < kappas_[j]; ++k) {
                const int a = offset_[j] + k;
                for (int q = 0; q < d_; ++q)
                    for (int p = 0; p < d_; ++p) ew(q * d_ + p) = e(k * d_ + p, q) * lam_(q);
                // c(b) = Tr(E_k Lambda K_b^dagger)
                const ComplexVector c = flat_adj * ew;
                for (int b = 0; b < ops_; ++b) {
                    if (owner_[b] == j) continue;
                    Complex dr;
                    int idx;
                    if (a < b) {
                        idx = pair_index_[a * ops_ + b];
                        dr = c(b);
                    } else {
                        idx = pair_index_[b * ops_ + a];
                        dr = std::conj(c(b));
                    }
                    lin.jac(idx, col) = dr.real();
                    lin.jac(idx + pair_count(), col) = dr.imag();
                }
            }
        }
    }

private:
    int d_;
    Eigen::VectorXd lam_;
    std::vector<int> kappas_;
    std::vector<int> offset_, owner_;
    int ops_ = 0;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<int> pair_index_;
    bool frozen_ = false;
};

struct LocalResult {
    std::vector<ComplexMatrix> point;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline bool stalled(const std::vector<double>& history, const SearchConfig& cfg) {
    const int w = cfg.stall_window;
    if (w <= 0 || static_cast<int>(history.size()) <= w) return false;
    const double then = history[history.size() - 1 - w];
    const double now = history.back();
    return then - now < cfg.stall_decrease * then;
}

inline LocalResult minimize_lm(const OrthogonalityProblem& prob, std::vector<ComplexMatrix> v, const SearchConfig& cfg) {
    LocalResult res;
    Eigen::VectorXd r = prob.residuals(v);
    double cost = OrthogonalityProblem::cost_of(r);
    std::vector<double> history{cost};
    OrthogonalityProblem::Linearization lin;
    double mu = -1.0;
    double nu = 2.0;
    int polish_left = cfg.polish_iterations;
    bool reached = cost <= cfg.success_tol;
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        if (reached) {
            if (polish_left-- <= 0 || cost <= cfg.polish_floor) break;
        } else if (stalled(history, cfg)) {
            break;
        }
        prob.linearize(v, lin);
        const Eigen::MatrixXd& jac = lin.jac;
        const auto rows = jac.rows(), cols = jac.cols();
        if (cols == 0) break;
        const bool wide = rows <= cols;
        Eigen::MatrixXd normal = wide ? Eigen::MatrixXd(jac * jac.transpose()) : Eigen::MatrixXd(jac.transpose() * jac);
        if (mu < 0.0) mu = 1e-3 * std::max(normal.diagonal().maxCoeff(), 1e-12);
        const Eigen::VectorXd jtr = jac.transpose() * r;

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = normal;
            damped.diagonal().array() += mu;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
            Eigen::VectorXd step = wide ? Eigen::VectorXd(-(jac.transpose() * ldlt.solve(r))) : Eigen::VectorXd(-ldlt.solve(jtr));
            // Gauss-Newton model decrease of cost = 2||r||^2
            const double predicted = 2.0 * (r.squaredNorm() - (r + jac * step).squaredNorm());
            std::vector<ComplexMatrix> trial = v;
            std::vector<ComplexMatrix> dz(v.size());
            for (std::size_t j = 0; j < v.size(); ++j) dz[j] = ComplexMatrix::Zero(v[j].rows(), v[j].cols());
            for (Eigen::Index c = 0; c < cols; ++c)
                dz[lin.directions[c].first] += step(c) * (*lin.directions[c].second);
            bool ok = true;
            for (std::size_t j = 0; j < v.size() && ok; ++j) {
                if (lin.bases[j].empty()) continue;
                try {
                    trial[j] = retract(v[j], dz[j]);
                } catch (const Error&) {
                    ok = false;
                }
            }
            if (ok) {
                const Eigen::VectorXd rt = prob.residuals(trial);
                const double ct = OrthogonalityProblem::cost_of(rt);
                const double rho = predicted > 0.0 ? (cost - ct) / predicted : -1.0;
                if (ct < cost && rho > cfg.armijo) {
                    v = std::move(trial);
                    r = rt;
                    cost = ct;
                    mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                    nu = 2.0;
                    accepted = true;
                    break;
                }
            }
            mu *= nu;
            nu *= 2.0;
            if (mu > 1e20 || !std::isfinite(mu)) break;
        }
        history.push_back(cost);
        if (!accepted) {
            ++it;
            break;
        }
        if (!reached && cost <= cfg.success_tol) reached = true;
    }
    res.point = std::move(v);
    res.cost = cost;
    res.iterations = it;
    res.converged = cost <= cfg.success_tol;
    return res;
}

/// Riemannian steepest descent with Armijo backtracking.
inline LocalResult minimize_gd(const SchmidtSpectrum& spec, const OrthogonalityProblem& prob,
                               std::vector<ComplexMatrix> v, const SearchConfig& cfg) {
    const int d = spec.dim();
    auto to_set = [&](const std::vector<ComplexMatrix>& pt) {
        std::vector<Message> ms;
        for (const auto& x : pt) ms.push_back(Message::from_isometry(x, d));
        return MessageSet(spec, std::move(ms));
    };
    LocalResult res;
    double cost = OrthogonalityProblem::cost_of(prob.residuals(v));
    std::vector<double> history{cost};
    int it = 0;
    for (; it < cfg.max_iterations && cost > cfg.success_tol && !stalled(history, cfg); ++it) {
        auto grad = cost_gradient(to_set(v));
        if (prob.frozen_first()) grad[0].setZero();
        double gnorm2 = 0.0;
        for (const auto& g : grad) gnorm2 += g.squaredNorm();
        if (gnorm2 == 0.0) break;
        double step = cfg.initial_step;
        bool accepted = false;
        for (int tries = 0; tries < 60; ++tries, step *= cfg.shrink) {
            std::vector<ComplexMatrix> trial = v;
            try {
                for (std::size_t j = 0; j < v.size(); ++j)
                    if (grad[j].squaredNorm() > 0.0) trial[j] = retract(v[j], -step * grad[j]);
            } catch (const Error&) {
                continue;
            }
            const double ct = OrthogonalityProblem::cost_of(prob.residuals(trial));
            if (ct <= cost - cfg.armijo * step * gnorm2) {
                v = std::move(trial);
                cost = ct;
                accepted = true;
                break;
            }
        }
        history.push_back(cost);
        if (!accepted) break;
    }
    res.point = std::move(v);
    res.cost = cost;
    res.iterations = it;
    res.converged = cost <= cfg.success_tol;
    return res;
}

inline std::vector<ComplexMatrix> initial_point(int d, const RankProfile& profile, bool freeze_first, Rng& rng) {
    std::vector<ComplexMatrix> v;
    for (int j = 0; j < profile.size(); ++j) {
        if (j == 0 && freeze_first && profile[0] == 1)
            v.push_back(identity(d));
        else
            v.push_back(haar_isometry(profile[j] * d, d, rng));
    }
    return v;
}

inline MessageSet to_message_set(const SchmidtSpectrum& spec, const std::vector<ComplexMatrix>& point) {
    std::vector<Message> ms;
    for (const auto& x : point) ms.push_back(Message::from_isometry(x, spec.dim()));
    return MessageSet(spec, std::move(ms));
}

}  // namespace detail

/// Rewrites a message with linearly dependent encoded states as an
/// equivalent message of smaller Kraus rank: the Kraus operators are rotated
/// by the unitary diagonalizing their Lambda-Gram matrix and components whose
/// Gram eigenvalue falls below `drop_tol` are discarded. Completeness is
/// preserved up to the norm of the dropped (near-zero) operators.
inline Message reduce_kraus_rank(const Message& m, const SchmidtSpectrum& spec, double drop_tol = 1e-6) {
    const int kap = m.kraus_rank();
    if (kap == 1) return m;
    ComplexMatrix g(kap, kap);
    for (int a = 0; a < kap; ++a)
        for (int b = 0; b < kap; ++b) g(a, b) = lambda_inner(m[a], m[b], spec);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(g);
    std::vector<ComplexMatrix> kept;
    for (int i = kap - 1; i >= 0; --i) {
        if (es.eigenvalues()(i) < drop_tol) continue;
        ComplexMatrix k = ComplexMatrix::Zero(m.dim(), m.dim());
        for (int a = 0; a < kap; ++a) k += std::conj(es.eigenvectors()(a, i)) * m[a];
        kept.push_back(std::move(k));
    }
    if (kept.empty()) throw Error("reduce_kraus_rank: message has no nonzero Kraus component");
    if (static_cast<int>(kept.size()) == kap) return m;
    return Message(std::move(kept));
}

inline MessageSet reduce_kraus_ranks(const MessageSet& set, double drop_tol = 1e-6) {
    std::vector<Message> ms;
    for (const auto& m : set.messages()) ms.push_back(reduce_kraus_rank(m, set.spectrum(), drop_tol));
    return MessageSet(set.spectrum(), std::move(ms));
}

struct RestartResult {
    RestartRecord record;
    std::optional<MessageSet> witness;
};

/// One local minimization from the Haar-random start drawn from `seed`.
///
/// A point reaching cost <= success_tol is reduced to its true Kraus ranks
/// (a rank-2 message may collapse onto a single operator), re-polished and
/// must then pass verify_message_set at success_tol to count as a witness.
inline RestartResult run_restart(const SchmidtSpectrum& spec, const RankProfile& profile, const SearchConfig& cfg,
                                 std::uint64_t seed) {
    profile.check_bound(spec.dim());
    Rng rng(seed);
    const detail::OrthogonalityProblem prob(spec, profile, cfg.gauge_fix_identity);
    auto start = detail::initial_point(spec.dim(), profile, cfg.gauge_fix_identity, rng);
    const detail::LocalResult lr = cfg.method == Method::levenberg_marquardt
                                       ? detail::minimize_lm(prob, std::move(start), cfg)
                                       : detail::minimize_gd(spec, prob, std::move(start), cfg);
    RestartResult out;
    out.record = {seed, lr.cost, lr.iterations, false};
    if (!lr.converged) return out;

    MessageSet set = reduce_kraus_ranks(detail::to_message_set(spec, lr.point));
    if (set.kraus_ranks() != profile.kappas() || !verify_message_set(set, cfg.success_tol).pass) {
        std::vector<ComplexMatrix> pt;
        for (const auto& m : set.messages()) pt.push_back(m.to_isometry());
        // re-project: dropped components leave a roundoff-sized completeness defect
        for (auto& x : pt) x = retract(x, ComplexMatrix::Zero(x.rows(), x.cols()));
        const detail::OrthogonalityProblem reduced(spec, RankProfile(set.kraus_ranks()), cfg.gauge_fix_identity);
        SearchConfig polish = cfg;
        polish.max_iterations = cfg.polish_iterations + 1;
        const detail::LocalResult pr = detail::minimize_lm(reduced, std::move(pt), polish);
        out.record.iterations += pr.iterations;
        out.record.final_cost = pr.cost;
        set = detail::to_message_set(spec, pr.point);
    }
    if (out.record.final_cost <= cfg.success_tol && verify_message_set(set, cfg.success_tol).pass) {
        out.record.converged = true;
        out.witness = std::move(set);
    }
    return out;
}

inline std::uint64_t restart_seed(const SearchConfig& cfg, int restart) {
    return derive_seed(cfg.seed, {static_cast<std::uint64_t>(restart)});
}

/// Runs up to cfg.restarts independent minimizations and returns the first
/// (in restart order) witness, or an infeasible verdict with the full log.
inline SearchOutcome search_feasible(const SchmidtSpectrum& spec, const RankProfile& profile, const SearchConfig& cfg) {
    cfg.validate();
    profile.check_bound(spec.dim());
    SearchOutcome out;
    out.profile = profile;
    out.seed = cfg.seed;
    const int jobs = std::max(1, cfg.jobs);
    for (int base = 0; base < cfg.restarts; base += jobs) {
        const int batch = std::min(jobs, cfg.restarts - base);
        std::vector<RestartResult> results(batch);
        if (batch == 1) {
            results[0] = run_restart(spec, profile, cfg, restart_seed(cfg, base));
        } else {
            std::vector<std::future<RestartResult>> fut;
            for (int i = 0; i < batch; ++i)
                fut.push_back(std::async(std::launch::async, [&, i] {
                    return run_restart(spec, profile, cfg, restart_seed(cfg, base + i));
                }));
            for (int i = 0; i < batch; ++i) results[i] = fut[i].get();
        }
        for (auto& r : results) {
            out.restart_log.push_back(r.record);
            out.best_cost = std::min(out.best_cost, r.record.final_cost);
            if (r.witness) {
                out.verdict = Verdict::feasible;
                out.best_cost = r.record.final_cost;
                out.witness = std::move(r.witness);
                return out;
            }
        }
    }
    return out;
}

inline SearchOutcome search_feasible(int d, const SchmidtSpectrum& spec, const RankProfile& profile,
                                     const SearchConfig& cfg) {
    if (spec.dim() != d)
        throw Error("spectrum has dimension " + std::to_string(spec.dim()) + ", expected " + std::to_string(d));
    return search_feasible(spec, profile, cfg);
}

/// Canonical non-decreasing profiles of length n with entries in [1, max_kappa]
/// and total rank <= d^2, ordered by total rank and then lexicographically.
inline std::vector<RankProfile> enumerate_profiles(int n, int d, int max_kappa) {
    if (n < 1) throw Error("enumerate_profiles: need at least one message");
    std::vector<std::vector<int>> found;
    std::vector<int> cur;
    const int cap = d * d;
    auto rec = [&](auto&& self, int lo, int sum) -> void {
        if (static_cast<int>(cur.size()) == n) {
            found.push_back(cur);
            return;
        }
        const int remaining = n - static_cast<int>(cur.size());
        for (int k = lo; k <= max_kappa; ++k) {
            // every later entry is >= k
            if (sum + k * remaining > cap) break;
            cur.push_back(k);
            self(self, k, sum + k);
            cur.pop_back();
        }
    };
    rec(rec, 1, 0);
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        const int sa = std::accumulate(a.begin(), a.end(), 0), sb = std::accumulate(b.begin(), b.end(), 0);
        return sa != sb ? sa < sb : a < b;
    });
    std::vector<RankProfile> out;
    for (auto& f : found) out.emplace_back(std::move(f));
    return out;
}

/// The profiles a mode allows for n messages, in search order.
inline std::vector<RankProfile> mode_profiles(int n, int d, Mode mode, int max_kappa) {
    if (mode == Mode::unitary_only) {
        if (n > d * d) return {};
        return {RankProfile::unitary(n)};
    }
    return enumerate_profiles(n, d, max_kappa);
}

/// True when n messages are excluded by lambda_0 <= d / n.
inline bool excluded_by_bound(int n, const SchmidtSpectrum& spec) {
    return n * spec.leading() > spec.dim() * (1.0 + 1e-12);
}

/// Feasibility of n messages at one spectrum under a mode: profiles are tried
/// in order and the first feasible one decides.
struct PointVerdict {
    bool feasible = false;
    std::vector<SearchOutcome> attempts;

    const SearchOutcome* deciding() const { return attempts.empty() ? nullptr : &attempts.back(); }
};

inline PointVerdict point_feasibility(const SchmidtSpectrum& spec, int n, Mode mode, const SearchConfig& cfg) {
    PointVerdict pv;
    const auto profiles = mode_profiles(n, spec.dim(), mode, cfg.max_kappa);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        SearchConfig sub = cfg;
        sub.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i)});
        pv.attempts.push_back(search_feasible(spec, profiles[i], sub));
        if (pv.attempts.back().feasible()) {
            pv.feasible = true;
            break;
        }
    }
    return pv;
}

enum class NStatus { feasible, infeasible, excluded_by_bound };

inline std::string to_string(NStatus s) {
    switch (s) {
        case NStatus::feasible: return "feasible";
        case NStatus::infeasible: return "infeasible";
        default: return "excluded-by-bound";
    }
}

struct NOutcome {
    int n = 0;
    NStatus status = NStatus::infeasible;
    std::vector<SearchOutcome> attempts;
};

struct MaxMessages {
    int max_n = 0;
    std::vector<NOutcome> per_n;
};

/// Largest n with a feasible allowed profile. Scans n upward and stops at the
/// first infeasible n (deleting a message from a witness always leaves a
/// witness) or at the first n excluded by lambda_0 <= d / n.
inline MaxMessages max_messages(const SchmidtSpectrum& spec, Mode mode, const SearchConfig& cfg) {
    const int d = spec.dim();
    MaxMessages mm;
    for (int n = 1; n <= d * d; ++n) {
        NOutcome no;
        no.n = n;
        if (excluded_by_bound(n, spec)) {
            no.status = NStatus::excluded_by_bound;
            mm.per_n.push_back(std::move(no));
            break;
        }
        PointVerdict pv = point_feasibility(spec, n, mode, cfg);
        no.attempts = std::move(pv.attempts);
        no.status = pv.feasible ? NStatus::feasible : NStatus::infeasible;
        mm.per_n.push_back(std::move(no));
        if (!pv.feasible) break;
        mm.max_n = n;
    }
    return mm;
}

}  // namespace densecode
