#pragma once

// Closed-form constructions on edge E of d = 4: the 2x2 u_j families, the
// eight-member block set, the pairing transform between mixed and
// block-diagonal / block-zero-diagonal messages, the ninth and tenth unitary
// and its x >= 1/4 certificate, and the two-qubit no-go computation.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "densecode/protocol.hpp"
#include "densecode/qmat.hpp"

namespace densecode {

namespace detail {

inline const std::array<ComplexMatrix, 3>& pauli() {
    static const std::array<ComplexMatrix, 3> s = [] {
        const Complex i(0.0, 1.0);
        std::array<ComplexMatrix, 3> p;
        for (auto& m : p) m = ComplexMatrix::Zero(2, 2);
        p[0](0, 1) = 1.0;
        p[0](1, 0) = 1.0;
        p[1](0, 1) = -i;
        p[1](1, 0) = i;
        p[2](0, 0) = 1.0;
        p[2](1, 1) = -1.0;
        return p;
    }();
    return s;
}

/// s0 I + i s.sigma
inline ComplexMatrix quaternion(Complex s0, const Eigen::Vector3d& s) {
    ComplexMatrix m = s0 * identity(2);
    for (int k = 0; k < 3; ++k) m += Complex(0.0, s(k)) * pauli()[k];
    return m;
}

/// Unitary part of the polar decomposition.
inline ComplexMatrix polar_unitary(const ComplexMatrix& m) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

inline double require_unitary(const ComplexMatrix& m, const char* name, double tol) {
    if (m.rows() != 2 || m.cols() != 2) throw Error(std::string(name) + " must be 2x2, got " + shape_string(m));
    const double def = unitarity_defect(m);
    if (def > tol) {
        std::ostringstream os;
        os << name << " is not unitary (defect " << def << ")";
        throw Error(os.str());
    }
    return def;
}

/// max |Tr(U_j Lambda U_k^dagger)| over j != k with Lambda = diag(weights).
inline double max_cross_overlap(const std::vector<ComplexMatrix>& us, const Eigen::VectorXd& weights) {
    double worst = 0.0;
    for (std::size_t j = 0; j < us.size(); ++j)
        for (std::size_t k = j + 1; k < us.size(); ++k)
            worst = std::max(worst, std::abs((us[j] * weights.asDiagonal() * us[k].adjoint()).trace()));
    return worst;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// u_j families

/// u = -x I + i n.sigma written as [[-x + i alpha, -conj(beta)], [beta, -x - i alpha]].
inline ComplexMatrix u_member(double x, double alpha, Complex beta) {
    ComplexMatrix u(2, 2);
    u << Complex(-x, alpha), -std::conj(beta), beta, Complex(-x, -alpha);
    return u;
}

/// Four 2x2 unitaries, u_0 = I, with Tr(u_j u_k^dagger) = -2x for j != k.
struct UFamily {
    double x = 0.0;
    double beta2_phase = 0.0;
    std::array<ComplexMatrix, 4> u;
    std::array<double, 4> alpha{};
    std::array<Complex, 4> beta{};

    double unitarity_defect() const {
        double w = 0.0;
        for (const auto& m : u) w = std::max(w, densecode::unitarity_defect(m));
        return w;
    }
    /// max |Tr(u_j u_k^dagger) + 2x| over j != k
    double gram_residual() const {
        double w = 0.0;
        for (int j = 0; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k) w = std::max(w, std::abs((u[j] * u[k].adjoint()).trace() + 2.0 * x));
        return w;
    }
};

inline UFamily build_u_family(double x, double beta2_phase) {
    if (!(x >= 0.0)) throw Error("u family needs x >= 0, got " + std::to_string(x));
    if (1.0 - 3.0 * x <= 0.0) throw Error("family does not exist (1-3x <= 0)");
    UFamily f;
    f.x = x;
    f.beta2_phase = beta2_phase;
    // With n_j = (Im beta_j, -Re beta_j, alpha_j): |n_j|^2 = 1 - x^2 and
    // n_j.n_k = -x(1+x).
    const double a1 = std::sqrt(1.0 - x * x);
    const double a2 = -x * (1.0 + x) / a1;
    const double bmag2 = 1.0 - x * x - a2 * a2;
    const double bmag = std::sqrt(bmag2);
    const double cos_psi = std::clamp((-x * (1.0 + x) - a2 * a2) / bmag2, -1.0, 1.0);
    const double psi = std::acos(cos_psi);  // the + branch; -psi is the mirror family
    f.alpha = {0.0, a1, a2, a2};
    f.beta = {0.0, 0.0, std::polar(bmag, beta2_phase), std::polar(bmag, beta2_phase + psi)};
    f.u[0] = identity(2);
    for (int j = 1; j < 4; ++j) f.u[j] = u_member(x, f.alpha[j], f.beta[j]);
    return f;
}

/// Attempts a fifth member with Tr(u_4 u_j^dagger) = -2x for all j. The
/// linear part always solves; unitarity of u_4 holds only at x = 1/4.
struct FiveFamily {
    double x = 0.0;
    std::array<ComplexMatrix, 5> u;
    double unitarity_defect = 0.0;
    double gram_residual = 0.0;
    bool exists(double tol = 1e-12) const { return unitarity_defect <= tol && gram_residual <= tol; }
};

inline FiveFamily extend_u_family(const UFamily& f) {
    Eigen::Matrix3d n;
    for (int j = 1; j < 4; ++j) n.row(j - 1) << f.beta[j].imag(), -f.beta[j].real(), f.alpha[j];
    const double c = -f.x * (1.0 + f.x);
    const Eigen::Vector3d n4 = n.fullPivLu().solve(Eigen::Vector3d::Constant(c));
    FiveFamily out;
    out.x = f.x;
    for (int j = 0; j < 4; ++j) out.u[j] = f.u[j];
    out.u[4] = -f.x * identity(2) + detail::quaternion(0.0, n4);
    for (const auto& m : out.u) out.unitarity_defect = std::max(out.unitarity_defect, unitarity_defect(m));
    for (int j = 0; j < 5; ++j)
        for (int k = j + 1; k < 5; ++k)
            out.gram_residual =
                std::max(out.gram_residual, std::abs((out.u[j] * out.u[k].adjoint()).trace() + 2.0 * f.x));
    return out;
}

/// Solves Tr(a u_j^dagger) = 1, j = 0..3, for the 2x2 matrix a.
inline ComplexMatrix tilde_a(const UFamily& f) {
    Eigen::Matrix4cd m;
    for (int j = 0; j < 4; ++j)
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) m(j, 2 * r + c) = std::conj(f.u[j](r, c));
    const Eigen::Vector4cd sol = m.fullPivLu().solve(Eigen::Vector4cd::Ones());
    ComplexMatrix a(2, 2);
    a << sol(0), sol(1), sol(2), sol(3);
    return a;
}

/// Closed form of tilde_a with a free phase theta. Proportional to an SU(2)
/// element: tilde_a^dagger tilde_a = I / (1 - 3x).
inline ComplexMatrix tilde_a_closed_form(double x, double theta) {
    if (!(x >= 0.0) || 1.0 - 3.0 * x <= 0.0) throw Error("tilde_a needs 0 <= x < 1/3");
    const Complex i(0.0, 1.0);
    const double s = std::sqrt((1.0 + x) / (1.0 - x));
    const double t = std::sqrt((1.0 + x) / ((1.0 - x) * (1.0 - 2.0 * x)));
    const double r = std::sqrt((1.0 - x) / (1.0 - 3.0 * x));
    ComplexMatrix a(2, 2);
    a << 1.0 + i * s, std::exp(i * theta) * t * (1.0 + i * r), -std::exp(-i * theta) * t * (1.0 - i * r), 1.0 - i * s;
    return 0.5 * a;
}

/// The phase theta for which tilde_a_closed_form reproduces tilde_a(f).
inline double tilde_a_phase(const UFamily& f) {
    const ComplexMatrix a = tilde_a(f);
    const double r = std::sqrt((1.0 - f.x) / (1.0 - 3.0 * f.x));
    return std::arg(a(0, 1)) - std::atan(r);
}

// ---------------------------------------------------------------------------
// Block sets

struct BlockSet {
    double x = 0.0;
    ComplexMatrix A, B, B1, B2;
    UFamily u;  ///< diagonal family
    UFamily v;  ///< zero-diagonal family
    std::vector<ComplexMatrix> members;  ///< 0-3 diag(A u_j A^dagger, I); 4-7 (0, B; B1 v_j B2, 0)

    Eigen::Vector4d weights() const {
        const double l0 = edge_e_lambda0(x);
        return {l0, l0, x * l0, x * l0};
    }
    SchmidtSpectrum spectrum() const { return edge_e_spectrum_from_x(x); }
    double max_overlap() const { return detail::max_cross_overlap(members, weights()); }
    double unitarity_defect() const {
        double w = 0.0;
        for (const auto& m : members) w = std::max(w, densecode::unitarity_defect(m));
        return w;
    }
};

inline BlockSet build_block_set(double x, const ComplexMatrix& A, const ComplexMatrix& B, const ComplexMatrix& B1,
                                const ComplexMatrix& B2, double u_phase = 0.0, double v_phase = 0.0) {
    const double tol = 1e-10;
    detail::require_unitary(A, "dressing A", tol);
    detail::require_unitary(B, "dressing B", tol);
    detail::require_unitary(B1, "dressing B1", tol);
    detail::require_unitary(B2, "dressing B2", tol);
    BlockSet bs;
    bs.x = x;
    bs.A = A;
    bs.B = B;
    bs.B1 = B1;
    bs.B2 = B2;
    bs.u = build_u_family(x, u_phase);
    bs.v = build_u_family(x, v_phase);
    const ComplexMatrix z = ComplexMatrix::Zero(2, 2);
    for (int j = 0; j < 4; ++j) bs.members.push_back(BlockView::assemble(A * bs.u.u[j] * A.adjoint(), z, z, identity(2)));
    for (int j = 0; j < 4; ++j) bs.members.push_back(BlockView::assemble(z, B, B1 * bs.v.u[j] * B2, z));
    return bs;
}

inline BlockSet build_block_set(double x) {
    const ComplexMatrix i2 = identity(2);
    return build_block_set(x, i2, i2, i2, i2);
}

/// Ten unitaries at x = 1/4: diag(A u_j A^dagger, I) and (0, B; -B^dagger A u_j A^dagger, 0)
/// over the five-member family. At other x the fifth member is not unitary
/// and the set fails verification.
inline std::vector<ComplexMatrix> five_plus_five(double x, const ComplexMatrix& A, const ComplexMatrix& B,
                                                 double phase = 0.0) {
    detail::require_unitary(A, "dressing A", 1e-10);
    detail::require_unitary(B, "dressing B", 1e-10);
    const FiveFamily f = extend_u_family(build_u_family(x, phase));
    const ComplexMatrix z = ComplexMatrix::Zero(2, 2);
    std::vector<ComplexMatrix> out;
    for (const auto& u : f.u) out.push_back(BlockView::assemble(A * u * A.adjoint(), z, z, identity(2)));
    for (const auto& u : f.u) out.push_back(BlockView::assemble(z, B, -B.adjoint() * A * u * A.adjoint(), z));
    return out;
}

inline MessageSet lambda_star_set(const ComplexMatrix& A, const ComplexMatrix& B, double phase = 0.0) {
    std::vector<Message> ms;
    for (auto& u : five_plus_five(0.25, A, B, phase)) ms.push_back(Message::unitary(std::move(u)));
    return MessageSet(edge_e_spectrum(0.4), std::move(ms));
}

// ---------------------------------------------------------------------------
// Pairing

/// Mixes a block-diagonal diag(u, I) with its partner (0, B; -B^dagger u, 0)
/// into the unitary pair
///   U_j = mu_j (D + c Z),  U_k = mu_k (D - Z / c),  mu = 1/sqrt(1 + coefficient^2).
/// The coefficient must be real for the mixture to stay unitary.
inline std::pair<ComplexMatrix, ComplexMatrix> mix_pair(const ComplexMatrix& d, const ComplexMatrix& z, double c) {
    if (c == 0.0 || !std::isfinite(c)) throw Error("mix_pair: coefficient must be finite and nonzero");
    const double mu_j = 1.0 / std::sqrt(1.0 + c * c);
    const double mu_k = std::abs(c) / std::sqrt(1.0 + c * c);
    return {mu_j * (d + c * z), mu_k * (d - z / c)};
}

namespace detail {

inline bool blocks_vanish(const ComplexMatrix& p, const ComplexMatrix& q, double tol) {
    return p.norm() <= tol && q.norm() <= tol;
}

}  // namespace detail

/// Decomposes a pair of mixed unitaries
///   U = mu [[u, g B], [-conj(g) B^dagger u, I]]
/// sharing u and B with conj(g_j) g_k = -1 into the block-diagonal diag(u, I)
/// and the block-zero-diagonal (0, B'; -B'^dagger u, 0) spanning the same plane.
/// A pair already of those two forms is returned unchanged (diagonal first).
inline std::pair<ComplexMatrix, ComplexMatrix> pair_transform(const ComplexMatrix& uj, const ComplexMatrix& uk,
                                                              double tol = 1e-8) {
    const BlockView j = BlockView::split(uj), k = BlockView::split(uk);
    if (uj.rows() != uk.rows()) throw Error("pair_transform: shapes " + shape_string(uj) + " and " + shape_string(uk));
    const Eigen::Index h = j.upper_left.rows();

    const bool j_diag = detail::blocks_vanish(j.upper_right, j.lower_left, tol);
    const bool k_diag = detail::blocks_vanish(k.upper_right, k.lower_left, tol);
    const bool j_zero = detail::blocks_vanish(j.upper_left, j.lower_right, tol);
    const bool k_zero = detail::blocks_vanish(k.upper_left, k.lower_right, tol);
    if (j_diag && k_zero) return {uj, uk};
    if (k_diag && j_zero) return {uk, uj};
    if (j_diag || k_diag || j_zero || k_zero)
        throw Error("pair_transform: one input is block-diagonal or block-zero-diagonal but the other is not its partner");

    const Complex mu_j = j.lower_right.trace() / double(h);
    const Complex mu_k = k.lower_right.trace() / double(h);
    auto fail = [](const std::string& rel, double r) {
        std::ostringstream os;
        os << "pair_transform: relation " << rel << " violated (residual " << r << ")";
        throw Error(os.str());
    };
    const ComplexMatrix id = identity(static_cast<int>(h));
    if (double r = (j.lower_right / mu_j - id).norm(); r > tol) fail("lower-right block = mu I (first input)", r);
    if (double r = (k.lower_right / mu_k - id).norm(); r > tol) fail("lower-right block = mu I (second input)", r);
    const ComplexMatrix tj = uj / mu_j, tk = uk / mu_k;
    const BlockView bj = BlockView::split(tj), bk = BlockView::split(tk);
    if (double r = (bj.lower_left + bj.upper_right.adjoint() * bj.upper_left).norm(); r > tol)
        fail("lower-left = -conj(gamma) B^dagger u (first input)", r);
    if (double r = (bk.lower_left + bk.upper_right.adjoint() * bk.upper_left).norm(); r > tol)
        fail("lower-left = -conj(gamma) B^dagger u (second input)", r);
    if (double r = (bj.upper_left - bk.upper_left).norm(); r > tol) fail("shared upper-left block u", r);

    const double g2 = bj.upper_right.squaredNorm() / double(h);  // |gamma_j|^2, B unitary
    if (g2 <= 0.0) fail("nonzero gamma", 0.0);
    if (double r = (bk.upper_right + bj.upper_right / g2).norm(); r > tol)
        fail("conj(gamma_j) gamma_k = -1 with shared B", r);

    ComplexMatrix d = (tj + g2 * tk) / (1.0 + g2);
    ComplexMatrix z = (std::sqrt(g2) / (1.0 + g2)) * (tj - tk);
    return {std::move(d), std::move(z)};
}

struct PairingReport {
    bool conforms = false;
    bool pairwise = false;  ///< conformance reached by pair_transform on matched pairs alone
    int gauge = -1;  ///< message whose inverse was applied on the left
    int block_diagonal = 0;
    int zero_diagonal = 0;
    int mixed = 0;
    std::vector<std::pair<int, int>> pairs;
    double max_residual = std::numeric_limits<double>::infinity();
    std::string violation;             ///< the worst relation, empty when conforming
    bool same_family = false;          ///< zero-diagonal u's equal the diagonal u's up to phase
    double family_residual = std::numeric_limits<double>::infinity();
    std::vector<ComplexMatrix> transformed;  ///< block-diagonal members first

    std::string summary() const {
        std::ostringstream os;
        os << (conforms ? "conforms" : "does not conform") << ", " << block_diagonal << "+" << zero_diagonal;
        if (mixed) os << " (" << mixed << " mixed)";
        if (conforms) os << (pairwise ? ", pairwise" : ", via span decomposition");
        os << ", residual " << max_residual;
        if (conforms) os << (same_family ? ", zero-diagonal family equals diagonal family" : ", families differ");
        if (!violation.empty()) os << ", worst relation: " << violation;
        return os.str();
    }
};

namespace detail {

struct Worst {
    double value = 0.0;
    std::string what;
    void note(double r, const std::string& w) {
        if (!(r <= value)) {  // NaN propagates as worst
            value = r;
            what = w;
        }
    }
};

inline PairingReport pairing_under_gauge(const std::vector<ComplexMatrix>& raw, const Eigen::VectorXd& weights,
                                         int gauge, double tol) {
    PairingReport rep;
    rep.gauge = gauge;
    const int n = static_cast<int>(raw.size());
    const ComplexMatrix g = raw[gauge].adjoint();
    std::vector<ComplexMatrix> us;
    for (const auto& m : raw) us.push_back(g * m);

    Worst worst;
    enum Kind { diag, zero, mixed };
    std::vector<Kind> kind(n);
    std::vector<int> mixed_idx;
    // Mixed members normalized by their lower-right scalar: [[u, gamma B], [., I]].
    std::vector<ComplexMatrix> hat_u(n), hat_b(n);
    for (int j = 0; j < n; ++j) {
        const BlockView b = BlockView::split(us[j]);
        if (blocks_vanish(b.upper_right, b.lower_left, tol)) {
            kind[j] = diag;
            ++rep.block_diagonal;
        } else if (blocks_vanish(b.upper_left, b.lower_right, tol)) {
            kind[j] = zero;
            ++rep.zero_diagonal;
        } else {
            kind[j] = mixed;
            mixed_idx.push_back(j);
            const Complex mu = b.lower_right.trace() / 2.0;
            if (std::abs(mu) < tol) {
                worst.note(1.0, "message " + std::to_string(j) + " has a traceless lower-right block");
                continue;
            }
            worst.note((b.lower_right / mu - identity(2)).norm(),
                       "message " + std::to_string(j) + ": lower-right block = mu I");
            hat_u[j] = b.upper_left / mu;
            hat_b[j] = b.upper_right / mu;
            worst.note((b.lower_left / mu + hat_b[j].adjoint() * hat_u[j]).norm(),
                       "message " + std::to_string(j) + ": lower-left = -conj(gamma) B^dagger u");
        }
    }
    rep.mixed = static_cast<int>(mixed_idx.size());

    // Common B direction from the first member with a nonzero upper-right block.
    std::optional<ComplexMatrix> b_ref;
    for (int j = 0; j < n && !b_ref; ++j) {
        if (kind[j] == mixed && hat_b[j].size()) b_ref = polar_unitary(hat_b[j]);
        if (kind[j] == zero) b_ref = polar_unitary(BlockView::split(us[j]).upper_right);
    }
    std::vector<Complex> gamma(n, 0.0);
    if (b_ref) {
        for (int j = 0; j < n; ++j) {
            if (kind[j] == diag) continue;
            const ComplexMatrix ur = kind[j] == mixed ? hat_b[j] : BlockView::split(us[j]).upper_right;
            if (!ur.size()) continue;
            gamma[j] = (b_ref->adjoint() * ur).trace() / 2.0;
            worst.note((ur - gamma[j] * *b_ref).norm(),
                       "message " + std::to_string(j) + ": upper-right block proportional to shared B");
        }
    }

    // Perfect matching of mixed members minimizing the worst pair residual.
    if (rep.mixed % 2 != 0) {
        worst.note(1.0, "odd number of mixed messages");
    } else if (rep.mixed > 0) {
        auto pair_cost = [&](int a, int b) {
            if (!hat_u[a].size() || !hat_u[b].size()) return 1.0;
            const double du = (hat_u[a] - hat_u[b]).norm();
            const double dg = std::abs(std::conj(gamma[a]) * gamma[b] + 1.0);
            return std::max(du, dg);
        };
        std::vector<std::pair<int, int>> best, cur;
        double best_cost = std::numeric_limits<double>::infinity();
        std::vector<bool> used(mixed_idx.size(), false);
        auto recurse = [&](auto&& self, double acc) -> void {
            if (acc >= best_cost) return;
            std::size_t first = 0;
            while (first < used.size() && used[first]) ++first;
            if (first == used.size()) {
                best_cost = acc;
                best = cur;
                return;
            }
            used[first] = true;
            for (std::size_t s = first + 1; s < used.size(); ++s) {
                if (used[s]) continue;
                used[s] = true;
                cur.emplace_back(mixed_idx[first], mixed_idx[s]);
                self(self, std::max(acc, pair_cost(mixed_idx[first], mixed_idx[s])));
                cur.pop_back();
                used[s] = false;
            }
            used[first] = false;
        };
        recurse(recurse, 0.0);
        rep.pairs = best;
        worst.note(best_cost, "pairing: shared u and conj(gamma_j) gamma_k = -1");
    }

    // Transformed set.
    std::vector<ComplexMatrix> diag_out, zero_out;
    for (int j = 0; j < n; ++j) {
        if (kind[j] == diag) diag_out.push_back(us[j]);
        if (kind[j] == zero) zero_out.push_back(us[j]);
    }
    bool transformed = worst.value <= tol;
    if (transformed) {
        for (auto [a, b] : rep.pairs) {
            try {
                auto [d, z] = pair_transform(us[a], us[b], tol);
                diag_out.push_back(std::move(d));
                zero_out.push_back(std::move(z));
            } catch (const Error& e) {
                worst.note(std::max(2.0 * tol, worst.value), e.what());
                transformed = false;
                break;
            }
        }
    }
    if (transformed) {
        rep.block_diagonal = static_cast<int>(diag_out.size());
        rep.zero_diagonal = static_cast<int>(zero_out.size());
        rep.transformed = diag_out;
        rep.transformed.insert(rep.transformed.end(), zero_out.begin(), zero_out.end());
        for (std::size_t j = 0; j < rep.transformed.size(); ++j) {
            const auto& m = rep.transformed[j];
            worst.note(unitarity_defect(m), "transformed member " + std::to_string(j) + " unitarity");
            const BlockView b = BlockView::split(m);
            if (j < diag_out.size()) {
                worst.note((b.upper_right.norm() + b.lower_left.norm()),
                           "transformed member " + std::to_string(j) + " block-diagonal");
                const Complex ph = b.lower_right.trace() / 2.0;
                worst.note((b.lower_right - ph * identity(2)).norm(),
                           "transformed member " + std::to_string(j) + " lower-right block = I");
            } else {
                worst.note((b.upper_left.norm() + b.lower_right.norm()),
                           "transformed member " + std::to_string(j) + " block-zero-diagonal");
            }
        }
        worst.note(max_cross_overlap(rep.transformed, weights), "Lambda-orthogonality of the transformed set");
        if (diag_out.size() != zero_out.size())
            worst.note(std::max(1.0, worst.value), "unequal block-diagonal / block-zero-diagonal counts");

        // u's of the zero-diagonal members: (0, P; Q, 0) = phase (0, B; -B^dagger u, 0) gives u ~ P Q.
        std::vector<ComplexMatrix> du, zu;
        for (const auto& m : diag_out) {
            const BlockView b = BlockView::split(m);
            du.push_back(b.upper_left / (b.lower_right.trace() / 2.0));
        }
        for (const auto& m : zero_out) {
            const BlockView b = BlockView::split(m);
            zu.push_back(b.upper_right * b.lower_left);
        }
        double fam = 0.0;
        for (const auto& z : zu) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& d : du) best = std::min(best, 2.0 - std::abs((d.adjoint() * z).trace()));
            fam = std::max(fam, std::abs(best));
        }
        rep.family_residual = zu.empty() ? std::numeric_limits<double>::infinity() : fam;
        rep.same_family = rep.family_residual <= tol;
    }
    rep.max_residual = worst.value;
    rep.conforms = transformed && worst.value <= tol;
    rep.violation = rep.conforms ? std::string() : worst.what;
    return rep;
}

/// Span-level form of the same equivalence: the span of the gauged set must
/// contain an n/2-dimensional space of block-diagonal matrices diag(P, q I) and
/// one of block-zero-diagonal matrices with upper-right blocks along a common B.
/// Such a span has the Lambda-orthonormal unitary basis diag(u_j, I),
/// (0, B; -B^dagger u_j, 0) over the five-member u family, which is returned as
/// the transformed set.
inline PairingReport span_decomposition(const std::vector<ComplexMatrix>& raw, const Eigen::VectorXd& weights,
                                        int gauge, double tol) {
    PairingReport rep;
    rep.gauge = gauge;
    const int n = static_cast<int>(raw.size());
    const int half = n / 2;
    const ComplexMatrix g = raw[gauge].adjoint();
    std::vector<ComplexMatrix> us;
    for (const auto& m : raw) us.push_back(g * m);

    ComplexMatrix off(8, n), dia(8, n), span(16, n);
    for (int j = 0; j < n; ++j) {
        const BlockView b = BlockView::split(us[j]);
        off.col(j) << Eigen::Map<const ComplexVector>(b.upper_right.data(), 4),
            Eigen::Map<const ComplexVector>(b.lower_left.data(), 4);
        dia.col(j) << Eigen::Map<const ComplexVector>(b.upper_left.data(), 4),
            Eigen::Map<const ComplexVector>(b.lower_right.data(), 4);
        span.col(j) = Eigen::Map<const ComplexVector>(us[j].data(), 16);
        const bool d0 = blocks_vanish(b.upper_right, b.lower_left, tol);
        const bool z0 = blocks_vanish(b.upper_left, b.lower_right, tol);
        rep.mixed += (!d0 && !z0);
    }
    Worst worst;
    // Null spaces of the off-diagonal and diagonal parts give the block-diagonal
    // and block-zero-diagonal subspaces of the span.
    Eigen::JacobiSVD<ComplexMatrix> so(off, Eigen::ComputeFullV), sd(dia, Eigen::ComputeFullV);
    const auto sv_o = so.singularValues(), sv_d = sd.singularValues();
    if (half < sv_o.size()) worst.note(sv_o(half), "span contains a block-diagonal subspace of dimension n/2");
    if (half < sv_d.size()) worst.note(sv_d(half), "span contains a block-zero-diagonal subspace of dimension n/2");
    if (sv_o(half - 1) <= tol || sv_d(half - 1) <= tol) worst.note(1.0, "subspace dimensions exceed n/2");
    const ComplexMatrix nd = so.matrixV().rightCols(n - half);
    const ComplexMatrix nz = sd.matrixV().rightCols(n - half);

    ComplexMatrix urs(4, nz.cols());
    Eigen::Index best_col = 0;
    for (Eigen::Index i = 0; i < nd.cols(); ++i) {
        ComplexMatrix e = ComplexMatrix::Zero(4, 4);
        for (int j = 0; j < n; ++j) e += nd(j, i) * us[j];
        const BlockView b = BlockView::split(e);
        const Complex q = b.lower_right.trace() / 2.0;
        worst.note((b.lower_right - q * identity(2)).norm() / e.norm(),
                   "block-diagonal subspace: lower-right block proportional to I");
    }
    for (Eigen::Index i = 0; i < nz.cols(); ++i) {
        ComplexMatrix f = ComplexMatrix::Zero(4, 4);
        for (int j = 0; j < n; ++j) f += nz(j, i) * us[j];
        const BlockView b = BlockView::split(f);
        urs.col(i) = Eigen::Map<const ComplexVector>(b.upper_right.data(), 4) / f.norm();
        if (urs.col(i).norm() > urs.col(best_col).norm()) best_col = i;
    }
    const auto sv_b = Eigen::JacobiSVD<ComplexMatrix>(urs).singularValues();
    if (sv_b.size() > 1) worst.note(sv_b(1), "block-zero-diagonal subspace: upper-right blocks along a common B");
    ComplexMatrix bdir(2, 2);
    bdir << urs(0, best_col), urs(2, best_col), urs(1, best_col), urs(3, best_col);
    const ComplexMatrix b = polar_unitary(bdir);

    // Explicit 5 + 5 basis and its distance from the span.
    rep.block_diagonal = static_cast<int>(nd.cols());
    rep.zero_diagonal = static_cast<int>(nz.cols());
    if (n == 10 && worst.value <= tol) {
        const FiveFamily f = extend_u_family(build_u_family(edge_e_x(weights(0)), 0.0));
        const ComplexMatrix z = ComplexMatrix::Zero(2, 2);
        for (const auto& u : f.u) rep.transformed.push_back(BlockView::assemble(u, z, z, identity(2)));
        for (const auto& u : f.u) rep.transformed.push_back(BlockView::assemble(z, b, -b.adjoint() * u, z));
        const Eigen::ColPivHouseholderQR<ComplexMatrix> qr(span);
        for (std::size_t j = 0; j < rep.transformed.size(); ++j) {
            const auto& m = rep.transformed[j];
            const ComplexVector v = Eigen::Map<const ComplexVector>(m.data(), 16);
            worst.note((span * qr.solve(v) - v).norm(), "transformed member " + std::to_string(j) + " lies in the span");
            worst.note(unitarity_defect(m), "transformed member " + std::to_string(j) + " unitarity");
        }
        worst.note(max_cross_overlap(rep.transformed, weights), "Lambda-orthogonality of the transformed set");
        rep.same_family = true;
        rep.family_residual = 0.0;
    } else if (n != 10) {
        worst.note(1.0, "set size");
    }
    rep.max_residual = worst.value;
    rep.conforms = worst.value <= tol && !rep.transformed.empty();
    rep.violation = rep.conforms ? std::string() : worst.what;
    return rep;
}

}  // namespace detail

/// Checks whether a 10-unitary set at Lambda* = (0.4, 0.4, 0.1, 0.1) is,
/// after fixing one message to the identity, equivalent to 5 block-diagonal
/// and 5 block-zero-diagonal unitaries. Matched pairs of mixed messages are
/// tried first; when no pairing exists the span-level decomposition decides.
/// Every message is tried as the gauge; the best outcome is reported.
inline PairingReport detect_pairing(const MessageSet& set, double tol = 1e-8) {
    if (set.size() != 10) throw Error("detect_pairing needs 10 messages, got " + std::to_string(set.size()));
    if (set.dim() != 4) throw Error("detect_pairing needs d = 4");
    const std::vector<double> star{0.4, 0.4, 0.1, 0.1};
    for (int i = 0; i < 4; ++i)
        if (std::abs(set.spectrum()[i] - star[i]) > 1e-9)
            throw Error("detect_pairing needs the spectrum (0.4, 0.4, 0.1, 0.1)");
    std::vector<ComplexMatrix> raw;
    for (const auto& m : set.messages()) {
        if (m.kraus_rank() != 1) throw Error("detect_pairing needs unitary messages");
        raw.push_back(m[0]);
    }
    const Eigen::VectorXd w = set.spectrum().diagonal();
    PairingReport best;
    for (int g = 0; g < set.size(); ++g) {
        PairingReport r = detail::pairing_under_gauge(raw, w, g, tol);
        if (r.conforms) {
            r.pairwise = true;
            return r;
        }
        if (g == 0 || r.max_residual < best.max_residual) best = std::move(r);
    }
    for (int g = 0; g < set.size(); ++g) {
        PairingReport r = detail::span_decomposition(raw, w, g, tol);
        if (r.conforms) return r;
        if (r.max_residual < best.max_residual) best = std::move(r);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Ninth and tenth unitaries

struct Certificate {
    double x = 0.0;
    bool feasible = false;
    double slack = 0.0;  ///< 4 - (1-3x)/x^2
};

inline Certificate ninth_feasibility_certificate(double x) {
    if (!(x > 0.0) || 1.0 - 3.0 * x <= 0.0)
        throw Error("certificate needs 0 < x < 1/3, got " + std::to_string(x));
    // 4 - (1-3x)/x^2 = (4x - 1)(x + 1)/x^2; the factored form has the exact sign.
    const double slack = (4.0 * x - 1.0) * (x + 1.0) / (x * x);
    return {x, slack >= 0.0, slack};
}

/// Free data of a ninth unitary W = [[a, b], [c, d]] against a block set.
struct WParams {
    Complex delta;     ///< Tr(d)
    ComplexMatrix V;   ///< b = s_b V B
    ComplexMatrix Vp;  ///< d = s_d V'
};

struct WCandidate {
    ComplexMatrix a, b, c, d;
    Complex delta, gamma;
    ComplexMatrix V, Vp;
    double theta = 0.0, phi = 0.0;  ///< closed-form phases of tilde_a and tilde_a'

    ComplexMatrix assemble() const { return BlockView::assemble(a, b, c, d); }
};

struct NinthTenth {
    Certificate certificate;
    WCandidate w;
    ComplexMatrix W, Wp;
    std::vector<ComplexMatrix> members;  ///< block set members followed by W, W'
    double max_overlap = 0.0;
    double unitarity_defect = 0.0;

    MessageSet message_set(const SchmidtSpectrum& spec) const {
        std::vector<Message> ms;
        for (const auto& m : members) ms.push_back(Message::unitary(m));
        return MessageSet(spec, std::move(ms));
    }
};

namespace detail {

struct WGeometry {
    ComplexMatrix at, atp;  ///< A tilde_a A^dagger and B1 tilde_a' B2
    ComplexMatrix Y;        ///< (1-3x) at atp^dagger, unitary
};

inline WGeometry w_geometry(const BlockSet& bs) {
    WGeometry g;
    g.at = bs.A * tilde_a(bs.u) * bs.A.adjoint();
    g.atp = bs.B1 * tilde_a(bs.v) * bs.B2;
    g.Y = (1.0 - 3.0 * bs.x) * g.at * g.atp.adjoint();
    return g;
}

}  // namespace detail

/// Parameters that satisfy every trace relation: |delta|^2 is free in
/// (0, (1-3x)/x^2), eta is the phase of gamma, and `axis` picks the
/// remaining direction of V on its feasible circle.
inline WParams solve_ninth_parameters(const BlockSet& bs, double delta_abs2, double eta = 0.0,
                                      const Eigen::Vector3d& axis = Eigen::Vector3d(0.0, 0.0, 1.0)) {
    const double x = bs.x;
    const Certificate cert = ninth_feasibility_certificate(x);
    if (!cert.feasible) throw CertificateError("no ninth unitary: x < 1/4", cert.slack);
    const double total = (1.0 - 3.0 * x) / (x * x);
    if (!(delta_abs2 > 0.0 && delta_abs2 < total))
        throw Error("|delta|^2 must lie in (0, (1-3x)/x^2)");

    const detail::WGeometry geo = detail::w_geometry(bs);
    // B Y^dagger = e^{i xi} (g0 I + i g.sigma) with g0 >= 0.
    const ComplexMatrix by = bs.B * geo.Y.adjoint();
    const Complex det = by.determinant();
    Complex ph = std::sqrt(det);
    ComplexMatrix q = by / ph;  // SU(2)
    Complex g0c = q.trace() / 2.0;
    if (g0c.real() < 0.0) {
        ph = -ph;
        q = -q;
        g0c = -g0c;
    }
    const double g0 = g0c.real();
    Eigen::Vector3d gv;
    for (int k = 0; k < 3; ++k) gv(k) = ((q * detail::pauli()[k]).trace() / Complex(0.0, 2.0)).real();
    const double xi = std::arg(ph);

    // V = e^{i eta} (w0 I + i w.sigma) with w.g = w0 (g0 - 1), |w|^2 = 1 - w0^2.
    const double w0 = std::sqrt(1.0 - 3.0 * x) / (2.0 * x);
    const double wn2 = std::max(0.0, 1.0 - w0 * w0);
    Eigen::Vector3d w = Eigen::Vector3d::Zero();
    const double gn = gv.norm();
    double w_par = 0.0;
    Eigen::Vector3d ghat = Eigen::Vector3d::Zero();
    if (gn > 1e-14) {
        ghat = gv / gn;
        w_par = w0 * (g0 - 1.0) / gn;
        if (w_par * w_par > wn2 * (1.0 + 1e-12))
            throw Error("dressings admit no V with the required trace (w.g out of range)");
        w += w_par * ghat;
    }
    Eigen::Vector3d perp = axis - axis.dot(ghat) * ghat;
    if (perp.norm() < 1e-12) perp = ghat.unitOrthogonal();
    w += std::sqrt(std::max(0.0, wn2 - w_par * w_par)) * perp.normalized();

    WParams p;
    p.V = std::exp(Complex(0.0, eta)) * detail::quaternion(w0, w);
    const double arg_delta = eta + (xi - std::numbers::pi) / 2.0;
    p.delta = std::polar(std::sqrt(delta_abs2), arg_delta);
    const double pp = x * x * delta_abs2 / (1.0 - 3.0 * x);
    const double sb = std::sqrt(1.0 - pp);
    const Complex gamma = sb * p.V.trace();
    const double psi = std::arg(p.delta) - std::arg(gamma);
    p.Vp = -std::exp(Complex(0.0, -psi)) * geo.Y.adjoint() * p.V * bs.B;
    return p;
}

/// Assembles W and W' = [[-x delta' tilde_a, i d^dagger B], [-x gamma' tilde_a', -i b^dagger B]]
/// and checks every relation. Throws CertificateError when x < 1/4 and Error
/// naming the first violated relation otherwise.
inline NinthTenth build_ninth_and_tenth(const BlockSet& bs, const WParams& p, double tol = 1e-10) {
    const double x = bs.x;
    NinthTenth out;
    out.certificate = ninth_feasibility_certificate(x);
    if (!out.certificate.feasible)
        throw CertificateError("no ninth unitary: trace bound (1-3x)/x^2 <= 4 fails (x < 1/4)", out.certificate.slack);
    detail::require_unitary(p.V, "V", tol);
    detail::require_unitary(p.Vp, "V'", tol);

    const detail::WGeometry geo = detail::w_geometry(bs);
    const double total = (1.0 - 3.0 * x) / (x * x);
    const double d2 = std::norm(p.delta);
    if (d2 > total) throw Error("relation |delta|^2 + |gamma|^2 = (1-3x)/x^2 violated: |delta|^2 too large");
    const double pp = x * x * d2 / (1.0 - 3.0 * x);
    const double sb = std::sqrt(1.0 - pp), sd = std::sqrt(pp);

    WCandidate& w = out.w;
    w.delta = p.delta;
    w.V = p.V;
    w.Vp = p.Vp;
    w.gamma = sb * p.V.trace();
    w.theta = tilde_a_phase(bs.u);
    w.phi = tilde_a_phase(bs.v);
    auto fail = [](const std::string& rel, double r) {
        std::ostringstream os;
        os << "relation " << rel << " violated (residual " << r << ")";
        throw Error(os.str());
    };
    if (double r = std::abs(std::norm(w.gamma) + d2 - total); r > tol * std::max(1.0, total))
        fail("|gamma|^2 = (1 - x^2|delta|^2/(1-3x)) |Tr V|^2 with |delta|^2 + |gamma|^2 = (1-3x)/x^2", r);
    if (double r = std::abs(sd * p.Vp.trace() - p.delta); r > tol)
        fail("|delta|^2 = (1 - x^2|gamma|^2/(1-3x)) |Tr V'|^2 (Tr d = delta)", r);

    w.a = -x * w.delta * geo.at;
    w.b = sb * p.V * bs.B;
    w.c = -x * w.gamma * geo.atp;
    w.d = sd * p.Vp;
    if (double r = (w.a * w.c.adjoint() + w.b * w.d.adjoint()).norm(); r > tol)
        fail("a c^dagger + b d^dagger = 0 (V' = -e^{-i psi} Y^dagger V B)", r);
    out.W = w.assemble();

    const Complex i(0.0, 1.0);
    const Complex delta_p = -i * std::conj(w.gamma);
    const Complex gamma_p = i * std::conj(w.delta);
    out.Wp = BlockView::assemble(-x * delta_p * geo.at, i * w.d.adjoint() * bs.B, -x * gamma_p * geo.atp,
                                 -i * w.b.adjoint() * bs.B);

    const Eigen::Vector4d lam = bs.weights();
    auto overlap_with_set = [&](const ComplexMatrix& m) {
        double worst = 0.0;
        for (const auto& u : bs.members) worst = std::max(worst, std::abs((m * lam.asDiagonal() * u.adjoint()).trace()));
        return worst;
    };
    if (double r = unitarity_defect(out.W); r > tol) fail("W unitary", r);
    if (double r = overlap_with_set(out.W); r > tol) fail("Tr(W Lambda U_j^dagger) = 0", r);
    // The dual construction needs a^dagger b + c^dagger d = 0 in the order
    // produced by W' as well, which holds when tilde_a' is a multiple of tilde_a.
    if (double r = unitarity_defect(out.Wp); r > tol) fail("W' unitary (needs tilde_a' proportional to tilde_a)", r);
    if (double r = overlap_with_set(out.Wp); r > tol) fail("Tr(W' Lambda U_j^dagger) = 0", r);

    out.members = bs.members;
    out.members.push_back(out.W);
    out.members.push_back(out.Wp);
    out.max_overlap = detail::max_cross_overlap(out.members, lam);
    for (const auto& m : out.members) out.unitarity_defect = std::max(out.unitarity_defect, unitarity_defect(m));
    if (out.max_overlap > tol) fail("Tr(W Lambda W'^dagger) = 0", out.max_overlap);
    return out;
}

// ---------------------------------------------------------------------------
// Two qubits

struct NoGoReport {
    double lambda0 = 0.0, lambda1 = 0.0;
    ComplexMatrix U1;                ///< forced second unitary nu* |0><1| + nu |1><0| (nu = 1)
    double forced_mu = 0.0;          ///< diagonal weight of U1 allowed by orthogonality to I
    ComplexVector Phi1, Phi2;        ///< basis of the complement of the two encoded states
    double coefficient_a = 0.0;      ///< lambda1 / lambda0
    double coefficient_b = 0.0;      ///< lambda0 / lambda1
    double gap = 0.0;                ///< lambda0/lambda1 - lambda1/lambda0 > 0
    double basis_residual = 0.0;     ///< orthonormality of {Psi0, Psi1, Phi1, Phi2}
};

/// Kraus operator of a third message whose encoded state is alpha Phi1 + beta Phi2.
/// Its K^dagger K has diagonal (|alpha|^2 + |beta|^2) (lambda1/lambda0, lambda0/lambda1).
inline ComplexMatrix no_go_kraus(double lambda0, Complex alpha, Complex beta) {
    const double r = std::sqrt((1.0 - lambda0) / lambda0);
    ComplexMatrix k(2, 2);
    k << alpha * r, beta / r, -beta * r, -alpha / r;
    return k;
}

inline NoGoReport qubit_no_go(double lambda0) {
    if (lambda0 == 0.5) throw Error("no obstruction: maximally entangled");
    if (!(lambda0 > 0.5 && lambda0 < 1.0)) throw Error("qubit_no_go needs 1/2 < lambda0 < 1");
    NoGoReport r;
    r.lambda0 = lambda0;
    r.lambda1 = 1.0 - lambda0;
    const double l0 = r.lambda0, l1 = r.lambda1;
    const SchmidtSpectrum spec({l0, l1});

    // U1 = [[mu, -e^{i phi} nu*], [nu, e^{i phi} mu*]]; Tr(U1 Lambda) = 0 reads
    // mu l0 + e^{i phi} mu* l1 = 0 and, because l0 != l1, forces mu = 0.
    r.forced_mu = 0.0;
    r.U1 = ComplexMatrix::Zero(2, 2);
    r.U1(0, 1) = 1.0;
    r.U1(1, 0) = 1.0;

    // Encoded states: Psi0 = sqrt(l0)|00> + sqrt(l1)|11>, Psi1 = sqrt(l1)|01> + sqrt(l0)|10>.
    const ComplexVector psi0 = encoded_state(identity(2), spec);
    const ComplexVector psi1 = encoded_state(r.U1, spec);
    r.Phi1 = ComplexVector::Zero(4);
    r.Phi1(0) = std::sqrt(l1);
    r.Phi1(3) = -std::sqrt(l0);
    r.Phi2 = ComplexVector::Zero(4);
    r.Phi2(1) = std::sqrt(l0);
    r.Phi2(2) = -std::sqrt(l1);
    ComplexMatrix basis(4, 4);
    basis << psi0, psi1, r.Phi1, r.Phi2;
    r.basis_residual = (basis.adjoint() * basis - identity(4)).norm();

    // Every Kraus operator of a third message is a no_go_kraus, so the diagonal
    // of sum K^dagger K is S (l1/l0, l0/l1) and never equals (1, 1).
    r.coefficient_a = l1 / l0;
    r.coefficient_b = l0 / l1;
    r.gap = r.coefficient_b - r.coefficient_a;
    return r;
}

}  // namespace densecode
