#pragma once

// Complex-matrix domain types shared by every other part of the library:
// Schmidt spectra, Kraus-operator messages, message sets, the Lambda-weighted
// trace inner product and Haar sampling.

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <complex>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "densecode/error.hpp"
#include "densecode/random.hpp"

namespace densecode {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kConstructionTol = 1e-12;

inline std::string shape_string(const ComplexMatrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

/// Ordered Schmidt coefficients lambda_0 >= ... >= lambda_{d-1} > 0 summing to one.
class SchmidtSpectrum {
public:
    explicit SchmidtSpectrum(std::vector<double> lambdas, double sum_tol = kConstructionTol)
        : lambdas_(std::move(lambdas)) {
        validate(sum_tol);
    }

    /// Accepts a spectrum normalized only to `sum_tol` and rescales it to sum exactly one.
    static SchmidtSpectrum normalized(std::vector<double> lambdas, double sum_tol) {
        SchmidtSpectrum probe(lambdas, sum_tol);
        const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
        for (double& l : lambdas) l /= total;
        return SchmidtSpectrum(std::move(lambdas), 1e-14);
    }

    static SchmidtSpectrum uniform(int d) { return SchmidtSpectrum(std::vector<double>(d, 1.0 / d)); }

    int dim() const { return static_cast<int>(lambdas_.size()); }
    const std::vector<double>& lambdas() const { return lambdas_; }
    double operator[](int i) const { return lambdas_[i]; }
    double leading() const { return lambdas_.front(); }

    Eigen::VectorXd diagonal() const {
        return Eigen::Map<const Eigen::VectorXd>(lambdas_.data(), dim());
    }

    friend bool operator==(const SchmidtSpectrum&, const SchmidtSpectrum&) = default;

private:
    void validate(double sum_tol) const {
        if (lambdas_.empty()) throw Error("Schmidt spectrum must be nonempty");
        double total = 0.0;
        for (std::size_t i = 0; i < lambdas_.size(); ++i) {
            const double l = lambdas_[i];
            if (!std::isfinite(l) || l <= 0.0)
                throw Error("Schmidt coefficient " + std::to_string(i) + " must be positive and finite");
            if (i > 0 && l > lambdas_[i - 1])
                throw Error("Schmidt coefficients must be non-increasing (index " + std::to_string(i) + ")");
            total += l;
        }
        if (std::abs(total - 1.0) > sum_tol)
            throw Error("Schmidt coefficients sum to " + std::to_string(total) + ", expected 1");
    }

    std::vector<double> lambdas_;
};

/// One quantum operation given by kappa Kraus operators; kappa == 1 is a unitary message.
///
/// Only structural invariants are enforced on construction (nonempty, square,
/// common dimension). Completeness and linear independence are numerical
/// properties checked by completeness_defect() and the protocol verifier, so
/// that defective candidates can still be represented and diagnosed.
class Message {
public:
    explicit Message(std::vector<ComplexMatrix> kraus) : kraus_(std::move(kraus)) {
        if (kraus_.empty()) throw Error("message needs at least one Kraus operator");
        const auto d = kraus_.front().rows();
        for (const auto& k : kraus_) {
            if (k.rows() != d || k.cols() != d)
                throw Error("Kraus operator has shape " + shape_string(k) + ", expected " +
                            std::to_string(d) + "x" + std::to_string(d));
            if (!k.allFinite()) throw Error("Kraus operator has non-finite entries");
        }
    }

    static Message unitary(ComplexMatrix u) { return Message({std::move(u)}); }

    /// Slices a (kappa*d) x d isometry into kappa stacked d x d Kraus operators.
    static Message from_isometry(const ComplexMatrix& v, int d) {
        if (d <= 0 || v.cols() != d || v.rows() % d != 0)
            throw Error("isometry of shape " + shape_string(v) + " cannot be sliced into " +
                        std::to_string(d) + "x" + std::to_string(d) + " blocks");
        std::vector<ComplexMatrix> ks;
        for (Eigen::Index k = 0; k < v.rows() / d; ++k) ks.emplace_back(v.middleRows(k * d, d));
        return Message(std::move(ks));
    }

    ComplexMatrix to_isometry() const {
        ComplexMatrix v(kraus_rank() * dim(), dim());
        for (int k = 0; k < kraus_rank(); ++k) v.middleRows(k * dim(), dim()) = kraus_[k];
        return v;
    }

    int dim() const { return static_cast<int>(kraus_.front().rows()); }
    int kraus_rank() const { return static_cast<int>(kraus_.size()); }
    const std::vector<ComplexMatrix>& kraus() const { return kraus_; }
    const ComplexMatrix& operator[](int k) const { return kraus_[k]; }

private:
    std::vector<ComplexMatrix> kraus_;
};

/// N messages over a common Schmidt spectrum. Enforces the Hilbert-space
/// counting bound sum_j kappa_j <= d^2.
class MessageSet {
public:
    MessageSet(SchmidtSpectrum spectrum, std::vector<Message> messages)
        : spectrum_(std::move(spectrum)), messages_(std::move(messages)) {
        const int d = spectrum_.dim();
        int total = 0;
        for (std::size_t j = 0; j < messages_.size(); ++j) {
            if (messages_[j].dim() != d)
                throw Error("message " + std::to_string(j) + " has dimension " +
                            std::to_string(messages_[j].dim()) + ", spectrum has " + std::to_string(d));
            total += messages_[j].kraus_rank();
        }
        if (total > d * d)
            throw Error("total Kraus rank " + std::to_string(total) + " exceeds d^2 = " + std::to_string(d * d) +
                        " (at most d^2 linearly independent states)");
    }

    int dim() const { return spectrum_.dim(); }
    int size() const { return static_cast<int>(messages_.size()); }
    const SchmidtSpectrum& spectrum() const { return spectrum_; }
    const std::vector<Message>& messages() const { return messages_; }
    const Message& operator[](int j) const { return messages_[j]; }

    int total_kraus_rank() const {
        int t = 0;
        for (const auto& m : messages_) t += m.kraus_rank();
        return t;
    }

    std::vector<int> kraus_ranks() const {
        std::vector<int> r;
        for (const auto& m : messages_) r.push_back(m.kraus_rank());
        return r;
    }

private:
    SchmidtSpectrum spectrum_;
    std::vector<Message> messages_;
};

/// The four equal blocks of an even-dimensional square matrix.
struct BlockView {
    ComplexMatrix upper_left;
    ComplexMatrix upper_right;
    ComplexMatrix lower_left;
    ComplexMatrix lower_right;

    static BlockView split(const ComplexMatrix& m) {
        if (m.rows() != m.cols() || m.rows() % 2 != 0)
            throw Error("block view needs an even square matrix, got " + shape_string(m));
        const auto h = m.rows() / 2;
        return {m.topLeftCorner(h, h), m.topRightCorner(h, h), m.bottomLeftCorner(h, h),
                m.bottomRightCorner(h, h)};
    }

    ComplexMatrix assemble() const {
        const auto h = upper_left.rows();
        ComplexMatrix m(2 * h, 2 * h);
        m << upper_left, upper_right, lower_left, lower_right;
        return m;
    }

    static ComplexMatrix assemble(const ComplexMatrix& ul, const ComplexMatrix& ur, const ComplexMatrix& ll,
                                  const ComplexMatrix& lr) {
        return BlockView{ul, ur, ll, lr}.assemble();
    }
};

/// Tr(K Lambda Kp^dagger): the overlap <Psi'|Psi> of the states (K x I)|Psi0> and (Kp x I)|Psi0>.
inline Complex lambda_inner(const ComplexMatrix& k, const ComplexMatrix& kp, const SchmidtSpectrum& spec) {
    const int d = spec.dim();
    if (k.rows() != d || k.cols() != d || kp.rows() != d || kp.cols() != d)
        throw Error("lambda_inner: operands " + shape_string(k) + " and " + shape_string(kp) +
                    " do not match spectrum dimension " + std::to_string(d));
    Complex acc = 0.0;
    // Eigen's dot conjugates its left operand: kp.col(q).dot(k.col(q)) = sum_p conj(Kp_pq) K_pq
    for (int q = 0; q < d; ++q) acc += spec[q] * kp.col(q).dot(k.col(q));
    return acc;
}

inline ComplexMatrix completeness_residual(const Message& m) {
    ComplexMatrix s = ComplexMatrix::Zero(m.dim(), m.dim());
    for (const auto& k : m.kraus()) s.noalias() += k.adjoint() * k;
    s -= ComplexMatrix::Identity(m.dim(), m.dim());
    return s;
}

/// ||sum_k K_k^dagger K_k - I||_F
inline double completeness_defect(const Message& m) { return completeness_residual(m).norm(); }

/// ||M^dagger M - I||_F
inline double unitarity_defect(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw Error("unitarity_defect needs a square matrix, got " + shape_string(m));
    return (m.adjoint() * m - ComplexMatrix::Identity(m.rows(), m.cols())).norm();
}

/// Haar-distributed isometry with orthonormal columns, shape rows x cols.
/// QR of a complex Ginibre matrix with the phases of R's diagonal folded into Q.
inline ComplexMatrix haar_isometry(int rows, int cols, Rng& rng) {
    if (cols < 1) throw Error("haar_isometry: column count must be positive");
    if (rows < cols)
        throw Error("haar_isometry: need rows >= cols, got " + std::to_string(rows) + " < " + std::to_string(cols));
    ComplexMatrix z(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) z(r, c) = complex_gaussian(rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(rows, cols);
    const ComplexMatrix& r = qr.matrixQR();
    for (int c = 0; c < cols; ++c) {
        const Complex rc = r(c, c);
        const double mag = std::abs(rc);
        q.col(c) *= (mag > 0.0 ? rc / mag : Complex(1.0));
    }
    return q;
}

inline ComplexMatrix haar_unitary(int d, Rng& rng) {
    if (d < 1) throw Error("haar_unitary: dimension must be positive");
    return haar_isometry(d, d, rng);
}

/// Gram matrix of the Lambda inner product over all Kraus operators of the set,
/// indexed by flattened (message, kraus) pairs in message order. Hermitian.
inline ComplexMatrix pairwise_gram(const MessageSet& set) {
    const int d = set.dim();
    const int total = set.total_kraus_rank();
    // Column a holds vec(K_a); the Lambda-weighted copy scales column q of K_a by lambda_q.
    ComplexMatrix flat(d * d, total), weighted(d * d, total);
    const Eigen::VectorXd lam = set.spectrum().diagonal();
    int a = 0;
    for (const auto& m : set.messages()) {
        for (const auto& k : m.kraus()) {
            flat.col(a) = Eigen::Map<const ComplexVector>(k.data(), d * d);
            ComplexMatrix kl = k * lam.asDiagonal();
            weighted.col(a) = Eigen::Map<const ComplexVector>(kl.data(), d * d);
            ++a;
        }
    }
    // G(a, b) = sum vec(K_a Lambda) conj(vec(K_b)) = Tr(K_a Lambda K_b^dagger)
    return (flat.adjoint() * weighted).transpose();
}

inline ComplexMatrix identity(int d) { return ComplexMatrix::Identity(d, d); }

/// d = 4 spectrum (l0, l0, (1-2 l0)/2, (1-2 l0)/2) on edge E. The endpoint
/// l0 = 1/2 has zero Schmidt coefficients and is rejected.
inline SchmidtSpectrum edge_e_spectrum(double lambda0) {
    if (!(lambda0 >= 0.25 && lambda0 <= 0.5))
        throw Error("edge E needs 1/4 <= lambda0 <= 1/2, got " + std::to_string(lambda0));
    if (lambda0 == 0.5) throw Error("edge E at lambda0 = 1/2 has zero Schmidt coefficients");
    // Only the ratio lambda2 / lambda0 matters for orthogonality. Taking lambda0
    // as its shortest decimal and rounding (1 - 2 lambda0)/2 from long double
    // keeps e.g. 0.4 -> (0.4, 0.4, 0.1, 0.1) exactly at ratio 1/4, whereas the
    // double expression lands just past the wall.
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf - 1, lambda0);
    *res.ptr = '\0';
    const long double l0 = std::strtold(buf, nullptr);
    const double l2 = static_cast<double>((1.0L - 2.0L * l0) / 2.0L);
    return SchmidtSpectrum({lambda0, lambda0, l2, l2});
}

/// Edge-E point with ratio x = lambda2 / lambda0; lambda0 = 1 / (2 (1 + x)).
inline double edge_e_lambda0(double x) { return 1.0 / (2.0 * (1.0 + x)); }
inline double edge_e_x(double lambda0) { return (1.0 - 2.0 * lambda0) / (2.0 * lambda0); }

/// Same as edge_e_spectrum(edge_e_lambda0(x)) but with lambda2 = x * lambda0
/// computed directly, so the ratio is exact to roundoff.
inline SchmidtSpectrum edge_e_spectrum_from_x(double x) {
    if (!(x > 0.0 && x <= 1.0)) throw Error("edge E needs 0 < x <= 1, got " + std::to_string(x));
    const double l0 = edge_e_lambda0(x);
    const double l2 = x * l0;
    return SchmidtSpectrum::normalized({l0, l0, l2, l2}, 1e-14);
}

}  // namespace densecode
