#pragma once

// Extended-precision refinement of an all-unitary witness. At singular points
// such as Lambda* the residual grows only quadratically with the distance to
// the exact solution set, so a double-precision cost floor near 1e-28 still
// leaves structural deviations around 1e-7. Continuing the same least-squares
// problem in long double pushes them down by another two orders.

#include <cmath>
#include <complex>
#include <vector>

#include "densecode/qmat.hpp"

namespace densecode {

struct RefineResult {
    MessageSet set;
    double cost_before = 0.0;
    double cost_after = 0.0;
    int iterations = 0;
};

namespace detail {

using LongComplex = std::complex<long double>;
using LongMatrix = Eigen::Matrix<LongComplex, Eigen::Dynamic, Eigen::Dynamic>;
using LongReal = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline std::vector<LongMatrix> hermitian_basis(int d) {
    std::vector<LongMatrix> g;
    const long double s = 1.0L / std::sqrt(2.0L);
    for (int a = 0; a < d; ++a) {
        LongMatrix h = LongMatrix::Zero(d, d);
        h(a, a) = 1.0L;
        g.push_back(h);
    }
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            LongMatrix h = LongMatrix::Zero(d, d);
            h(a, b) = h(b, a) = s;
            g.push_back(h);
            LongMatrix k = LongMatrix::Zero(d, d);
            k(a, b) = LongComplex(0.0L, -s);
            k(b, a) = LongComplex(0.0L, s);
            g.push_back(k);
        }
    return g;
}

}  // namespace detail

/// Gauss-Newton on U_j -> U_j cayley(H_j), j >= 1, in long double.
/// Message 0 stays fixed. The result is rounded back to double.
inline RefineResult refine_unitary_set(const MessageSet& set, int max_iterations = 300) {
    using namespace detail;
    const int n = set.size(), d = set.dim();
    for (const auto& m : set.messages())
        if (m.kraus_rank() != 1) throw Error("refine_unitary_set needs unitary messages");
    if (n < 2) throw Error("refine_unitary_set needs at least two messages");

    LongMatrix lam = LongMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i) lam(i, i) = static_cast<long double>(set.spectrum()[i]);
    // Re-normalize in extended precision so the spectrum sums to one exactly.
    lam /= lam.trace().real();

    std::vector<LongMatrix> u;
    for (const auto& m : set.messages()) {
        LongMatrix v = m[0].cast<LongComplex>();
        for (int it = 0; it < 4; ++it) v = (0.5L * (v + v.adjoint().inverse())).eval();  // polar Newton
        u.push_back(std::move(v));
    }

    const std::vector<LongMatrix> gens = hermitian_basis(d);
    const int p = static_cast<int>(gens.size());
    const int m = n * (n - 1);
    const int cols = (n - 1) * p;

    auto residuals = [&](const std::vector<LongMatrix>& v) {
        LongVector r(m);
        int t = 0;
        for (int j = 0; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                const LongComplex z = (v[j] * lam * v[k].adjoint()).trace();
                r(t++) = z.real();
                r(t++) = z.imag();
            }
        return r;
    };

    LongVector r = residuals(u);
    long double cost = r.squaredNorm();
    RefineResult out{set, static_cast<double>(2.0L * cost), 0.0, 0};
    const LongComplex i1(0.0L, 1.0L);

    for (int it = 0; it < max_iterations && cost > 0.0L; ++it) {
        out.iterations = it + 1;
        LongReal jac = LongReal::Zero(m, cols);
        int t = 0;
        for (int j = 0; j < n; ++j)
            for (int k = j + 1; k < n; ++k, t += 2) {
                // d Tr(U_j e^{iH} Lambda U_k^dagger) = i Tr(H Lambda U_k^dagger U_j), and -i Tr(H U_k^dagger U_j Lambda) for k.
                const LongMatrix mj = lam * u[k].adjoint() * u[j];
                const LongMatrix mk = u[k].adjoint() * u[j] * lam;
                for (int q = 0; q < p; ++q) {
                    if (j > 0) {
                        const LongComplex z = i1 * (gens[q].cwiseProduct(mj.transpose())).sum();
                        jac(t, (j - 1) * p + q) += z.real();
                        jac(t + 1, (j - 1) * p + q) += z.imag();
                    }
                    const LongComplex z = -i1 * (gens[q].cwiseProduct(mk.transpose())).sum();
                    jac(t, (k - 1) * p + q) += z.real();
                    jac(t + 1, (k - 1) * p + q) += z.imag();
                }
            }

        // Min-norm Gauss-Newton step from a rank-revealing factorization of J,
        // shortened by halving until the cost decreases.
        const LongVector step = -jac.completeOrthogonalDecomposition().solve(r);
        bool accepted = false;
        long double scale = 1.0L;
        for (int tries = 0; tries < 12 && !accepted; ++tries, scale *= 0.5L) {
            std::vector<LongMatrix> trial = u;
            const LongMatrix id = LongMatrix::Identity(d, d);
            for (int j = 1; j < n; ++j) {
                LongMatrix h = LongMatrix::Zero(d, d);
                for (int q = 0; q < p; ++q) h += scale * step((j - 1) * p + q) * gens[q];
                const LongComplex half(0.0L, 0.5L);
                trial[j] = u[j] * (id - half * h).inverse() * (id + half * h);
            }
            const LongVector rt = residuals(trial);
            const long double ct = rt.squaredNorm();
            if (ct < cost) {
                u = std::move(trial);
                r = rt;
                cost = ct;
                accepted = true;
            }
        }
        if (!accepted) break;
    }

    std::vector<Message> ms;
    for (const auto& v : u) ms.push_back(Message::unitary(v.cast<Complex>()));
    out.set = MessageSet(set.spectrum(), std::move(ms));
    out.cost_after = static_cast<double>(2.0L * cost);
    return out;
}

}  // namespace densecode
