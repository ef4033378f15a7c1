#include <gtest/gtest.h>

#include <cmath>

#include "densecode/qmat.hpp"

using namespace densecode;

namespace {

ComplexMatrix sx() {
    ComplexMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
ComplexMatrix sy() {
    ComplexMatrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}
ComplexMatrix sz() {
    ComplexMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

ComplexMatrix random_matrix(int d, Rng& rng) {
    ComplexMatrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = complex_gaussian(rng);
    return m;
}

SchmidtSpectrum random_spectrum(int d, Rng& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> v(d);
    for (auto& x : v) x = u(rng);
    std::sort(v.rbegin(), v.rend());
    double s = 0;
    for (double x : v) s += x;
    for (auto& x : v) x /= s;
    return SchmidtSpectrum::normalized(v, 1e-9);
}

}  // namespace

TEST(Spectrum, RejectsMalformed) {
    EXPECT_THROW(SchmidtSpectrum({0.3, 0.7}), Error);
    EXPECT_THROW(SchmidtSpectrum({0.6, 0.5}), Error);
    EXPECT_THROW(SchmidtSpectrum({1.0, 0.0}), Error);
    EXPECT_THROW(SchmidtSpectrum(std::vector<double>{}), Error);
    EXPECT_NO_THROW(SchmidtSpectrum({0.7, 0.3}));
}

TEST(Spectrum, NormalizedRescales) {
    const auto s = SchmidtSpectrum::normalized({0.5000000001, 0.5}, 1e-9);
    EXPECT_NEAR(s[0] + s[1], 1.0, 1e-15);
    EXPECT_THROW(SchmidtSpectrum::normalized({0.6, 0.5}, 1e-9), Error);
}

TEST(Spectrum, EdgeEAtLambdaStarHasExactQuarterRatio) {
    const auto s = edge_e_spectrum(0.4);
    EXPECT_EQ(s[0], s[1]);
    EXPECT_EQ(s[2], s[3]);
    EXPECT_EQ(s[2] / s[0], 0.25);
    EXPECT_THROW(edge_e_spectrum(0.2), Error);
    EXPECT_THROW(edge_e_spectrum(0.5), Error);
}

TEST(Spectrum, EdgeERatioRoundTrip) {
    for (double x : {0.05, 0.25, 0.3, 0.9}) {
        EXPECT_NEAR(edge_e_x(edge_e_lambda0(x)), x, 1e-15);
        const auto s = edge_e_spectrum_from_x(x);
        EXPECT_NEAR(s[2] / s[0], x, 1e-14);
    }
}

TEST(LambdaInner, Examples) {
    const auto half = SchmidtSpectrum::uniform(2);
    EXPECT_NEAR(std::abs(lambda_inner(identity(2), identity(2), half) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(lambda_inner(sx(), sy(), half)), 0.0, 1e-15);

    ComplexMatrix shift = ComplexMatrix::Zero(3, 3);
    shift(1, 0) = shift(2, 1) = shift(0, 2) = 1.0;
    const SchmidtSpectrum s3({0.5, 0.3, 0.2});
    EXPECT_NEAR(std::abs(lambda_inner(shift, shift * shift, s3)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(lambda_inner(identity(3), identity(3), s3) - 1.0), 0.0, 1e-15);
}

TEST(LambdaInner, DimensionMismatchNamesShapes) {
    try {
        lambda_inner(identity(2), identity(3), SchmidtSpectrum::uniform(2));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        const std::string w = e.what();
        EXPECT_NE(w.find("2x2"), std::string::npos) << w;
        EXPECT_NE(w.find("3x3"), std::string::npos) << w;
    }
}

TEST(LambdaInner, SelfInnerIsRealNonNegative) {
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const auto s = random_spectrum(4, rng);
        const Complex z = lambda_inner(random_matrix(4, rng) * 1.0, random_matrix(4, rng) * 0.0, s);
        EXPECT_NEAR(std::abs(z), 0.0, 1e-15);
        const ComplexMatrix k = random_matrix(4, rng);
        const Complex w = lambda_inner(k, k, s);
        EXPECT_GE(w.real(), 0.0);
        EXPECT_NEAR(w.imag(), 0.0, 1e-13);
    }
}

TEST(LambdaInnerProperty, Sesquilinear) {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const int d = 2 + t % 3;
        const auto s = random_spectrum(d, rng);
        const ComplexMatrix k1 = random_matrix(d, rng), k2 = random_matrix(d, rng), kp = random_matrix(d, rng);
        const Complex a = complex_gaussian(rng), b = complex_gaussian(rng);
        const Complex lhs = lambda_inner(a * k1 + b * k2, kp, s);
        const Complex rhs = a * lambda_inner(k1, kp, s) + b * lambda_inner(k2, kp, s);
        EXPECT_LT(std::abs(lhs - rhs), 1e-12);
        // conjugate-linear in the second slot
        const Complex l2 = lambda_inner(kp, a * k1, s);
        EXPECT_LT(std::abs(l2 - std::conj(a) * lambda_inner(kp, k1, s)), 1e-12);
    }
}

TEST(LambdaInnerProperty, GaugeInvariance) {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        const int d = 2 + t % 3;
        const auto s = random_spectrum(d, rng);
        const ComplexMatrix v = haar_unitary(d, rng);
        const ComplexMatrix k = random_matrix(d, rng), kp = random_matrix(d, rng);
        EXPECT_LT(std::abs(lambda_inner(v * k, v * kp, s) - lambda_inner(k, kp, s)), 1e-12);
    }
}

TEST(LambdaInnerProperty, BlockDiagonalOrthogonalToBlockZeroDiagonal) {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        const int d = t % 2 ? 4 : 6;
        const int h = d / 2;
        const auto s = random_spectrum(d, rng);
        ComplexMatrix diag = random_matrix(d, rng), off = random_matrix(d, rng);
        diag.block(0, h, h, h).setZero();
        diag.block(h, 0, h, h).setZero();
        off.block(0, 0, h, h).setZero();
        off.block(h, h, h, h).setZero();
        EXPECT_LT(std::abs(lambda_inner(diag, off, s)), 1e-12);
        EXPECT_LT(std::abs(lambda_inner(off, diag, s)), 1e-12);
    }
}

TEST(Completeness, Examples) {
    EXPECT_NEAR(completeness_defect(Message::unitary(sx())), 0.0, 1e-15);
    ComplexMatrix p0 = ComplexMatrix::Zero(2, 2), p1 = ComplexMatrix::Zero(2, 2);
    p0(0, 0) = 1.0;
    p1(1, 1) = 1.0;
    EXPECT_NEAR(completeness_defect(Message({p0, p1})), 0.0, 1e-15);
    EXPECT_NEAR(completeness_defect(Message({p0})), 1.0, 1e-15);
    EXPECT_THROW(Message(std::vector<ComplexMatrix>{}), Error);
}

TEST(Unitarity, Examples) {
    EXPECT_NEAR(unitarity_defect(identity(3)), 0.0, 1e-15);
    for (int d : {1, 2, 4}) EXPECT_NEAR(unitarity_defect(2.0 * identity(d)), 3.0 * std::sqrt(double(d)), 1e-12);
}

TEST(Haar, UnitaryAndDeterministic) {
    for (int d : {1, 2, 3, 4, 6}) {
        Rng a(42), b(42);
        const ComplexMatrix u = haar_unitary(d, a);
        EXPECT_LE(unitarity_defect(u), 1e-12);
        EXPECT_EQ(u, haar_unitary(d, b));
    }
    Rng r(5);
    const ComplexMatrix one = haar_unitary(1, r);
    EXPECT_NEAR(std::abs(one(0, 0)), 1.0, 1e-15);
    EXPECT_THROW(haar_unitary(0, r), Error);
}

TEST(Haar, MeanTraceVanishes) {
    // Tr U has E = 0 and E|Tr U|^2 = 1 for Haar U.
    Rng rng(7);
    const int n = 10000;
    Complex sum = 0.0;
    for (int i = 0; i < n; ++i) sum += haar_unitary(3, rng).trace();
    const double sigma = 1.0 / std::sqrt(double(n));
    EXPECT_LT(std::abs(sum.real() / n), 3.0 * sigma);
    EXPECT_LT(std::abs(sum.imag() / n), 3.0 * sigma);
}

TEST(Haar, IsometrySlicesAreComplete) {
    Rng rng(9);
    for (int kap = 1; kap <= 3; ++kap)
        for (int d : {2, 3, 4}) {
            const ComplexMatrix v = haar_isometry(kap * d, d, rng);
            EXPECT_EQ(v.rows(), kap * d);
            EXPECT_LE((v.adjoint() * v - identity(d)).norm(), 1e-12);
            const Message m = Message::from_isometry(v, d);
            EXPECT_EQ(m.kraus_rank(), kap);
            EXPECT_LE(completeness_defect(m), 1e-12);
            EXPECT_EQ(m.to_isometry(), v);
        }
    EXPECT_THROW(haar_isometry(1, 2, rng), Error);
}

TEST(MessageSet, EnforcesRankBound) {
    std::vector<Message> ms(5, Message::unitary(identity(2)));
    EXPECT_THROW(MessageSet(SchmidtSpectrum::uniform(2), ms), Error);
    ms.pop_back();
    EXPECT_NO_THROW(MessageSet(SchmidtSpectrum::uniform(2), ms));
    EXPECT_THROW(MessageSet(SchmidtSpectrum::uniform(3), ms), Error);
}

TEST(Gram, PauliSet) {
    const MessageSet set(SchmidtSpectrum::uniform(2), {Message::unitary(identity(2)), Message::unitary(sx()),
                                                       Message::unitary(sy()), Message::unitary(sz())});
    const ComplexMatrix g = pairwise_gram(set);
    EXPECT_LE((g - ComplexMatrix::Identity(4, 4)).norm(), 1e-15);
}

TEST(Gram, HermitianWithOwnBlocks) {
    Rng rng(4);
    const SchmidtSpectrum s({0.5, 0.3, 0.2});
    const MessageSet set(s, {Message::from_isometry(haar_isometry(6, 3, rng), 3),
                             Message::unitary(haar_unitary(3, rng))});
    const ComplexMatrix g = pairwise_gram(set);
    ASSERT_EQ(g.rows(), 3);
    EXPECT_LE((g - g.adjoint()).norm(), 1e-14);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const ComplexMatrix& ka = a < 2 ? set[0][a] : set[1][0];
            const ComplexMatrix& kb = b < 2 ? set[0][b] : set[1][0];
            EXPECT_LT(std::abs(g(a, b) - lambda_inner(ka, kb, s)), 1e-14);
        }
}

TEST(BlockView, ReassemblesExactly) {
    Rng rng(6);
    const ComplexMatrix m = random_matrix(4, rng);
    const BlockView b = BlockView::split(m);
    EXPECT_EQ(b.assemble(), m);
    EXPECT_THROW(BlockView::split(random_matrix(3, rng)), Error);
}

TEST(Random, DeriveSeedSeparatesPaths) {
    EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
    EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
    EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
}
