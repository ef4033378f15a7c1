#include <gtest/gtest.h>

#include "densecode/analytic.hpp"
#include "densecode/feasibility.hpp"
#include "densecode/protocol.hpp"
#include "densecode/refine.hpp"

using namespace densecode;

TEST(Refine, RestoresAPerturbedLambdaStarSet) {
    Rng rng(5);
    const MessageSet exact = lambda_star_set(haar_unitary(2, rng), haar_unitary(2, rng), 0.3);
    std::vector<Message> ms;
    for (int j = 0; j < exact.size(); ++j) {
        ComplexMatrix h(4, 4);
        for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = complex_gaussian(rng);
        h = (1e-6 * (h + h.adjoint())).eval();
        const Complex half(0.0, 0.5);
        const ComplexMatrix cayley = (identity(4) - half * h).inverse() * (identity(4) + half * h);
        const ComplexMatrix step = j == 0 ? identity(4) : cayley;
        ms.push_back(Message::unitary(exact[j][0] * step));
    }
    const MessageSet noisy(exact.spectrum(), ms);
    const RefineResult r = refine_unitary_set(noisy);
    EXPECT_GT(r.cost_before, 1e-14);
    EXPECT_LT(r.cost_after, 1e-28);
    EXPECT_LE((r.set[0][0] - noisy[0][0]).norm(), 1e-15);
    for (const auto& m : r.set.messages()) EXPECT_LE(unitarity_defect(m[0]), 1e-13);
    EXPECT_TRUE(detect_pairing(r.set).conforms);
}

TEST(Refine, Preconditions) {
    const SchmidtSpectrum s = SchmidtSpectrum::uniform(2);
    EXPECT_THROW(refine_unitary_set(MessageSet(s, {Message::unitary(identity(2))})), Error);
    const ComplexMatrix k = identity(2) / std::sqrt(2.0);
    EXPECT_THROW(refine_unitary_set(MessageSet(s, {Message::unitary(identity(2)), Message({k, k})})), Error);
}

TEST(Refine, SearchWitnessAtLambdaStarPairs) {
    SearchConfig cfg;
    cfg.seed = 99;
    const SearchOutcome out = search_feasible(edge_e_spectrum(0.4), RankProfile::unitary(10), cfg);
    ASSERT_TRUE(out.feasible());
    const RefineResult r = refine_unitary_set(*out.witness);
    EXPECT_LE(r.cost_after, r.cost_before);
    EXPECT_TRUE(verify_message_set(r.set, 1e-12).pass);
    const PairingReport rep = detect_pairing(r.set);
    EXPECT_TRUE(rep.conforms) << rep.summary();
    EXPECT_LE(rep.max_residual, 1e-8);
}
