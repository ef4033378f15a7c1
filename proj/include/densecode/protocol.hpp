#pragma once

// End-to-end verification and simulation of a dense-coding message set:
// Alice encodes by applying Kraus branches to her half of |Psi0>, Bob decodes
// with a projective measurement onto the per-message state subspaces.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "densecode/qmat.hpp"

namespace densecode {

struct Verification {
    bool pass = false;
    double max_violation = 0.0;       ///< max over completeness defects and cross-message overlaps
    double min_independence = 0.0;    ///< smallest within-message Gram eigenvalue seen
    std::string worst;                ///< where the largest violation (or first failure) sits
};

/// Checks completeness of every message, Lambda-orthogonality between all
/// Kraus operators of different messages, and linear independence of the
/// states inside each message.
inline Verification verify_message_set(const MessageSet& set, double tol) {
    Verification v;
    v.min_independence = std::numeric_limits<double>::infinity();
    bool independent = true;
    std::string independence_failure;

    for (int j = 0; j < set.size(); ++j) {
        const double c = completeness_defect(set[j]);
        if (c > v.max_violation) {
            v.max_violation = c;
            v.worst = "completeness of message " + std::to_string(j);
        }
    }

    const ComplexMatrix g = pairwise_gram(set);
    std::vector<int> owner, offset;
    for (int j = 0, a = 0; j < set.size(); ++j) {
        offset.push_back(a);
        for (int k = 0; k < set[j].kraus_rank(); ++k, ++a) owner.push_back(j);
    }
    for (Eigen::Index a = 0; a < g.rows(); ++a) {
        for (Eigen::Index b = a + 1; b < g.cols(); ++b) {
            if (owner[a] == owner[b]) continue;
            const double m = std::abs(g(a, b));
            if (m > v.max_violation) {
                v.max_violation = m;
                std::ostringstream os;
                os << "overlap of message " << owner[a] << " kraus " << (a - offset[owner[a]]) << " with message "
                   << owner[b] << " kraus " << (b - offset[owner[b]]);
                v.worst = os.str();
            }
        }
    }

    for (int j = 0; j < set.size(); ++j) {
        const int kap = set[j].kraus_rank();
        const ComplexMatrix block = g.block(offset[j], offset[j], kap, kap);
        const double ev = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(block, Eigen::EigenvaluesOnly).eigenvalues()(0);
        v.min_independence = std::min(v.min_independence, ev);
        if (ev <= tol && independent) {
            independent = false;
            independence_failure = "message " + std::to_string(j) + " states are linearly dependent";
        }
    }

    v.pass = v.max_violation <= tol && independent;
    if (!independent && v.max_violation <= tol) v.worst = independence_failure;
    return v;
}

/// The encoded state (K x I)|Psi0> as a d^2 vector with index (alice * d + bob).
inline ComplexVector encoded_state(const ComplexMatrix& k, const SchmidtSpectrum& spec) {
    const int d = spec.dim();
    ComplexVector psi(d * d);
    for (int p = 0; p < d; ++p)
        for (int m = 0; m < d; ++m) psi(p * d + m) = std::sqrt(spec[m]) * k(p, m);
    return psi;
}

/// Bob's measurement: one projector per message plus the complement.
struct Decoder {
    std::vector<ComplexMatrix> bases;       ///< orthonormal basis (d^2 x rank_j) of each message subspace
    std::vector<ComplexMatrix> projectors;  ///< P_j = Q_j Q_j^dagger
    ComplexMatrix complement;               ///< I - sum_j P_j

    int size() const { return static_cast<int>(projectors.size()); }
    std::vector<int> ranks() const {
        std::vector<int> r;
        for (const auto& b : bases) r.push_back(static_cast<int>(b.cols()));
        return r;
    }
};

class DecoderError : public Error {
public:
    DecoderError(const std::string& what, Verification v) : Error(what), verification(std::move(v)) {}
    Verification verification;
};

inline Decoder build_decoder(const MessageSet& set, double tol = 1e-10) {
    const Verification v = verify_message_set(set, tol);
    if (!v.pass) throw DecoderError("message set fails verification: " + v.worst, v);

    const int d = set.dim();
    Decoder dec;
    dec.complement = ComplexMatrix::Identity(d * d, d * d);
    for (const auto& m : set.messages()) {
        ComplexMatrix states(d * d, m.kraus_rank());
        for (int k = 0; k < m.kraus_rank(); ++k) states.col(k) = encoded_state(m[k], set.spectrum());
        Eigen::ColPivHouseholderQR<ComplexMatrix> qr(states);
        qr.setThreshold(tol);
        const auto rank = qr.rank();
        ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(d * d, rank);
        ComplexMatrix p = q * q.adjoint();
        dec.complement -= p;
        dec.bases.push_back(std::move(q));
        dec.projectors.push_back(std::move(p));
    }
    return dec;
}

struct Trial {
    int message = 0;
    int branch = 0;         ///< Alice's ancilla outcome k (0-based)
    int decoded = -1;       ///< Bob's outcome; size() of the decoder means "complement"
    double posterior = 0.0; ///< probability Bob assigns to the sent message's projector
};

/// One run of the protocol for message j: sample Alice's branch with
/// probability Tr(K_jk Lambda K_jk^dagger), then Bob's projective outcome on
/// the normalized branch state.
inline Trial simulate(const MessageSet& set, const Decoder& dec, int j, Rng& rng) {
    if (j < 0 || j >= set.size()) throw Error("simulate: message index " + std::to_string(j) + " out of range");
    const Message& m = set[j];
    std::vector<ComplexVector> states;
    std::vector<double> branch_p;
    for (const auto& k : m.kraus()) {
        states.push_back(encoded_state(k, set.spectrum()));
        branch_p.push_back(states.back().squaredNorm());
    }
    Trial t;
    t.message = j;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    {
        const double total = std::accumulate(branch_p.begin(), branch_p.end(), 0.0);
        double u = uni(rng) * total;
        t.branch = m.kraus_rank() - 1;
        for (int k = 0; k < m.kraus_rank(); ++k) {
            if (u < branch_p[k]) {
                t.branch = k;
                break;
            }
            u -= branch_p[k];
        }
    }
    const ComplexVector psi = states[t.branch] / std::sqrt(branch_p[t.branch]);
    std::vector<double> outcome_p;
    for (const auto& q : dec.bases) outcome_p.push_back((q.adjoint() * psi).squaredNorm());
    outcome_p.push_back(std::max(0.0, 1.0 - std::accumulate(outcome_p.begin(), outcome_p.end(), 0.0)));
    t.posterior = outcome_p[j];
    double u = uni(rng);
    t.decoded = dec.size();
    for (std::size_t i = 0; i < outcome_p.size(); ++i) {
        if (u < outcome_p[i]) {
            t.decoded = static_cast<int>(i);
            break;
        }
        u -= outcome_p[i];
    }
    return t;
}

/// Branch probabilities Tr(K_jk Lambda K_jk^dagger) for one message.
inline std::vector<double> branch_probabilities(const MessageSet& set, int j) {
    std::vector<double> p;
    for (const auto& k : set[j].kraus()) p.push_back(lambda_inner(k, k, set.spectrum()).real());
    return p;
}

struct SimulationSummary {
    std::vector<int> sent;     ///< per message
    std::vector<int> correct;  ///< decoded == sent and posterior >= 1 - certainty_tol
    std::vector<Trial> log;

    int total_sent() const { return std::accumulate(sent.begin(), sent.end(), 0); }
    int total_correct() const { return std::accumulate(correct.begin(), correct.end(), 0); }
    double accuracy() const { return total_sent() ? double(total_correct()) / total_sent() : 1.0; }
};

inline constexpr double kCertaintyTol = 1e-8;

/// Runs `trials` protocol rounds with messages cycled in order; trial t draws
/// from its own generator seeded by derive_seed(seed, {t}).
inline SimulationSummary run_trials(const MessageSet& set, const Decoder& dec, int trials, std::uint64_t seed,
                                    bool keep_log = false) {
    SimulationSummary s;
    s.sent.assign(set.size(), 0);
    s.correct.assign(set.size(), 0);
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
        const int j = t % set.size();
        const Trial tr = simulate(set, dec, j, rng);
        ++s.sent[j];
        if (tr.decoded == j && tr.posterior >= 1.0 - kCertaintyTol) ++s.correct[j];
        if (keep_log) s.log.push_back(tr);
    }
    return s;
}

inline void write_trial_csv(std::ostream& os, const std::vector<Trial>& log) {
    os << "trial,message,branch,decoded,posterior\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < log.size(); ++i)
        os << i << ',' << log[i].message << ',' << log[i].branch << ',' << log[i].decoded << ','
           << log[i].posterior << '\n';
}

}  // namespace densecode
