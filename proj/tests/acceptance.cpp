// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance [criterion...]   (default: all of 1..7)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "densecode/densecode.hpp"

using namespace densecode;

namespace {

constexpr int kRestarts = 50;

SearchConfig config(std::uint64_t seed) {
    SearchConfig c;
    c.restarts = kRestarts;
    c.seed = seed;
    return c;
}

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

ComplexMatrix pauli(int i) {
    ComplexMatrix m(2, 2);
    switch (i) {
        case 0: m << 1, 0, 0, 1; break;
        case 1: m << 0, 1, 1, 0; break;
        case 2: m << 0, Complex(0, -1), Complex(0, 1), 0; break;
        default: m << 1, 0, 0, -1; break;
    }
    return m;
}

// 1. qubit no-go
void qubit_no_go_check(Check& c) {
    for (double l0 : {0.55, 0.7, 0.9}) {
        const SchmidtSpectrum spec({l0, 1.0 - l0});
        const auto profiles = enumerate_profiles(3, 2, 4);
        for (std::size_t i = 0; i < profiles.size(); ++i) {
            const SearchOutcome out = search_feasible(spec, profiles[i], config(derive_seed(1, {i})));
            c.detail << "l0=" << l0 << " " << profiles[i].str() << " cost=" << out.best_cost << "; ";
            c.require(!out.feasible(), "3 messages feasible at lambda0=" + std::to_string(l0));
        }
        const NoGoReport r = qubit_no_go(l0);
        c.require(r.gap > 0.0, "no-go gap not positive");
        c.detail << "gap=" << r.gap << "; ";
    }
    const SearchOutcome four = search_feasible(SchmidtSpectrum::uniform(2), RankProfile::unitary(4), config(2));
    c.require(four.feasible() && four.best_cost <= 1e-11, "4 unitaries not found at lambda0=0.5");
    c.detail << "uniform N=4 cost=" << four.best_cost;
}

// 2. edge-E walls
void walls_check(Check& c) {
    const BoundaryRecord u = bisect_edge_e(0.394, 0.404, 10, Mode::unitary_only, 5e-4, config(3));
    c.detail << "N=10 unitary wall " << u.location << " +- " << u.resolution << "; ";
    c.require(std::abs(u.location - 0.400) <= 5e-4, "N=10 unitary wall off 0.400");
    const BoundaryRecord g = bisect_edge_e(0.399, 0.409, 9, Mode::general, 5e-4, config(4));
    c.detail << "N=9 general wall " << g.location << " +- " << g.resolution;
    c.require(std::abs(g.location - 0.4025) <= 5e-4, "N=9 general wall off 0.4025");
}

// 3. non-optimality window
void window_check(Check& c) {
    const SchmidtSpectrum at401 = edge_e_spectrum(0.401);
    const PointVerdict u9 = point_feasibility(at401, 9, Mode::unitary_only, config(5));
    c.require(!u9.feasible, "N=9 unitary feasible at 0.401");
    c.detail << "0.401 N=9 unitary cost=" << u9.deciding()->best_cost << "; ";

    const PointVerdict g9 = point_feasibility(at401, 9, Mode::general, config(6));
    c.require(g9.feasible, "N=9 general infeasible at 0.401");
    if (g9.feasible) {
        const SearchOutcome& w = *g9.deciding();
        c.detail << "0.401 N=9 general " << w.profile.str() << " cost=" << w.best_cost << "; ";
        c.require(w.best_cost <= 1e-11, "witness cost above 1e-11");
        const Verification v = verify_message_set(*w.witness, 1e-10);
        c.require(v.pass, "witness fails verify: " + v.worst);
        const SimulationSummary sim = run_trials(*w.witness, build_decoder(*w.witness), 10000, 7);
        c.require(sim.total_correct() == 10000, "simulation below 100%");
        c.detail << "simulated " << sim.total_correct() << "/" << sim.total_sent() << "; ";
    }

    const PointVerdict u10 = point_feasibility(edge_e_spectrum(0.399), 10, Mode::unitary_only, config(8));
    c.require(u10.feasible, "N=10 unitary infeasible at 0.399");
    c.detail << "0.399 N=10 unitary cost=" << u10.deciding()->best_cost << "; ";

    const SchmidtSpectrum at41 = edge_e_spectrum(0.41);
    const PointVerdict g9b = point_feasibility(at41, 9, Mode::general, config(9));
    c.require(!g9b.feasible, "N=9 general feasible at 0.41");
    const PointVerdict u8 = point_feasibility(at41, 8, Mode::unitary_only, config(10));
    c.require(u8.feasible, "N=8 unitary infeasible at 0.41");
    c.detail << "0.41 N=9 general min cost=";
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : g9b.attempts) best = std::min(best, a.best_cost);
    c.detail << best << " N=8 unitary cost=" << u8.deciding()->best_cost;
}

// 4. d=3 sweep
void sweep_check(Check& c) {
    const auto u = sweep_simplex(3, 0.05, Mode::unitary_only, config(11));
    const auto g = sweep_simplex(3, 0.05, Mode::general, config(11));
    c.require(u.size() == g.size() && !u.empty(), "sweep sizes differ");
    int differ = 0, over = 0;
    for (std::size_t i = 0; i < std::min(u.size(), g.size()); ++i) {
        if (u[i].max_n() != g[i].max_n()) {
            ++differ;
            c.detail << "differs at (" << u[i].grid[0] << "," << u[i].grid[1] << "," << u[i].grid[2]
                     << ")/20: " << u[i].max_n() << " vs " << g[i].max_n() << "; ";
        }
        if (u[i].max_n() > u[i].bound() || g[i].max_n() > g[i].bound()) ++over;
    }
    c.require(differ == 0, "unitary and general tables differ");
    c.require(over == 0, "max above floor(3/lambda0)");
    c.detail << u.size() << " points, " << differ << " differing, " << over << " above bound";
}

// 5. analytic certificates
void analytic_check(Check& c) {
    double worst = 0.0;
    int sign_mismatch = 0;
    for (int i = 0; i < 25; ++i) {
        const double x = 0.05 + (0.33 - 0.05) * (i + 0.5) / 25.0;
        const BlockSet bs = build_block_set(x);
        const MessageSet set(bs.spectrum(), [&] {
            std::vector<Message> ms;
            for (const auto& u : bs.members) ms.push_back(Message::unitary(u));
            return ms;
        }());
        const Verification v = verify_message_set(set, 1e-12);
        worst = std::max(worst, v.max_violation);
        c.require(v.pass, "block set fails verify at x=" + std::to_string(x));
        if (ninth_feasibility_certificate(x).feasible != (x >= 0.25)) ++sign_mismatch;
    }
    c.require(sign_mismatch == 0, "certificate sign mismatch");
    c.detail << "block sets worst violation " << worst << "; ";

    for (double x : {0.25, 0.26, 0.30}) {
        try {
            const BlockSet bs = build_block_set(x);
            const double total = (1.0 - 3.0 * x) / (x * x);
            const NinthTenth nt = build_ninth_and_tenth(bs, solve_ninth_parameters(bs, 0.5 * total));
            const Verification v = verify_message_set(nt.message_set(bs.spectrum()), 1e-10);
            c.require(v.pass, "ninth/tenth fails verify at x=" + std::to_string(x));
            c.detail << "x=" << x << " ten messages violation " << v.max_violation << "; ";
        } catch (const Error& e) {
            c.require(false, std::string("ninth/tenth refused at x=") + std::to_string(x) + ": " + e.what());
        }
    }
    for (double x : {0.20, 0.24}) {
        bool refused = false;
        try {
            const BlockSet bs = build_block_set(x);
            build_ninth_and_tenth(bs, solve_ninth_parameters(bs, 0.5 * (1.0 - 3.0 * x) / (x * x)));
        } catch (const CertificateError& e) {
            refused = true;
            c.detail << "x=" << x << " refused slack " << e.slack() << "; ";
        }
        c.require(refused, "ninth/tenth not refused at x=" + std::to_string(x));
    }
}

// 6. structure of Lambda* witnesses
void pairing_check(Check& c) {
    const SchmidtSpectrum spec = edge_e_spectrum(0.4);
    int conforming = 0, pairwise = 0;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const SearchOutcome out = search_feasible(spec, RankProfile::unitary(10), config(1000 + s));
        if (!out.feasible()) {
            c.require(false, "no witness for seed " + std::to_string(1000 + s));
            continue;
        }
        const RefineResult r = refine_unitary_set(*out.witness);
        const PairingReport p = detect_pairing(r.set, 1e-8);
        conforming += p.conforms;
        pairwise += p.pairwise;
        worst = std::max(worst, p.max_residual);
        if (!p.conforms) c.detail << "seed " << 1000 + s << ": " << p.summary() << "; ";
    }
    c.require(conforming == 10, "not every witness conforms");
    c.require(worst <= 1e-8, "residual above 1e-8");
    c.detail << conforming << "/10 conform (" << pairwise << " pairwise), worst residual " << worst;
}

// 7. property suites
void property_check(Check& c) {
    Rng rng(77);
    const SchmidtSpectrum spec({0.4, 0.3, 0.2, 0.1});
    const double h = 1e-6;
    double worst_rel = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<Message> ms;
        std::vector<ComplexMatrix> v, z;
        for (int k : {1, 2, 1, 1}) {
            v.push_back(haar_isometry(4 * k, 4, rng));
            ms.push_back(Message::from_isometry(v.back(), 4));
            ComplexMatrix amb(4 * k, 4);
            for (Eigen::Index i = 0; i < amb.size(); ++i) amb(i) = complex_gaussian(rng);
            z.push_back(project_tangent(v.back(), amb));
        }
        const MessageSet set(spec, ms);
        auto shifted = [&](double s) {
            std::vector<Message> w;
            for (std::size_t j = 0; j < v.size(); ++j) w.push_back(Message::from_isometry(v[j] + s * z[j], 4));
            return orthogonality_cost(MessageSet(spec, w));
        };
        const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        const auto grad = cost_gradient(set);
        double an = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) an += (grad[j].adjoint() * z[j]).trace().real();
        const double rel = std::abs(fd - an) / std::max(std::abs(an), 1e-3);
        worst_rel = std::max(worst_rel, rel);

        // cost invariant under a global left unitary and message reordering
        const ComplexMatrix u = haar_unitary(4, rng);
        std::vector<Message> left, rev(ms.rbegin(), ms.rend());
        for (const auto& m : ms) {
            std::vector<ComplexMatrix> ks;
            for (const auto& k : m.kraus()) ks.push_back(u * k);
            left.emplace_back(ks);
        }
        const double cost = orthogonality_cost(set);
        c.require(std::abs(orthogonality_cost(MessageSet(spec, left)) - cost) <= 1e-12, "left-unitary invariance");
        c.require(std::abs(orthogonality_cost(MessageSet(spec, rev)) - cost) <= 1e-12, "reorder invariance");

        // inner product: Hermitian symmetry and nonnegative self-inner
        const ComplexMatrix a = haar_unitary(4, rng), b = haar_unitary(4, rng);
        c.require(std::abs(lambda_inner(a, b, spec) - std::conj(lambda_inner(b, a, spec))) <= 1e-14,
                  "inner product symmetry");
        const Complex self = lambda_inner(a, a, spec);
        c.require(self.real() >= 0.0 && std::abs(self.imag()) <= 1e-14, "self inner product");
    }
    c.require(worst_rel <= 1e-6, "gradient mismatch");
    c.detail << "100 gradient points, worst relative error " << worst_rel << "; ";

    // Pauli set: verify passes, decoding is perfect
    std::vector<Message> ms;
    for (int i = 0; i < 4; ++i) ms.push_back(Message::unitary(pauli(i)));
    const MessageSet p(SchmidtSpectrum::uniform(2), ms);
    c.require(verify_message_set(p, 1e-12).pass, "Pauli verify");
    c.require(run_trials(p, build_decoder(p), 1000, 1).total_correct() == 1000, "Pauli decoding");

    // deleting messages from a witness keeps it a witness
    const SearchOutcome w = search_feasible(edge_e_spectrum(0.41), RankProfile::unitary(8), config(12));
    c.require(w.feasible(), "N=8 witness at 0.41");
    if (w.feasible()) {
        std::vector<Message> sub = w.witness->messages();
        while (sub.size() > 1) {
            sub.pop_back();
            c.require(verify_message_set(MessageSet(w.witness->spectrum(), sub), 1e-10).pass, "deletion");
        }
    }
    c.detail << "invariants checked";
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
        {"qubit no-go", qubit_no_go_check},
        {"edge-E walls", walls_check},
        {"non-optimality window", window_check},
        {"d=3 sweep", sweep_check},
        {"analytic certificates", analytic_check},
        {"Lambda* pairing structure", pairing_check},
        {"property suites", property_check},
    };
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (int i = 1; i <= 7; ++i) which.push_back(i);

    int failed = 0;
    for (int k : which) {
        if (k < 1 || k > 7) {
            std::cerr << "unknown criterion " << k << '\n';
            return 1;
        }
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[k - 1].second(c);
        } catch (const std::exception& e) {
            c.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !c.ok;
        std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << k << " (" << criteria[k - 1].first << ", "
                  << static_cast<int>(secs) << "s): " << c.detail.str() << std::endl;
    }
    return failed ? 1 : 0;
}
