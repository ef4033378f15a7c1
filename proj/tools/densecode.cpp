// densecode: command-line front end for feasibility searches, boundary
// bisection, sweeps, verification, simulation and analytic constructions.
//
// Exit codes: 0 success, 1 usage or input error, 2 negative result.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "densecode/densecode.hpp"

namespace dc = densecode;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNegative = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SearchFlags {
    dc::SearchConfig cfg;
    std::string method = "lm";

    void attach(CLI::App* app) {
        app->add_option("--restarts", cfg.restarts, "restarts per profile")->capture_default_str();
        app->add_option("--seed", cfg.seed, "base seed")->capture_default_str();
        app->add_option("--tol", cfg.success_tol, "success tolerance on the orthogonality cost")->capture_default_str();
        app->add_option("--max-iterations", cfg.max_iterations, "iterations per restart")->capture_default_str();
        app->add_option("--max-kappa", cfg.max_kappa, "largest Kraus rank in general mode")->capture_default_str();
        app->add_option("--stall-window", cfg.stall_window, "iterations over which progress is measured")
            ->capture_default_str();
        app->add_option("--jobs", cfg.jobs, "parallel restart workers")->capture_default_str();
        app->add_option("--method", method, "lm or gd")->check(CLI::IsMember({"lm", "gd"}))->capture_default_str();
    }

    dc::SearchConfig resolved() const {
        dc::SearchConfig c = cfg;
        c.method = method == "gd" ? dc::Method::gradient_descent : dc::Method::levenberg_marquardt;
        try {
            c.validate();
        } catch (const dc::Error& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

dc::SchmidtSpectrum parse_spectrum(const std::vector<double>& v, int dim) {
    if (dim > 0 && static_cast<int>(v.size()) != dim)
        throw UsageError("--schmidt has " + std::to_string(v.size()) + " entries but --dim is " + std::to_string(dim));
    try {
        return dc::SchmidtSpectrum::normalized(v, 1e-9);
    } catch (const dc::Error& e) {
        throw UsageError(std::string("malformed spectrum: ") + e.what());
    }
}

// Writes to `path`, or to stdout when the path is empty.
template <class F>
void with_output(const std::string& path, F&& write) {
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open '" + path + "' for writing");
    write(os);
}

// Folds a JSON config file into argv. Keys are long flag names; flags already
// on the command line win.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    auto it = std::find(args.begin(), args.end(), "--config");
    std::string path;
    if (it != args.end()) {
        if (it + 1 == args.end()) throw UsageError("--config needs a file");
        path = *(it + 1);
        args.erase(it, it + 2);
    } else {
        for (auto a = args.begin(); a != args.end(); ++a)
            if (a->rfind("--config=", 0) == 0) {
                path = a->substr(9);
                args.erase(a);
                break;
            }
    }
    if (path.empty()) return args;

    std::ifstream is(path);
    if (!is) throw UsageError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("malformed config '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw UsageError("config must be a JSON object");

    std::set<std::string> given;
    for (const auto& a : args)
        if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));

    auto scalar = [](const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_float()) return fmt(v.get<double>());
        return v.dump();
    };
    for (const auto& [key, v] : j.items()) {
        if (given.count(key)) continue;
        if (v.is_boolean()) {
            if (v.get<bool>()) args.push_back("--" + key);
            continue;
        }
        std::string value;
        if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i) value += (i ? "," : "") + scalar(v[i]);
        } else {
            value = scalar(v);
        }
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

// ---------------------------------------------------------------------------

struct SearchCmd {
    int dim = 0;
    std::vector<double> schmidt;
    int messages = 0;
    std::string mode = "unitary";
    std::vector<int> profile;
    std::string out;
    SearchFlags flags;

    int run() const {
        const dc::SchmidtSpectrum spec = parse_spectrum(schmidt, dim);
        const dc::SearchConfig cfg = flags.resolved();
        const dc::Mode m = dc::parse_mode(mode);
        if (messages < 1) throw UsageError("--messages must be at least 1");

        std::optional<dc::SearchOutcome> outcome;
        std::string verdict;
        if (!profile.empty()) {
            if (static_cast<int>(profile.size()) != messages)
                throw UsageError("--profile names " + std::to_string(profile.size()) + " messages, --messages is " +
                                 std::to_string(messages));
            dc::RankProfile rp;
            try {
                rp = dc::RankProfile(profile);
                rp.check_bound(spec.dim());
            } catch (const dc::Error& e) {
                throw UsageError(e.what());
            }
            if (m == dc::Mode::unitary_only && !rp.is_unitary())
                throw UsageError("--mode unitary needs every Kraus rank to be 1");
            outcome = dc::search_feasible(spec, rp, cfg);
        } else if (dc::excluded_by_bound(messages, spec)) {
            verdict = "excluded-by-bound";
        } else {
            dc::PointVerdict pv = dc::point_feasibility(spec, messages, m, cfg);
            if (const dc::SearchOutcome* d = pv.deciding()) {
                outcome = *d;
                if (!pv.feasible)
                    for (const auto& a : pv.attempts) outcome->best_cost = std::min(outcome->best_cost, a.best_cost);
            }
        }

        std::ostringstream line;
        line << std::setprecision(17);
        if (outcome) {
            verdict = outcome->feasible() ? "feasible" : "infeasible";
            line << "verdict=" << verdict << " best_cost=" << outcome->best_cost << " profile=" << outcome->profile.str();
        } else {
            if (verdict.empty()) verdict = "infeasible";
            line << "verdict=" << verdict << " best_cost=inf profile=";
        }
        line << " n=" << messages << " d=" << spec.dim() << " mode=" << dc::to_string(m) << " seed=" << cfg.seed
             << " restarts=" << cfg.restarts;

        if (outcome && outcome->feasible()) {
            const dc::MessageSet& w = *outcome->witness;
            line << " kraus_ranks=";
            const auto ks = w.kraus_ranks();
            for (std::size_t i = 0; i < ks.size(); ++i) line << (i ? "," : "") << ks[i];
            if (!out.empty()) {
                dc::FileMetadata meta;
                meta.seed = cfg.seed;
                meta.cost = dc::orthogonality_cost(w);
                dc::save_message_set(out, w, meta);
                line << " out=" << out;
            }
            std::cout << line.str() << '\n';
            return kOk;
        }
        std::cout << line.str() << '\n';
        return kNegative;
    }
};

struct BoundaryCmd {
    std::optional<double> lo, hi;
    std::vector<double> start, end;
    int messages = 0;
    std::string mode = "unitary";
    double resolution = 5e-4;
    std::string out;
    SearchFlags flags;

    int run() const {
        const dc::SearchConfig cfg = flags.resolved();
        const dc::Mode m = dc::parse_mode(mode);
        std::optional<dc::SpectrumLine> line;
        try {
            if (lo && hi) {
                line = dc::SpectrumLine::edge_e(*lo, *hi);
            } else if (!start.empty() && !end.empty()) {
                line = dc::SpectrumLine::affine(parse_spectrum(start, 0), parse_spectrum(end, 0));
            }
        } catch (const dc::Error& e) {
            throw UsageError(e.what());
        }
        if (!line) throw UsageError("boundary needs --lo and --hi (edge E) or --start and --end (affine path)");
        if (messages < 1) throw UsageError("--messages must be at least 1");

        dc::BoundaryRecord rec;
        try {
            rec = dc::bisect_boundary(*line, messages, m, resolution, cfg);
        } catch (const dc::NoTransitionError& e) {
            std::cerr << "densecode: " << e.what() << '\n';
            return kNegative;
        }
        with_output(out, [&](std::ostream& os) { dc::write_boundary_csv(os, rec); });
        std::cerr << "location=" << fmt(rec.location) << " resolution=" << fmt(rec.resolution) << '\n';
        return kOk;
    }
};

struct SweepCmd {
    int dim = 3;
    double step = 0.05;
    std::string mode = "both";
    std::string out;
    SearchFlags flags;

    int run() const {
        const dc::SearchConfig cfg = flags.resolved();
        if (mode != "both") dc::parse_mode(mode);
        std::vector<dc::Mode> modes;
        if (mode == "both")
            modes = {dc::Mode::unitary_only, dc::Mode::general};
        else
            modes = {dc::parse_mode(mode)};
        std::vector<std::vector<dc::SweepRow>> tables;
        try {
            for (dc::Mode m : modes) tables.push_back(dc::sweep_simplex(dim, step, m, cfg));
        } catch (const dc::Error& e) {
            throw UsageError(e.what());
        }
        with_output(out, [&](std::ostream& os) {
            for (std::size_t i = 0; i < modes.size(); ++i) {
                std::ostringstream part;
                dc::write_sweep_csv(part, tables[i], modes[i]);
                std::string s = part.str();
                if (i > 0) s.erase(0, s.find('\n') + 1);  // one header row
                os << s;
            }
        });
        if (tables.size() == 2) {
            bool same = true;
            for (std::size_t k = 0; k < tables[0].size(); ++k) same &= tables[0][k].max_n() == tables[1][k].max_n();
            std::cerr << "tables_identical=" << (same ? "true" : "false") << '\n';
        }
        return kOk;
    }
};

struct WindowCmd {
    std::vector<double> lambda0 = {0.399, 0.401, 0.41};
    std::string out;
    SearchFlags flags;

    int run() const {
        const dc::SearchConfig cfg = flags.resolved();
        std::vector<dc::WindowRow> rows;
        try {
            rows = dc::window_scan(lambda0, cfg);
        } catch (const dc::Error& e) {
            throw UsageError(e.what());
        }
        with_output(out, [&](std::ostream& os) { dc::write_window_csv(os, rows); });
        return kOk;
    }
};

dc::MessageSetFile load_or_usage(const std::string& path) {
    try {
        return dc::load_message_set(path);
    } catch (const dc::Error& e) {
        throw UsageError(e.what());
    }
}

struct VerifyCmd {
    std::string file;
    double tol = 1e-10;

    int run() const {
        const dc::MessageSetFile f = load_or_usage(file);
        const dc::Verification v = dc::verify_message_set(f.set, tol);
        std::cout << "pass=" << (v.pass ? "true" : "false") << " max_violation=" << fmt(v.max_violation)
                  << " cost=" << fmt(dc::orthogonality_cost(f.set)) << " stored_cost=" << fmt(f.metadata.cost)
                  << " messages=" << f.set.size() << '\n';
        if (!v.pass) std::cout << "violation: " << v.worst << '\n';
        return v.pass ? kOk : kNegative;
    }
};

struct SimulateCmd {
    std::string file;
    int trials = 10000;
    std::uint64_t seed = 0;
    std::string log;

    int run() const {
        const dc::MessageSetFile f = load_or_usage(file);
        if (trials < 1) throw UsageError("--trials must be at least 1");
        dc::Decoder dec;
        try {
            dec = dc::build_decoder(f.set);
        } catch (const dc::DecoderError& e) {
            std::cout << "decoder: " << e.what() << '\n';
            return kNegative;
        }
        const dc::SimulationSummary s = dc::run_trials(f.set, dec, trials, seed, !log.empty());
        std::cout << "message,sent,correct,accuracy\n";
        for (int j = 0; j < f.set.size(); ++j)
            std::cout << j << ',' << s.sent[j] << ',' << s.correct[j] << ','
                      << fmt(s.sent[j] ? double(s.correct[j]) / s.sent[j] : 1.0) << '\n';
        std::cout << "total," << s.total_sent() << ',' << s.total_correct() << ',' << fmt(s.accuracy()) << '\n';
        if (!log.empty()) with_output(log, [&](std::ostream& os) { dc::write_trial_csv(os, s.log); });
        return s.total_correct() == s.total_sent() ? kOk : kNegative;
    }
};

struct ConstructCmd {
    std::string family;
    std::optional<double> x;
    double lambda0 = 0.7;
    std::vector<double> phases;
    std::uint64_t dressing_seed = 0;
    double delta_fraction = 0.5;
    std::string out;

    double need_x() const {
        if (!x) throw UsageError("--family " + family + " needs --x");
        if (!(*x > 0.0 && *x < 1.0 / 3.0)) throw UsageError("--x must lie in (0, 1/3), got " + fmt(*x));
        return *x;
    }

    double phase(std::size_t i) const { return i < phases.size() ? phases[i] : 0.0; }

    dc::BlockSet block_set(double xv) const {
        if (dressing_seed == 0) {
            const dc::ComplexMatrix i2 = dc::identity(2);
            return dc::build_block_set(xv, i2, i2, i2, i2, phase(0), phase(1));
        }
        dc::Rng rng(dressing_seed);
        const dc::ComplexMatrix a = dc::haar_unitary(2, rng), b = dc::haar_unitary(2, rng);
        const dc::ComplexMatrix b1 = dc::haar_unitary(2, rng), b2 = dc::haar_unitary(2, rng);
        return dc::build_block_set(xv, a, b, b1, b2, phase(0), phase(1));
    }

    void emit(const dc::MessageSet& set) const {
        if (out.empty()) return;
        dc::FileMetadata meta;
        meta.seed = dressing_seed;
        meta.cost = dc::orthogonality_cost(set);
        dc::save_message_set(out, set, meta);
        std::cout << "out=" << out << '\n';
    }

    int run() const {
        if (family == "u") {
            const dc::UFamily f = dc::build_u_family(need_x(), phase(0));
            std::cout << "family=u x=" << fmt(f.x) << " unitarity_defect=" << fmt(f.unitarity_defect())
                      << " gram_residual=" << fmt(f.gram_residual()) << '\n';
            const dc::FiveFamily five = dc::extend_u_family(f);
            std::cout << "fifth_member=" << (five.exists() ? "exists" : "absent")
                      << " fifth_unitarity_defect=" << fmt(five.unitarity_defect) << '\n';
            std::vector<dc::Message> ms;
            for (const auto& u : f.u) ms.push_back(dc::Message::unitary(u));
            emit(dc::MessageSet(dc::SchmidtSpectrum::uniform(2), std::move(ms)));
            return kOk;
        }
        if (family == "blockset") {
            const double xv = need_x();
            const dc::BlockSet bs = block_set(xv);
            const dc::MessageSet set = [&] {
                std::vector<dc::Message> ms;
                for (const auto& u : bs.members) ms.push_back(dc::Message::unitary(u));
                return dc::MessageSet(bs.spectrum(), std::move(ms));
            }();
            std::cout << "family=blockset x=" << fmt(xv) << " lambda0=" << fmt(dc::edge_e_lambda0(xv))
                      << " messages=" << set.size() << " max_overlap=" << fmt(bs.max_overlap())
                      << " unitarity_defect=" << fmt(bs.unitarity_defect()) << '\n';
            emit(set);
            return kOk;
        }
        if (family == "ninth-tenth") {
            const double xv = need_x();
            const dc::Certificate cert = dc::ninth_feasibility_certificate(xv);
            std::cout << "certificate x=" << fmt(xv) << " slack=" << fmt(cert.slack)
                      << " feasible=" << (cert.feasible ? "true" : "false") << '\n';
            if (!(delta_fraction > 0.0 && delta_fraction < 1.0)) throw UsageError("--delta-fraction must lie in (0, 1)");
            if (!cert.feasible) return kNegative;
            try {
                const dc::BlockSet bs = block_set(xv);
                const double total = (1.0 - 3.0 * xv) / (xv * xv);
                const dc::WParams p = dc::solve_ninth_parameters(bs, delta_fraction * total);
                const dc::NinthTenth nt = dc::build_ninth_and_tenth(bs, p);
                std::cout << "family=ninth-tenth messages=" << nt.members.size()
                          << " max_overlap=" << fmt(nt.max_overlap) << " unitarity_defect=" << fmt(nt.unitarity_defect)
                          << '\n';
                emit(nt.message_set(bs.spectrum()));
            } catch (const dc::CertificateError& e) {
                std::cout << "refused: " << e.what() << " slack=" << fmt(e.slack()) << '\n';
                return kNegative;
            } catch (const dc::Error& e) {
                std::cout << "refused: " << e.what() << '\n';
                return kNegative;
            }
            return kOk;
        }
        if (family == "qubit-nogo") {
            dc::NoGoReport r;
            try {
                r = dc::qubit_no_go(lambda0);
            } catch (const dc::Error& e) {
                throw UsageError(e.what());
            }
            std::cout << "family=qubit-nogo lambda0=" << fmt(r.lambda0) << " lambda1=" << fmt(r.lambda1)
                      << " forced_mu=" << fmt(r.forced_mu) << " coefficient_a=" << fmt(r.coefficient_a)
                      << " coefficient_b=" << fmt(r.coefficient_b) << " gap=" << fmt(r.gap)
                      << " basis_residual=" << fmt(r.basis_residual) << '\n';
            return kOk;
        }
        throw UsageError("unknown family '" + family + "'");
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic dense coding: feasibility search, phase boundaries and analytic constructions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(DENSECODE_VERSION));
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with default flag values");

    SearchCmd search;
    auto* s = app.add_subcommand("search", "multi-restart feasibility search for N messages");
    s->add_option("--dim", search.dim, "local dimension d")->required();
    s->add_option("--schmidt", search.schmidt, "Schmidt coefficients, non-increasing")->delimiter(',')->required();
    s->add_option("--messages", search.messages, "number of messages N")->required();
    s->add_option("--mode", search.mode, "unitary or general")->capture_default_str();
    s->add_option("--profile", search.profile, "explicit Kraus ranks k1,...,kN")->delimiter(',');
    s->add_option("--out", search.out, "witness file (JSON)");
    search.flags.attach(s);

    BoundaryCmd boundary;
    auto* b = app.add_subcommand("boundary", "bisect the N-message feasibility transition along a path");
    b->add_option("--lo", boundary.lo, "edge-E path: lower lambda0");
    b->add_option("--hi", boundary.hi, "edge-E path: upper lambda0");
    b->add_option("--start", boundary.start, "affine path start spectrum")->delimiter(',');
    b->add_option("--end", boundary.end, "affine path end spectrum")->delimiter(',');
    b->add_option("--messages", boundary.messages, "number of messages N")->required();
    b->add_option("--mode", boundary.mode, "unitary or general")->capture_default_str();
    b->add_option("--resolution", boundary.resolution, "target bracket half-width")->capture_default_str();
    b->add_option("--out", boundary.out, "CSV file (stdout if absent)");
    boundary.flags.attach(b);

    SweepCmd sweep;
    auto* w = app.add_subcommand("sweep", "max-message table over the ordered simplex");
    w->add_option("--dim", sweep.dim, "local dimension d")->capture_default_str();
    w->add_option("--step", sweep.step, "grid step, 1/m")->capture_default_str();
    w->add_option("--mode", sweep.mode, "unitary, general or both")->capture_default_str();
    w->add_option("--out", sweep.out, "CSV file (stdout if absent)");
    sweep.flags.attach(w);

    WindowCmd window;
    auto* wn = app.add_subcommand("window", "max unitary and max general N at edge-E points");
    wn->add_option("--lambda0", window.lambda0, "edge-E lambda0 values")->delimiter(',')->capture_default_str();
    wn->add_option("--out", window.out, "CSV file (stdout if absent)");
    window.flags.attach(wn);

    VerifyCmd verify;
    auto* v = app.add_subcommand("verify", "check completeness, orthogonality and independence of a message-set file");
    v->add_option("file", verify.file, "message-set JSON")->required();
    v->add_option("--tol", verify.tol, "violation tolerance")->capture_default_str();

    SimulateCmd simulate;
    auto* sim = app.add_subcommand("simulate", "run seeded protocol trials on a message-set file");
    sim->add_option("file", simulate.file, "message-set JSON")->required();
    sim->add_option("--trials", simulate.trials, "number of trials")->capture_default_str();
    sim->add_option("--seed", simulate.seed, "trial seed")->capture_default_str();
    sim->add_option("--log", simulate.log, "per-trial CSV log");

    ConstructCmd construct;
    auto* c = app.add_subcommand("construct", "closed-form constructions and certificates");
    c->add_option("--family", construct.family, "u, blockset, ninth-tenth or qubit-nogo")
        ->required()
        ->check(CLI::IsMember({"u", "blockset", "ninth-tenth", "qubit-nogo"}));
    c->add_option("--x", construct.x, "edge-E ratio lambda2/lambda0");
    c->add_option("--lambda0", construct.lambda0, "qubit-nogo leading Schmidt coefficient")->capture_default_str();
    c->add_option("--phases", construct.phases, "free phases of the u and v families")->delimiter(',');
    c->add_option("--dressing-seed", construct.dressing_seed, "0 for identity dressings, else Haar-random ones")
        ->capture_default_str();
    c->add_option("--delta-fraction", construct.delta_fraction, "|delta|^2 as a fraction of (1-3x)/x^2")
        ->capture_default_str();
    c->add_option("--out", construct.out, "message-set JSON");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = merge_config(std::move(args));
        std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    } catch (const UsageError& e) {
        std::cerr << "densecode: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*s) return search.run();
        if (*b) return boundary.run();
        if (*w) return sweep.run();
        if (*wn) return window.run();
        if (*v) return verify.run();
        if (*sim) return simulate.run();
        if (*c) return construct.run();
    } catch (const UsageError& e) {
        std::cerr << "densecode: " << e.what() << '\n';
        return kUsage;
    } catch (const dc::Error& e) {
        std::cerr << "densecode: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
