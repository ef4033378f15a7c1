#pragma once

// Phase structure in Schmidt space: bisection of feasibility boundaries along
// a path, the ordered-simplex sweep of max-message tables, and the edge-E
// window scan comparing unitary and general encodings.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "densecode/feasibility.hpp"
#include "densecode/qmat.hpp"

namespace densecode {

/// A point on edge E of d = 4, lambda0 in (3/8, 1/2].
class EdgeEPoint {
public:
    explicit EdgeEPoint(double lambda0) : lambda0_(lambda0) {
        if (!(lambda0 > 0.375 && lambda0 <= 0.5))
            throw Error("edge-E point needs 3/8 < lambda0 <= 1/2, got " + std::to_string(lambda0));
    }
    static EdgeEPoint from_x(double x) { return EdgeEPoint(edge_e_lambda0(x)); }

    double lambda0() const { return lambda0_; }
    double x() const { return edge_e_x(lambda0_); }
    SchmidtSpectrum spectrum() const { return edge_e_spectrum(lambda0_); }

private:
    double lambda0_;
};

/// A path through spectrum space. Edge-E lines are parameterized by lambda0
/// itself; affine lines by t in [0, 1] between two spectra.
class SpectrumLine {
public:
    static SpectrumLine edge_e(double lo, double hi) {
        if (!(lo < hi)) throw Error("edge-E line needs lo < hi");
        edge_e_spectrum(lo);
        edge_e_spectrum(hi);
        SpectrumLine l;
        l.edge_ = true;
        l.t0_ = lo;
        l.t1_ = hi;
        return l;
    }

    static SpectrumLine affine(const SchmidtSpectrum& start, const SchmidtSpectrum& end) {
        if (start.dim() != end.dim()) throw Error("affine line endpoints have different dimensions");
        SpectrumLine l;
        l.start_ = start.lambdas();
        l.end_ = end.lambdas();
        return l;
    }

    double t0() const { return t0_; }
    double t1() const { return t1_; }
    bool is_edge_e() const { return edge_; }

    SchmidtSpectrum at(double t) const {
        if (edge_) return edge_e_spectrum(t);
        std::vector<double> v(start_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = start_[i] + t * (end_[i] - start_[i]);
        return SchmidtSpectrum::normalized(std::move(v), 1e-9);
    }

    std::string describe() const {
        std::ostringstream os;
        os << std::setprecision(17);
        if (edge_) {
            os << "edge E, lambda0 in [" << t0_ << ", " << t1_ << "]";
        } else {
            auto put = [&](const std::vector<double>& v) {
                os << "(";
                for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
                os << ")";
            };
            os << "affine ";
            put(start_);
            os << " -> ";
            put(end_);
        }
        return os.str();
    }

private:
    bool edge_ = false;
    double t0_ = 0.0, t1_ = 1.0;
    std::vector<double> start_, end_;
};

/// Verdict for n messages at one point of a path, with what is needed to replay it.
struct PointEval {
    double t = 0.0;
    bool feasible = false;
    double best_cost = 0.0;
    std::uint64_t seed = 0;
    std::string profile;  ///< deciding profile
    std::optional<MessageSet> witness;
};

inline PointEval evaluate_point(const SpectrumLine& line, double t, int n, Mode mode, const SearchConfig& cfg) {
    const SchmidtSpectrum spec = line.at(t);
    PointEval pe;
    pe.t = t;
    pe.seed = cfg.seed;
    if (excluded_by_bound(n, spec)) {
        pe.feasible = false;
        pe.best_cost = std::numeric_limits<double>::infinity();
        pe.profile = "excluded-by-bound";
        return pe;
    }
    const PointVerdict pv = point_feasibility(spec, n, mode, cfg);
    pe.feasible = pv.feasible;
    if (const SearchOutcome* d = pv.deciding()) {
        pe.profile = d->profile.str();
        pe.best_cost = d->best_cost;
        if (pv.feasible) pe.witness = d->witness;
        if (!pv.feasible) {
            for (const auto& a : pv.attempts) pe.best_cost = std::min(pe.best_cost, a.best_cost);
        }
    }
    return pe;
}

struct BoundaryRecord {
    SpectrumLine line;
    int n = 0;
    Mode mode = Mode::unitary_only;
    double location = 0.0;    ///< midpoint of the final bracket, in line parameter units
    double resolution = 0.0;  ///< half-width of the final bracket
    PointEval feasible_side;
    PointEval infeasible_side;
    std::vector<PointEval> history;  ///< every evaluated point in order
};

/// Bisects the transition of n-message feasibility along `line` until the
/// bracket half-width is at most target_resolution. Evaluation k uses the seed
/// derive_seed(cfg.seed, {k}), so a bisection refined further reproduces the
/// coarser one as a prefix.
inline BoundaryRecord bisect_boundary(const SpectrumLine& line, int n, Mode mode, double target_resolution,
                                      const SearchConfig& cfg) {
    if (!(target_resolution > 0.0)) throw Error("target resolution must be positive");
    BoundaryRecord rec;
    rec.line = line;
    rec.n = n;
    rec.mode = mode;
    int k = 0;
    auto eval = [&](double t) {
        SearchConfig sub = cfg;
        sub.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(k++)});
        rec.history.push_back(evaluate_point(line, t, n, mode, sub));
        return rec.history.back();
    };
    PointEval a = eval(line.t0());
    PointEval b = eval(line.t1());
    if (a.feasible == b.feasible)
        throw NoTransitionError("no transition on path: both endpoints are " +
                                std::string(a.feasible ? "feasible" : "infeasible"));
    PointEval& f = a.feasible ? a : b;
    PointEval& i = a.feasible ? b : a;
    PointEval feas = f, infeas = i;
    while (std::abs(infeas.t - feas.t) / 2.0 > target_resolution) {
        PointEval m = eval((feas.t + infeas.t) / 2.0);
        if (m.feasible)
            feas = std::move(m);
        else
            infeas = std::move(m);
    }
    rec.location = (feas.t + infeas.t) / 2.0;
    rec.resolution = std::abs(infeas.t - feas.t) / 2.0;
    rec.feasible_side = std::move(feas);
    rec.infeasible_side = std::move(infeas);
    return rec;
}

inline BoundaryRecord bisect_edge_e(double lo, double hi, int n, Mode mode, double target_resolution,
                                    const SearchConfig& cfg) {
    return bisect_boundary(SpectrumLine::edge_e(lo, hi), n, mode, target_resolution, cfg);
}

struct SweepRow {
    SchmidtSpectrum spectrum;
    std::vector<int> grid;  ///< integer coordinates, spectrum = grid / denominator
    int denominator = 1;
    MaxMessages result;
    int max_n() const { return result.max_n; }
    /// floor(d / lambda0) evaluated in integers
    int bound() const { return spectrum.dim() * denominator / grid.front(); }
};

/// Ordered-simplex grid points lambda = (g_0, ..., g_{d-1}) / m with
/// g_0 >= ... >= g_{d-1} >= 1 and sum g = m, where m = 1 / step.
inline std::vector<std::vector<int>> simplex_grid(int d, double step) {
    if (d < 1) throw Error("simplex grid needs d >= 1");
    const double mf = 1.0 / step;
    const int m = static_cast<int>(std::lround(mf));
    if (!(step > 0.0) || std::abs(mf - m) > 1e-9 || m < d)
        throw Error("grid step must be 1/m for an integer m >= d");
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int remaining, int cap, int slots) -> void {
        if (slots == 0) {
            if (remaining == 0) out.push_back(cur);
            return;
        }
        // each later coordinate is at least one and at most the current one
        for (int g = std::min(cap, remaining - (slots - 1)); g >= 1; --g) {
            if (g * slots < remaining) break;
            cur.push_back(g);
            self(self, remaining - g, g, slots - 1);
            cur.pop_back();
        }
    };
    rec(rec, m, m, d);
    return out;
}

/// Max-message table over the ordered simplex. Point i searches with seed
/// derive_seed(cfg.seed, {i}) in both modes, so the unitary profile sees the
/// same restarts whichever mode is swept.
inline std::vector<SweepRow> sweep_simplex(int d, double step, Mode mode, const SearchConfig& cfg) {
    const double mf = 1.0 / step;
    const int m = static_cast<int>(std::lround(mf));
    std::vector<SweepRow> rows;
    const auto grid = simplex_grid(d, step);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> lam;
        for (int g : grid[i]) lam.push_back(static_cast<double>(g) / m);
        SweepRow row{SchmidtSpectrum::normalized(lam, 1e-12), grid[i], m, {}};
        SearchConfig sub = cfg;
        sub.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(i)});
        row.result = max_messages(row.spectrum, mode, sub);
        rows.push_back(std::move(row));
    }
    return rows;
}

struct WindowRow {
    double lambda0 = 0.0;
    MaxMessages unitary;
    MaxMessages general;
};

/// Max unitary and max general message counts at edge-E points.
inline std::vector<WindowRow> window_scan(const std::vector<double>& lambda0s, const SearchConfig& cfg) {
    std::vector<WindowRow> rows;
    for (std::size_t i = 0; i < lambda0s.size(); ++i) {
        const SchmidtSpectrum spec = edge_e_spectrum(lambda0s[i]);
        SearchConfig sub = cfg;
        sub.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(i)});
        WindowRow row;
        row.lambda0 = lambda0s[i];
        row.unitary = max_messages(spec, Mode::unitary_only, sub);
        row.general = max_messages(spec, Mode::general, sub);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline void put_spectrum(std::ostream& os, const SchmidtSpectrum& s) {
    for (int i = 0; i < s.dim(); ++i) os << (i ? ";" : "") << s[i];
}

}  // namespace detail

inline void write_boundary_csv(std::ostream& os, const BoundaryRecord& r) {
    os << std::setprecision(17);
    os << "t,spectrum,n,mode,verdict,cost,seed,profile\n";
    for (const auto& p : r.history) {
        os << p.t << ',';
        detail::put_spectrum(os, r.line.at(p.t));
        os << ',' << r.n << ',' << to_string(r.mode) << ',' << (p.feasible ? "feasible" : "infeasible") << ','
           << p.best_cost << ',' << p.seed << ',' << p.profile << '\n';
    }
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, Mode mode) {
    os << std::setprecision(17);
    os << "spectrum,n,mode,verdict,cost,seed\n";
    for (const auto& row : rows) {
        for (const auto& no : row.result.per_n) {
            detail::put_spectrum(os, row.spectrum);
            double cost = std::numeric_limits<double>::infinity();
            std::uint64_t seed = 0;
            for (const auto& a : no.attempts) {
                if (a.feasible() || a.best_cost < cost) {
                    cost = a.best_cost;
                    seed = a.seed;
                }
                if (a.feasible()) break;
            }
            os << ',' << no.n << ',' << to_string(mode) << ',' << to_string(no.status) << ',' << cost << ',' << seed
               << '\n';
        }
    }
}

inline void write_window_csv(std::ostream& os, const std::vector<WindowRow>& rows) {
    os << std::setprecision(17);
    os << "lambda0,max_unitary,max_general\n";
    for (const auto& r : rows) os << r.lambda0 << ',' << r.unitary.max_n << ',' << r.general.max_n << '\n';
}

}  // namespace densecode
