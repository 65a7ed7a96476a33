#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mcob/error.hpp"
#include "mcob/grid1d.hpp"
#include "mcob/line_models.hpp"
#include "mcob/obstacle_core.hpp"

namespace mcob {

// ---------------------------------------------------------------------------
// Calibration of the Dirac building block over a lambda window.

struct CalibrationOptions {
    double kappa = 0.05;  ///< window half-width; 0 calibrates lambda = 1 only
    DiracBootstrap bootstrap{1e-6, 12.0, 8000};
    double t_end = 1.0;
    TimeSchedule schedule{1e-8, 0.01, 1e-3};
    std::size_t n_probes = 300;   ///< log-spaced in [probe_min, t_end]
    double probe_min = 1e-5;
    double bracket_width = 1e-6;  ///< extinction bisection
    double envelope_lo = 0.8;     ///< L / sqrt(6 t ln 1/t) band on [1e-4, 1e-2] at lambda = 1
    double envelope_hi = 1.2;
};

struct BlockCurve {
    double lambda = 1.0;
    double t_star = 0.0;
    std::vector<double> times;
    std::vector<double> measure;  ///< support measure
    std::vector<double> radius;   ///< max |x| over the support
};

struct BuildingBlockCalibration {
    double d = 0.0;         ///< 3/2 times the largest support radius over the window
    double T_star = 0.0;    ///< largest extinction time over the window
    double T_star_unit = 0.0;
    double T1 = 0.0;
    double d1 = 0.0;        ///< min over the window of the support measure at T1
    double T1_tilde = 0.0;
    double C1 = 0.0;        ///< support inside |x| < C1 sqrt(t ln 1/t) for t < 1/2
    double kappa = 0.0;
    std::vector<BlockCurve> curves;
};

inline BlockCurve measure_block(double lambda, const CalibrationOptions& opt) {
    DiracOptions o;
    o.lambda = lambda;
    o.bootstrap = opt.bootstrap;
    o.t_end = opt.t_end;
    o.schedule = opt.schedule;
    o.probes = log_spaced(opt.probe_min, opt.t_end, opt.n_probes);
    o.stop_at_extinction = true;
    BlockCurve c;
    c.lambda = lambda;
    const DiracRun run = solve_dirac(o);
    for (std::size_t k = 0; k < o.probes.size(); ++k) {
        c.times.push_back(o.probes[k]);
        if (k < run.run.snapshots.size()) {
            const auto& f = run.run.snapshots[k].field;
            const auto s = detect_support(f);
            c.measure.push_back(s.measure);
            double r = 0.0;
            for (const auto& iv : s.intervals)
                r = std::max({r, std::abs(f.grid().x(iv.first)), std::abs(f.grid().x(iv.last))});
            c.radius.push_back(r);
        } else {
            c.measure.push_back(0.0);
            c.radius.push_back(0.0);
        }
    }
    c.t_star = find_extinction(o, opt.bracket_width).t_star;
    return c;
}

/// Runs the block at lambda in {1 - kappa, 1, 1 + kappa} and extracts d, T*, T1, d1, T1~, C1.
inline BuildingBlockCalibration calibrate_block(const CalibrationOptions& opt = {}) {
    if (!(opt.kappa >= 0.0 && opt.kappa < 1.0)) reject("kappa must lie in [0, 1)");
    std::vector<double> lambdas{1.0};
    if (opt.kappa > 0.0) lambdas = {1.0 - opt.kappa, 1.0, 1.0 + opt.kappa};
    std::vector<std::future<BlockCurve>> jobs;
    for (double l : lambdas) jobs.push_back(std::async(std::launch::async, measure_block, l, opt));
    BuildingBlockCalibration c;
    c.kappa = opt.kappa;
    for (auto& j : jobs) c.curves.push_back(j.get());
    const BlockCurve& unit = c.curves[lambdas.size() == 1 ? 0 : 1];

    for (std::size_t k = 0; k < unit.times.size(); ++k) {
        const double t = unit.times[k];
        if (t < 1e-4 * (1 - 1e-12) || t > 1e-2 * (1 + 1e-12) || unit.radius[k] == 0.0) continue;
        const double ratio = unit.radius[k] / support_reference(t);
        if (ratio < opt.envelope_lo || ratio > opt.envelope_hi)
            throw Error(ErrorKind::CalibrationFailure,
                        "support envelope ratio " + std::to_string(ratio) + " outside the accepted band at t = " +
                            std::to_string(t));
    }

    double rmax = 0.0;
    for (const auto& cv : c.curves) {
        c.T_star = std::max(c.T_star, cv.t_star);
        for (std::size_t k = 0; k < cv.times.size(); ++k) {
            rmax = std::max(rmax, cv.radius[k]);
            const double t = cv.times[k];
            if (t < 0.5 && cv.radius[k] > 0.0)
                c.C1 = std::max(c.C1, cv.radius[k] / std::sqrt(t * std::log(1.0 / t)));
        }
    }
    c.T_star_unit = unit.t_star;
    c.d = 1.5 * rmax;

    std::size_t best = 0;
    for (std::size_t k = 0; k < unit.times.size(); ++k) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& cv : c.curves) m = std::min(m, cv.measure[k]);
        if (m > c.d1) {
            c.d1 = m;
            best = k;
        }
    }
    if (!(c.d1 > 0.0)) throw Error(ErrorKind::CalibrationFailure, "no probe with positive support");
    c.T1 = unit.times[best];
    for (std::size_t k = best; k-- > 0;) {
        bool ok = unit.measure[k] <= c.d1 / 8.0;
        for (const auto& cv : c.curves) ok = ok && cv.measure[k] <= c.d1 / 4.0;
        if (ok) {
            c.T1_tilde = unit.times[k];
            break;
        }
    }
    if (!(c.T1_tilde > 0.0))
        throw Error(ErrorKind::CalibrationFailure, "no admissible T1~ in the window; reduce kappa");
    return c;
}

// ---------------------------------------------------------------------------
// Gates on the scale sequence.

struct GateCheck {
    std::string gate;  ///< the inequality, as text
    int level = 0;
    double value = 0.0;
    double bound = 0.0;
    bool ok = false;
};

namespace gate {

inline const std::string ratio_decay = "theta_n/theta_{n-1} < exp(-d^2/(2 T* C1^2))/sqrt(T*)";
inline const std::string extinction_separation = "theta_{n+1}/theta_n < sqrt(T1~/T*)";
inline const std::string epsilon_sum = "sum_j eps_j < 1/9";
inline const std::string overlap_budget =
    "2 C1 theta_0 n theta_n/theta_{n-1} sqrt(T1~ ln(theta_{n-1}^2/(T1~ theta_n^2))) <= d1/(18 d)";
inline const std::string lower_index = "j_n > C1/(2d) sqrt(T* ln(theta_{n-1}^2/(T* theta_n^2)))";
inline const std::string upper_index =
    "j_n < theta_{n-1}/theta_n - C1/(2d) sqrt(T* ln(theta_{n-1}^2/(T* theta_n^2)))";
inline const std::string count = "Z_n* >= 2/(9 d theta_n)";

}  // namespace gate

inline double theta_zero(const BuildingBlockCalibration& c) { return 1.0 / (4.0 * c.d); }

inline double decay_bound(const BuildingBlockCalibration& c) {
    return std::exp(-c.d * c.d / (2.0 * c.T_star * c.C1 * c.C1)) / std::sqrt(c.T_star);
}

inline double separation_bound(const BuildingBlockCalibration& c) { return std::sqrt(c.T1_tilde / c.T_star); }

/// Half-width of the excluded index band next to a parent atom.
inline double index_margin(const BuildingBlockCalibration& c, double theta_prev, double theta) {
    const double arg = theta_prev * theta_prev / (c.T_star * theta * theta);
    return c.C1 / (2.0 * c.d) * std::sqrt(c.T_star * std::log(arg));
}

/// eps_1 = 8 d theta_1; eps_j = (theta_j/theta_{j-1}) (2 + (C1/d) sqrt(T* ln(theta_{j-1}^2/(T* theta_j^2)))).
inline double epsilon(const BuildingBlockCalibration& c, std::span<const double> thetas, std::size_t j) {
    if (j == 0) return 8.0 * c.d * thetas[0];
    return thetas[j] / thetas[j - 1] * (2.0 + 2.0 * index_margin(c, thetas[j - 1], thetas[j]));
}

inline double overlap_term(const BuildingBlockCalibration& c, double theta_prev, double theta, int n) {
    const double r = theta / theta_prev;
    return 2.0 * c.C1 * theta_zero(c) * n * r * std::sqrt(c.T1_tilde * std::log(1.0 / (c.T1_tilde * r * r)));
}

/// Evaluates every gate for the sequence (theta_1, ..., theta_N) with theta_0 = 1/(4d).
/// `margin` < 1 tightens each strict bound to margin * bound.
inline std::vector<GateCheck> evaluate_gates(const BuildingBlockCalibration& c, std::span<const double> thetas,
                                             double margin = 1.0) {
    std::vector<GateCheck> out;
    const double t0 = theta_zero(c);
    double eps = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const int n = static_cast<int>(k + 1);
        const double prev = k == 0 ? t0 : thetas[k - 1];
        const double ratio = thetas[k] / prev;
        out.push_back({gate::ratio_decay, n, ratio, margin * decay_bound(c), ratio < margin * decay_bound(c)});
        if (k + 1 < thetas.size()) {
            const double r = thetas[k + 1] / thetas[k];
            out.push_back({gate::extinction_separation, n, r, margin * separation_bound(c),
                           r < margin * separation_bound(c)});
        }
        const double ov = overlap_term(c, prev, thetas[k], n);
        const double ob = margin * c.d1 / (18.0 * c.d);
        out.push_back({gate::overlap_budget, n, ov, ob, std::isfinite(ov) && ov <= ob});
        eps += epsilon(c, thetas, k);
    }
    out.push_back({gate::epsilon_sum, 0, eps, margin / 9.0, eps < margin / 9.0});
    return out;
}

/// Chooses theta_n = theta_1 rho^{n-1} maximizing theta_N with every gate holding at `margin`.
inline std::vector<double> select_thetas(const BuildingBlockCalibration& c, int n_levels, double margin = 0.9) {
    if (n_levels < 1) reject("at least one level is required");
    const double t0 = theta_zero(c);
    auto theta1_for = [&](double rho) {
        std::vector<double> th(static_cast<std::size_t>(n_levels));
        double lo = 0.0, hi = t0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            for (int k = 0; k < n_levels; ++k) th[k] = mid * std::pow(rho, k);
            const auto gates = evaluate_gates(c, th, margin);
            const bool ok = std::all_of(gates.begin(), gates.end(), [](const GateCheck& g) { return g.ok; });
            (ok ? lo : hi) = mid;
        }
        return lo;
    };
    std::vector<double> best;
    double best_last = 0.0;
    const double rho_max = n_levels == 1 ? 0.5 : margin * std::min(decay_bound(c), separation_bound(c));
    const int scan = n_levels == 1 ? 1 : 400;
    for (int s = 0; s < scan; ++s) {
        const double rho = n_levels == 1 ? rho_max : rho_max * std::pow(1e-3, static_cast<double>(s) / scan);
        const double th1 = theta1_for(rho);
        if (!(th1 > 0.0)) continue;
        const double last = th1 * std::pow(rho, n_levels - 1);
        if (last > best_last) {
            best_last = last;
            best.assign(static_cast<std::size_t>(n_levels), 0.0);
            for (int k = 0; k < n_levels; ++k) best[k] = th1 * std::pow(rho, k);
        }
    }
    if (best.empty()) throw Error(ErrorKind::ConditionViolation, "no admissible scale sequence");
    return best;
}

// ---------------------------------------------------------------------------
// Atom hierarchy.

struct HierarchyAtom {
    double x = 0.0;
    std::vector<int> lineage;  ///< (j_1, ..., j_n)
};

struct HierarchyLevel {
    double theta = 0.0;
    int index_max = 0;             ///< I_n = {1, ..., index_max}
    std::vector<int> surviving;    ///< I_n*
    std::vector<HierarchyAtom> atoms;
    double weight = 0.0;           ///< theta^3
    double t_n = 0.0;              ///< T1 theta^2
    double t_tilde_n = 0.0;        ///< T1~ theta^2
};

struct AtomHierarchy {
    BuildingBlockCalibration calibration;
    std::vector<HierarchyLevel> levels;
    std::vector<GateCheck> gates;
    double total_mass = 0.0;

    std::vector<double> thetas() const {
        std::vector<double> t;
        for (const auto& l : levels) t.push_back(l.theta);
        return t;
    }
};

/// I_n = {1, ..., floor(theta_{n-1}/theta_n) - 1}, with theta_0 = 1/(4d).
inline int index_set_max(double theta_prev, double theta) {
    return static_cast<int>(std::floor(theta_prev / theta * (1 + 1e-12))) - 1;
}

/// Level atoms x = x_parent + 4 d theta j for the given parents and indices.
inline std::vector<HierarchyAtom> level_atoms(double d, double theta, std::span<const HierarchyAtom> parents,
                                              std::span<const int> indices) {
    std::vector<HierarchyAtom> out;
    out.reserve(parents.size() * indices.size());
    for (const auto& p : parents)
        for (int j : indices) {
            HierarchyAtom a{p.x + 4.0 * d * theta * j, p.lineage};
            a.lineage.push_back(j);
            out.push_back(std::move(a));
        }
    return out;
}

inline void require_gate(const GateCheck& g) {
    if (g.ok) return;
    throw ConditionViolation(g.gate, "violated at level " + std::to_string(g.level) + " (value " +
                                         std::to_string(g.value) + ", bound " + std::to_string(g.bound) + ")");
}

/// Builds levels 1..N from a strictly decreasing scale sequence, pruning I_n to I_n* by
/// the index gates and rejecting sequences that violate any gate.
inline AtomHierarchy build_hierarchy(const BuildingBlockCalibration& c, std::span<const double> thetas) {
    if (thetas.empty()) reject("empty scale sequence");
    if (!(c.d > 0.0 && c.T_star > 0.0 && c.C1 > 0.0 && c.d1 > 0.0 && c.T1_tilde > 0.0))
        reject("calibration incomplete");
    const double t0 = theta_zero(c);
    for (std::size_t k = 0; k < thetas.size(); ++k)
        if (!(thetas[k] > 0.0 && thetas[k] < (k == 0 ? t0 : thetas[k - 1])))
            reject("scales must be strictly decreasing and below 1/(4d)");
    AtomHierarchy h;
    h.calibration = c;
    h.gates = evaluate_gates(c, thetas);
    for (const auto& g : h.gates) require_gate(g);

    std::vector<HierarchyAtom> parents{HierarchyAtom{0.0, {}}};
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const int n = static_cast<int>(k + 1);
        const double prev = k == 0 ? t0 : thetas[k - 1];
        HierarchyLevel L;
        L.theta = thetas[k];
        L.index_max = index_set_max(prev, thetas[k]);
        const double m = index_margin(c, prev, thetas[k]);
        const double upper = prev / thetas[k] - m;
        for (int j = 1; j <= L.index_max; ++j)
            if (j > m && j < upper) L.surviving.push_back(j);
        h.gates.push_back({gate::lower_index, n, m, L.surviving.empty() ? 0.0 : L.surviving.front(),
                           !L.surviving.empty()});
        h.gates.push_back({gate::upper_index, n, L.surviving.empty() ? 0.0 : L.surviving.back(), upper,
                           !L.surviving.empty()});
        if (L.surviving.empty()) require_gate(h.gates.back());
        L.atoms = level_atoms(c.d, thetas[k], parents, L.surviving);
        L.weight = thetas[k] * thetas[k] * thetas[k];
        L.t_n = c.T1 * thetas[k] * thetas[k];
        L.t_tilde_n = c.T1_tilde * thetas[k] * thetas[k];
        const double z = static_cast<double>(L.atoms.size());
        const double need = 2.0 / (9.0 * c.d * thetas[k]);
        h.gates.push_back({gate::count, n, z, need, z >= need});
        require_gate(h.gates.back());
        h.total_mass += z * L.weight;
        parents = L.atoms;
        h.levels.push_back(std::move(L));
    }
    return h;
}

// ---------------------------------------------------------------------------
// Oscillation run.

struct OscillationPlan {
    double lambda = 1.0;
    double x_min = 0.0;
    double x_max = 1.0;
    double cells_per_scale = 50.0;  ///< h <= theta_N d / cells_per_scale
    std::size_t n_cells = 0;        ///< 0 picks the coarsest admissible grid
    double growth = 0.02;
    double first_step_fraction = 0.02;  ///< dt_min = fraction * t~_N
    std::size_t extra_probes = 8;       ///< log-spaced overlap probes
    LcpOptions lcp;
};

struct LevelReport {
    int n = 0;
    double t_n = 0.0;
    double measure_tn = 0.0;
    double t_tilde_n = 0.0;
    double measure_ttilde_n = 0.0;
    double threshold_hi = 0.0;  ///< 2/9 d1/d
    double threshold_lo = 0.0;  ///< 1/9 d1/d
    double predicted = 0.0;     ///< d1 theta_n Z_n*
    bool ratio_ok = false;      ///< measure(t_n) >= 2 measure(t~_n)
    bool count_ok = false;      ///< measure(t_n) >= 0.8 d1 theta_n Z_n*
    bool passed() const { return ratio_ok && count_ok; }
};

struct OverlapDiagnostic {
    double t = 0.0;
    double x_left = 0.0;
    double x_right = 0.0;
    int atoms = 0;
};

struct OscillationReport {
    std::vector<LevelReport> levels;
    std::vector<OverlapDiagnostic> overlaps;
    std::size_t n_cells = 0;
    std::size_t steps = 0;
    std::vector<double> probe_times;
    std::vector<double> probe_measures;
    bool passed() const {
        return overlaps.empty() &&
               std::all_of(levels.begin(), levels.end(), [](const LevelReport& l) { return l.passed(); });
    }
};

inline std::size_t required_cells(const AtomHierarchy& h, const OscillationPlan& plan) {
    const double hmax = h.levels.back().theta * h.calibration.d / plan.cells_per_scale;
    return static_cast<std::size_t>(std::ceil((plan.x_max - plan.x_min) / hmax));
}

/// Counts, per support interval, the atoms whose block should still be alive at t; more
/// than one atom in an interval means two blocks touched.
inline std::vector<OverlapDiagnostic> find_overlaps(const AtomHierarchy& h, const Field1D& u, double t,
                                                    double t_star) {
    const Grid& g = u.grid();
    std::vector<int> count(u.size(), 0);
    for (const auto& L : h.levels) {
        if (!(t < t_star * L.theta * L.theta)) continue;
        for (const auto& a : L.atoms) ++count[g.nearest(a.x)];
    }
    std::vector<OverlapDiagnostic> out;
    for (const auto& iv : detect_support(u).intervals) {
        int c = 0;
        for (std::size_t i = iv.first; i <= iv.last; ++i) c += count[i];
        if (c > 1) out.push_back({t, g.x(iv.first), g.x(iv.last), c});
    }
    return out;
}

inline Field1D hierarchy_initial(const AtomHierarchy& h, const Grid& grid) {
    std::vector<double> v(grid.n_nodes(), 0.0);
    std::vector<Atom> atoms;
    for (const auto& L : h.levels)
        for (const auto& a : L.atoms) atoms.push_back({a.x, L.weight});
    deposit_atoms(grid, atoms, AtomRegularization::NearestNodeHat, 0.0, v);
    const double peak = *std::max_element(v.begin(), v.end());
    return Field1D(grid, std::move(v), default_positivity_threshold(peak));
}

/// Evolves the superposed atoms with the constant sink lambda^3 and measures the support at
/// t_n and t~_n for every level.
inline OscillationReport run_oscillation(const AtomHierarchy& h, const OscillationPlan& plan = {}) {
    if (h.levels.empty()) reject("empty hierarchy");
    const auto& c = h.calibration;
    const std::size_t need = required_cells(h, plan);
    const std::size_t n_cells = plan.n_cells == 0 ? need : plan.n_cells;
    if (n_cells < need)
        throw Error(ErrorKind::ResolutionInsufficient,
                    "grid too coarse for the finest scale; need n_cells >= " + std::to_string(need));
    const Grid grid(plan.x_min, plan.x_max, n_cells);
    const Field1D u0 = hierarchy_initial(h, grid);

    std::vector<double> probes;
    for (const auto& L : h.levels) {
        probes.push_back(L.t_n);
        probes.push_back(L.t_tilde_n);
    }
    const double t_first = plan.first_step_fraction * h.levels.back().t_tilde_n;
    const double t_end = h.levels.front().t_n;
    if (plan.extra_probes > 0)
        for (double t : log_spaced(2.0 * t_first, t_end, plan.extra_probes)) probes.push_back(t);
    std::sort(probes.begin(), probes.end());
    probes.erase(std::unique(probes.begin(), probes.end()), probes.end());

    LocalSinkStepper stepper(grid, OperatorSpec::unit(BoundaryCondition::NeumannZero),
                             SinkField::lambda_cubed(plan.lambda), 1.0, plan.lcp);
    OscillationReport rep;
    rep.n_cells = n_cells;
    EvolveOptions eo;
    eo.on_step = [&](const StepResult&) {
        ++rep.steps;
        return true;
    };
    const TimeSchedule sched{t_first, plan.growth};
    const EvolveResult run = evolve_with(stepper, u0, 0.0, t_end, sched, probes, eo);

    auto measure_at = [&](double t) {
        for (const auto& s : run.snapshots)
            if (s.t == t) return detect_support(s.field).measure;
        throw Error(ErrorKind::Inconsistency, "probe missing from run");
    };
    for (const auto& s : run.snapshots) {
        rep.probe_times.push_back(s.t);
        rep.probe_measures.push_back(detect_support(s.field).measure);
        auto ov = find_overlaps(h, s.field, s.t, c.T_star);
        rep.overlaps.insert(rep.overlaps.end(), ov.begin(), ov.end());
    }
    for (std::size_t k = 0; k < h.levels.size(); ++k) {
        const auto& L = h.levels[k];
        LevelReport r;
        r.n = static_cast<int>(k + 1);
        r.t_n = L.t_n;
        r.t_tilde_n = L.t_tilde_n;
        r.measure_tn = measure_at(L.t_n);
        r.measure_ttilde_n = measure_at(L.t_tilde_n);
        r.threshold_hi = 2.0 / 9.0 * c.d1 / c.d;
        r.threshold_lo = 1.0 / 9.0 * c.d1 / c.d;
        r.predicted = c.d1 * L.theta * static_cast<double>(L.atoms.size());
        r.ratio_ok = r.measure_tn >= 2.0 * r.measure_ttilde_n;
        r.count_ok = r.measure_tn >= 0.8 * r.predicted;
        rep.levels.push_back(r);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Embedding into the composite model.

/// Mean of g over (-4, -1) for the composite profile, and the right-part sink level
/// f+ = 1 - g_min / that mean.
inline double composite_left_mean() { return integrate_function(composite_stimulus, -4.0, -1.0) / 3.0; }

inline double composite_sink_level() { return 1.0 - kCompositeGMin / composite_left_mean(); }

struct Embedding {
    CompositeSpec spec;
    double eta = 0.0;
    double lambda0 = 0.0;  ///< block parameter with lambda0^3 = f+
    double f_plus = 0.0;
    std::vector<double> t_n;        ///< physical probe times per level
    std::vector<double> t_tilde_n;
    double f_min = 0.0;  ///< sink range over the window lambda in [lambda0_minus +- ...]
    double f_max = 0.0;
};

/// Places the hierarchy in (0, eta): a unit-sink solution U maps to a U(x/eta, t/eta^2) with
/// a = f+ eta^2, so atoms keep their positions scaled by eta, weights become f+ (eta theta)^3
/// and times scale by eta^2.  Rejects eta when the resulting sink range leaves the window.
inline Embedding embed_into_composite(const AtomHierarchy& h, double eta, std::size_t n_cells) {
    if (!(eta > 0.0 && eta <= 1.0)) reject("eta must lie in (0, 1]");
    Embedding e;
    e.eta = eta;
    e.f_plus = composite_sink_level();
    e.lambda0 = std::cbrt(e.f_plus);
    // Sink range for a right support of size up to eta next to a left support of size 3.
    const double left_int = 3.0 * composite_left_mean();
    const double lam_lo = (left_int + kCompositeGMin * eta) / (3.0 + eta);
    const double lam_hi = composite_left_mean();
    e.f_min = 1.0 - kCompositeGMin / lam_lo;
    e.f_max = 1.0 - kCompositeGMin / lam_hi;
    const double kappa = h.calibration.kappa;
    if (std::cbrt(e.f_min) < e.lambda0 * (1.0 - kappa) || std::cbrt(e.f_max) > e.lambda0 * (1.0 + kappa))
        throw Error(ErrorKind::OutOfRange, "eta too large for the lambda window: sink range [" +
                                               std::to_string(e.f_min) + ", " + std::to_string(e.f_max) + "]");
    e.spec.n_cells = n_cells;
    e.spec.eta = eta;
    for (const auto& L : h.levels) {
        const double w = e.f_plus * std::pow(eta * L.theta, 3);
        for (const auto& a : L.atoms) e.spec.atoms.push_back({eta * a.x, w});
        e.t_n.push_back(eta * eta * L.t_n);
        e.t_tilde_n.push_back(eta * eta * L.t_tilde_n);
    }
    return e;
}

}  // namespace mcob
