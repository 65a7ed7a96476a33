#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcob/error.hpp"
#include "mcob/grid1d.hpp"
#include "mcob/line_models.hpp"
#include "mcob/obstacle_core.hpp"
#include "mcob/sphere_model.hpp"

namespace mcob {

// ---------------------------------------------------------------------------
// Explicit reference solver. Shares no discretization code with step_projected.

struct OracleConfig {
    int dt_ratio = 100;  ///< explicit substep = implicit step / dt_ratio
};

struct OracleSnapshot {
    double t = 0.0;
    std::vector<double> values;
};

/// Forward Euler on the flux-form stencil with u <- max(u + dt (Lu - F), 0) each substep.
/// Zero-flux ends use the half control volume; Dirichlet ends stay at zero.
inline std::vector<OracleSnapshot> explicit_reference(const Grid& grid, std::span<const double> u0,
                                                      const std::function<double(double)>& a,
                                                      BoundaryCondition bc,
                                                      const std::function<double(double, double)>& F,
                                                      double t_end, double implicit_dt,
                                                      std::span<const double> probes, OracleConfig cfg = {}) {
    if (cfg.dt_ratio < 100) reject("oracle step ratio must be at least 100");
    if (u0.size() != grid.n_nodes()) reject("initial data size does not match grid");
    if (!(implicit_dt > 0.0) || !(t_end >= 0.0)) reject("oracle times must be positive");
    const std::size_t n = grid.n_nodes();
    const double h = grid.h();
    std::vector<double> k(n - 1);
    double amax = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double xm = grid.x_min() + (static_cast<double>(i) + 0.5) * h;
        k[i] = a(xm) / (h * h);
        amax = std::max(amax, a(xm));
    }
    for (std::size_t i = 0; i < n; ++i) amax = std::max(amax, a(grid.x(i)));
    const double dt = implicit_dt / cfg.dt_ratio;
    if (amax > 0.0 && dt > h * h / (2.0 * amax))
        reject("explicit step violates the stability bound h^2 / (2 max a)");

    std::vector<double> u(u0.begin(), u0.end()), next(n);
    std::vector<double> stops(probes.begin(), probes.end());
    stops.push_back(t_end);
    std::sort(stops.begin(), stops.end());
    std::vector<OracleSnapshot> out;
    double t = 0.0;
    const bool pinned = bc == BoundaryCondition::DirichletZero;
    for (double stop : stops) {
        if (stop < t) reject("probe precedes current time");
        const auto m = static_cast<long>(std::ceil((stop - t) / dt - 1e-9));
        const double tau = m > 0 ? (stop - t) / static_cast<double>(m) : 0.0;
        for (long s = 0; s < m; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                double lap;
                if (i == 0) lap = 2.0 * k[0] * (u[1] - u[0]);
                else if (i == n - 1) lap = 2.0 * k[n - 2] * (u[n - 2] - u[n - 1]);
                else lap = k[i] * (u[i + 1] - u[i]) - k[i - 1] * (u[i] - u[i - 1]);
                next[i] = std::max(0.0, u[i] + tau * (lap - F(grid.x(i), t)));
            }
            if (pinned) next[0] = next[n - 1] = 0.0;
            u.swap(next);
            t += tau;
        }
        t = stop;
        if (out.empty() || out.back().t != stop) out.push_back({stop, u});
    }
    // Drop the t_end entry when it was not requested as a probe.
    if (std::find(probes.begin(), probes.end(), t_end) == probes.end() && !out.empty() && out.back().t == t_end)
        out.pop_back();
    return out;
}

inline double max_abs_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) reject("fields differ in size");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// ---------------------------------------------------------------------------
// Inequality certification over stored runs.

struct InequalityResult {
    std::string name;
    std::string statement;
    double worst_margin = 0.0;  ///< >= 0 means the inequality holds everywhere checked
    long evaluations = 0;
    bool passed = false;
};

struct CertificationReport {
    std::vector<InequalityResult> entries;
    bool passed() const {
        return std::all_of(entries.begin(), entries.end(), [](const InequalityResult& e) { return e.passed; });
    }
};

struct SphereBundle {
    Field1D u0;
    Stimulus g;
    FreeBoundaryTrace trace;
    std::vector<StepResult> snapshots;
};

struct DiracBundle {
    std::vector<StepResult> snapshots;
    std::vector<StepResult> heat_reference;  ///< discrete heat evolution at the same probes
    double delta_t = 0.0;                    ///< bootstrap time
    double lambda = 1.0;
};

struct CompositeBundle {
    std::vector<StepResult> snapshots;
    std::vector<double> lambdas;  ///< one per snapshot
};

struct RunBundle {
    std::optional<SphereBundle> sphere;
    std::optional<DiracBundle> dirac;
    std::optional<CompositeBundle> composite;
};

namespace inequality {

inline const std::string front_bound = "front-bound";
inline const std::string separation = "front-separation";
inline const std::string side_condition = "side-condition";
inline const std::string sandwich_upper = "heat-sandwich-upper";
inline const std::string sandwich_lower = "heat-sandwich-lower";
inline const std::string ball_vanishing = "ball-vanishing";
inline const std::string core_positivity = "core-positivity";
inline const std::string lambda_lower = "lambda-lower";
inline const std::string lambda_upper = "lambda-upper";
inline const std::string sink_floor = "sink-floor";

inline std::string needs(const std::string& name) {
    if (name == front_bound || name == separation || name == side_condition) return "sphere";
    if (name == sandwich_upper || name == sandwich_lower || name == ball_vanishing) return "dirac";
    if (name == core_positivity || name == lambda_lower || name == lambda_upper || name == sink_floor)
        return "composite";
    reject("unknown inequality: " + name);
}

}  // namespace inequality

struct CertifyOptions {
    double sandwich_tolerance = 1e-8;
    double side_tolerance = 1e-6;
    std::vector<double> vanishing_radii{0.02, 0.05};
};

/// Evaluates every inequality whose inputs are present. Inequalities listed in `required`
/// must have their inputs; a missing run is reported by name.
inline CertificationReport certify_inequalities(const RunBundle& b, std::span<const std::string> required = {},
                                                const CertifyOptions& opt = {}) {
    for (const auto& name : required) {
        const std::string part = inequality::needs(name);
        const bool present = (part == "sphere" && b.sphere) || (part == "dirac" && b.dirac) ||
                             (part == "composite" && b.composite);
        if (!present) reject("missing input for " + name + ": " + part + " run");
    }
    if (!b.sphere && !b.dirac && !b.composite) reject("bundle contains no runs");
    CertificationReport rep;
    auto add = [&](std::string name, std::string statement, double margin, long count, double tol = 0.0) {
        rep.entries.push_back({std::move(name), std::move(statement), margin, count, margin >= -tol});
    };

    if (b.sphere) {
        const auto& s = *b.sphere;
        const double slack = 2.0 * s.u0.grid().h();
        const auto nd = nondegeneracy_report(s.u0, s.g, s.trace, s.snapshots, slack);
        add(inequality::front_bound, "p(t) <= 1 - m/(2 pi |u|_inf) + 2h", nd.p_bound_margin,
            static_cast<long>(s.trace.rows.size()));
        if (nd.hypotheses_met)
            add(inequality::separation, "s(t) - p(t) >= c0 - 2h", nd.separation_margin,
                static_cast<long>(s.trace.rows.size()));
        double worst = std::numeric_limits<double>::infinity();
        long count = 0;
        const auto gv = s.g.nodes();
        for (const auto& snap : s.snapshots) {
            auto row = std::find_if(s.trace.rows.begin(), s.trace.rows.end(),
                                    [&](const TraceRow& r) { return r.t == snap.t; });
            if (row == s.trace.rows.end() || !std::isfinite(row->lambda)) continue;
            for (std::size_t i = 0; i < snap.field.size(); ++i)
                if (snap.field[i] == 0.0) {
                    worst = std::min(worst, row->lambda - gv[i]);
                    ++count;
                }
        }
        add(inequality::side_condition, "g - lambda <= tol on {u = 0}", worst, count, opt.side_tolerance);
    }

    if (b.dirac) {
        const auto& d = *b.dirac;
        if (d.snapshots.size() != d.heat_reference.size()) reject("heat reference does not match the Dirac probes");
        double up = std::numeric_limits<double>::infinity(), lo = up;
        for (std::size_t k = 0; k < d.snapshots.size(); ++k) {
            const double elapsed = d.snapshots[k].t - d.delta_t;
            const auto m = sandwich_margins(d.snapshots[k].field.values(), d.heat_reference[k].field.values(),
                                            d.lambda * d.lambda * d.lambda * elapsed);
            up = std::min(up, m.upper);
            lo = std::min(lo, m.lower);
        }
        const long n = static_cast<long>(d.snapshots.size());
        add(inequality::sandwich_upper, "U <= Phi", up, n, opt.sandwich_tolerance);
        add(inequality::sandwich_lower, "U >= Phi - lambda^3 (t - delta_t) where positive", lo, n,
            opt.sandwich_tolerance);
        const auto bv = ball_vanishing_check(d.snapshots, d.lambda * d.lambda * d.lambda, opt.vanishing_radii, 4);
        add(inequality::ball_vanishing, "u <= (theta/3) rho^2 on a ball over [t0 - rho^2, t0] implies u(x0, t0) = 0",
            -static_cast<double>(bv.violations), bv.rectangles_checked);
    }

    if (b.composite) {
        const auto& c = *b.composite;
        if (c.snapshots.size() != c.lambdas.size()) reject("one lambda per composite snapshot is required");
        const double upper = 0.5 * integrate_function(composite_stimulus, -4.0, -1.0);
        double pos = std::numeric_limits<double>::infinity(), lmin = pos, lmax = pos, sink = pos;
        for (std::size_t k = 0; k < c.snapshots.size(); ++k) {
            const auto& f = c.snapshots[k].field;
            const double lam = c.lambdas[k];
            lmin = std::min(lmin, lam - 11.0 / 120.0);
            lmax = std::min(lmax, upper - lam);
            for (std::size_t i = 0; i < f.size(); ++i) {
                const double x = f.grid().x(i);
                if (x >= -3.5 && x <= -1.5) pos = std::min(pos, f[i]);
                else sink = std::min(sink, 1.0 - composite_stimulus(x) / lam - 1.0 / 11.0);
            }
        }
        const long n = static_cast<long>(c.snapshots.size());
        // Strict positivity: a zero minimum fails.
        rep.entries.push_back({inequality::core_positivity, "u > 0 on [-7/2, -3/2]", pos, n, pos > 0.0});
        add(inequality::lambda_lower, "lambda >= 11/120", lmin, n);
        add(inequality::lambda_upper, "lambda <= (1/2) int_{-4}^{-1} g", lmax, n);
        add(inequality::sink_floor, "1 - g/lambda >= 1/11 off [-7/2, -3/2]", sink, n);
    }
    return rep;
}

}  // namespace mcob
