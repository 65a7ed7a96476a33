#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcob/error.hpp"
#include "mcob/grid1d.hpp"
#include "mcob/heat_kernel.hpp"
#include "mcob/obstacle_core.hpp"
#include "mcob/sphere_model.hpp"

namespace mcob {

// ---------------------------------------------------------------------------
// Dirac building block:  u_t - u'' = -lambda^3 H(u),  u(0) = delta_0.

/// Heat kernel at delta_t on [-R, R], stored as cell averages so the discrete mass is
/// exactly one at any resolution; equals the sampled kernel up to O(h^2) when resolved.
struct DiracBootstrap {
    double delta_t = 1e-6;
    double radius = 6.0;
    std::size_t n_cells = 4000;

    Grid grid() const { return Grid(-radius, radius, n_cells); }

    Field1D field() const {
        if (!(delta_t > 0.0)) reject("bootstrap time must be positive");
        const Grid g = grid();
        std::vector<double> v(g.n_nodes());
        const double h = g.h();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double a = std::max(g.x_min(), g.x(i) - 0.5 * h);
            const double b = std::min(g.x_max(), g.x(i) + 0.5 * h);
            v[i] = heat_kernel_mass(a, b, delta_t) / g.weight(i);
        }
        double peak = heat_kernel(0.0, delta_t);
        return Field1D(g, std::move(v), default_positivity_threshold(peak));
    }
};

struct DiracOptions {
    double lambda = 1.0;
    DiracBootstrap bootstrap;
    double t_end = 1e-2;
    TimeSchedule schedule{1e-6};
    std::vector<double> probes;  ///< absolute times in [delta_t, t_end]
    std::size_t guard_nodes = 5;
    /// Stop once the support has vanished (after recording the step).
    bool stop_at_extinction = false;
    LcpOptions lcp;
};

struct DiracRun {
    EvolveResult run;
    double lambda = 1.0;
    std::optional<double> extinction_step_time;  ///< first step end time with empty support
};

/// Bootstraps with the heat kernel at delta_t and evolves with the constant sink lambda^3.
inline DiracRun solve_dirac(const DiracOptions& opt) {
    if (!(opt.lambda > 0.0)) reject("lambda must be positive");
    const double R = opt.bootstrap.radius;
    if (!(heat_kernel(R, opt.t_end) < 1e-14))
        reject("truncation radius too small: heat kernel at R exceeds 1e-14 at t_end");
    const Field1D u0 = opt.bootstrap.field();
    LocalSinkStepper stepper(u0.grid(), OperatorSpec::unit(), SinkField::lambda_cubed(opt.lambda),
                             1.0, opt.lcp);
    DiracRun out;
    out.lambda = opt.lambda;
    EvolveOptions eo;
    eo.lcp = opt.lcp;
    const std::size_t n = u0.size();
    eo.on_step = [&](const StepResult& r) {
        if (!r.active_set.empty()) {
            if (r.active_set.intervals.front().first < opt.guard_nodes ||
                r.active_set.intervals.back().last + opt.guard_nodes >= n)
                throw Error(ErrorKind::DomainTooSmall,
                            "support reached the truncation boundary at t = " + std::to_string(r.t));
        } else if (!out.extinction_step_time) {
            out.extinction_step_time = r.t;
            return !opt.stop_at_extinction;
        }
        return true;
    };
    out.run = evolve_with(stepper, u0, opt.bootstrap.delta_t, opt.t_end, opt.schedule, opt.probes, eo);
    return out;
}

/// Discrete heat evolution of the same bootstrap on the same time grid (sink zero).
inline EvolveResult heat_reference(const DiracOptions& opt) {
    const Field1D u0 = opt.bootstrap.field();
    LocalSinkStepper stepper(u0.grid(), OperatorSpec::unit(), SinkField::constant(0.0), 1.0, opt.lcp);
    return evolve_with(stepper, u0, opt.bootstrap.delta_t, opt.t_end, opt.schedule, opt.probes);
}

struct SandwichMargins {
    double upper = std::numeric_limits<double>::infinity();  ///< min (reference - U)
    double lower = std::numeric_limits<double>::infinity();  ///< min (U - (reference - elapsed)) where positive
};

/// Margins of  reference - elapsed <= U <= reference  nodewise.
inline SandwichMargins sandwich_margins(std::span<const double> u, std::span<const double> reference,
                                        double elapsed) {
    if (u.size() != reference.size()) reject("sandwich fields differ in size");
    SandwichMargins m;
    for (std::size_t i = 0; i < u.size(); ++i) {
        m.upper = std::min(m.upper, reference[i] - u[i]);
        const double sub = reference[i] - elapsed;
        if (sub > 0.0) m.lower = std::min(m.lower, u[i] - sub);
    }
    return m;
}

/// Same sandwich against the exact heat kernel Phi(x, t).
inline SandwichMargins analytic_sandwich_margins(const Field1D& u, double t) {
    std::vector<double> phi(u.size());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = heat_kernel(u.grid().x(i), t);
    return sandwich_margins(u.values(), phi, t);
}

/// Radius of the support on the side x >= center: the zero of the sqrt-linear
/// extrapolation through the two outermost positive nodes (u ~ c (R - x)^2 at the edge),
/// clamped to [last positive node, first zero node].
inline double support_radius_right(const Field1D& u, double center = 0.0) {
    const auto s = detect_support(u);
    if (s.empty()) return 0.0;
    const Grid& g = u.grid();
    const std::size_t last = s.intervals.back().last;
    const double x_last = g.x(last);
    if (last == 0 || last + 1 >= u.size() || !u.positive(last - 1)) return x_last - center;
    const double a = std::sqrt(u[last - 1]);
    const double b = std::sqrt(u[last]);
    double r = x_last;
    if (a > b) r = x_last + g.h() * b / (a - b);
    return std::clamp(r, x_last, x_last + g.h()) - center;
}

inline double support_radius_left(const Field1D& u, double center = 0.0) {
    const auto s = detect_support(u);
    if (s.empty()) return 0.0;
    const Grid& g = u.grid();
    const std::size_t first = s.intervals.front().first;
    const double x_first = g.x(first);
    if (first == 0 || first + 1 >= u.size() || !u.positive(first + 1)) return center - x_first;
    const double a = std::sqrt(u[first + 1]);
    const double b = std::sqrt(u[first]);
    double r = x_first;
    if (a > b) r = x_first - g.h() * b / (a - b);
    return center - std::clamp(r, x_first - g.h(), x_first);
}

struct SupportEnvelope {
    std::vector<double> times;
    std::vector<double> ell;   ///< largest r with [-r, r] inside the support (node based)
    std::vector<double> L;     ///< smallest r with the support inside [-r, r] (node based)
    std::vector<double> reference;  ///< sqrt(6 t ln(1/t))
    std::vector<double> radius;     ///< sub-grid radius estimate (right side)
    std::vector<double> left_radius;
    std::vector<double> ratio;      ///< radius / reference
};

struct EnvelopeAsymptotics {
    double max_deviation_smallest_decade = 0.0;
    double max_deviation_largest_decade = 0.0;
    double trend_slope = 0.0;  ///< least-squares slope of |ratio - 1| against log10 t
    double min_ratio = 0.0;
    double max_ratio = 0.0;
};

inline SupportEnvelope support_envelope(std::span<const StepResult> snapshots) {
    SupportEnvelope env;
    for (const auto& s : snapshots) {
        const auto supp = detect_support(s.field);
        if (supp.empty()) continue;
        const Grid& g = s.field.grid();
        const std::size_t c = g.nearest(0.0);
        double outer = 0.0;
        for (const auto& r : supp.intervals)
            outer = std::max({outer, std::abs(g.x(r.first)), std::abs(g.x(r.last))});
        double inner = 0.0;
        if (s.field.positive(c)) {
            std::size_t lo = c, hi = c;
            while (lo > 0 && s.field.positive(lo - 1)) --lo;
            while (hi + 1 < s.field.size() && s.field.positive(hi + 1)) ++hi;
            inner = std::min(-g.x(lo), g.x(hi));
        }
        env.times.push_back(s.t);
        env.ell.push_back(inner);
        env.L.push_back(outer);
        env.reference.push_back(support_reference(s.t));
        env.radius.push_back(support_radius_right(s.field));
        env.left_radius.push_back(support_radius_left(s.field));
        env.ratio.push_back(env.radius.back() / env.reference.back());
    }
    return env;
}

/// Ratio statistics over probes; the smallest decade is [t_min, 10 t_min].
inline EnvelopeAsymptotics envelope_asymptotics(const SupportEnvelope& env) {
    EnvelopeAsymptotics a;
    if (env.times.empty()) return a;
    const double t_min = *std::min_element(env.times.begin(), env.times.end());
    const double t_max = *std::max_element(env.times.begin(), env.times.end());
    a.min_ratio = *std::min_element(env.ratio.begin(), env.ratio.end());
    a.max_ratio = *std::max_element(env.ratio.begin(), env.ratio.end());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(env.times.size());
    for (std::size_t k = 0; k < env.times.size(); ++k) {
        const double dev = std::abs(env.ratio[k] - 1.0);
        if (env.times[k] <= 10.0 * t_min * (1 + 1e-12))
            a.max_deviation_smallest_decade = std::max(a.max_deviation_smallest_decade, dev);
        if (env.times[k] >= t_max / 10.0 * (1 - 1e-12))
            a.max_deviation_largest_decade = std::max(a.max_deviation_largest_decade, dev);
        const double x = std::log10(env.times[k]);
        sx += x; sy += dev; sxx += x * x; sxy += x * dev;
    }
    const double den = n * sxx - sx * sx;
    a.trend_slope = den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
    return a;
}

struct ScalingReport {
    double max_relative_deviation = 0.0;
    double max_radius_mismatch = 0.0;  ///< |L_lambda(t) - L_1(lambda^2 t)/lambda|
};

/// Compares U_lambda(x, t) with lambda U_1(lambda x, lambda^2 t) at every lambda-run probe.
/// `unit_run` must carry a snapshot at lambda^2 t for each lambda-run probe t.
inline ScalingReport scaling_check(double lambda, std::span<const StepResult> lambda_run,
                                   std::span<const StepResult> unit_run) {
    ScalingReport rep;
    for (const auto& s : lambda_run) {
        const double t1 = lambda * lambda * s.t;
        auto it = std::find_if(unit_run.begin(), unit_run.end(), [&](const StepResult& r) {
            return std::abs(r.t - t1) <= 1e-9 * t1;
        });
        if (it == unit_run.end()) reject("probe outside the unit run: t = " + std::to_string(t1));
        const Grid& g = s.field.grid();
        const Grid& g1 = it->field.grid();
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < s.field.size(); ++i) {
            const double pred = lambda * interpolate(g1, it->field.values(), lambda * g.x(i));
            num = std::max(num, std::abs(s.field[i] - pred));
            den = std::max(den, std::abs(s.field[i]));
        }
        if (den > 0.0) rep.max_relative_deviation = std::max(rep.max_relative_deviation, num / den);
        const auto ls = detect_support(s.field);
        const auto l1 = detect_support(it->field);
        if (!ls.empty() && !l1.empty()) {
            const double L = g.x(ls.intervals.back().last);
            const double L1 = g1.x(l1.intervals.back().last) / lambda;
            rep.max_radius_mismatch = std::max(rep.max_radius_mismatch, std::abs(L - L1));
        }
    }
    return rep;
}

struct ExtinctionResult {
    double t_star = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

/// Runs the Dirac block to extinction, then bisects the length of a single backward-Euler
/// step from the last nonzero state until the bracket is below `bracket_width`.
inline ExtinctionResult find_extinction(DiracOptions opt, double bracket_width = 1e-6) {
    opt.stop_at_extinction = true;
    opt.probes.clear();
    std::optional<StepResult> last_alive;
    const Field1D u0 = opt.bootstrap.field();
    LocalSinkStepper stepper(u0.grid(), OperatorSpec::unit(), SinkField::lambda_cubed(opt.lambda),
                             1.0, opt.lcp);
    EvolveOptions eo;
    std::optional<double> extinct_at;
    const std::size_t n = u0.size();
    eo.on_step = [&](const StepResult& r) {
        if (r.active_set.empty()) {
            extinct_at = r.t;
            return false;
        }
        if (r.active_set.intervals.front().first < opt.guard_nodes ||
            r.active_set.intervals.back().last + opt.guard_nodes >= n)
            throw Error(ErrorKind::DomainTooSmall, "support reached the truncation boundary");
        last_alive = r;
        return true;
    };
    if (!(heat_kernel(opt.bootstrap.radius, opt.t_end) < 1e-14))
        reject("truncation radius too small: heat kernel at R exceeds 1e-14 at t_end");
    evolve_with(stepper, u0, opt.bootstrap.delta_t, opt.t_end, opt.schedule, {}, eo);
    if (!extinct_at || !last_alive)
        throw Error(ErrorKind::OutOfRange, "no extinction before t_end");
    const double t_alive = last_alive->t;
    double lo = 0.0, hi = *extinct_at - t_alive;
    DiscreteOperator op(u0.grid(), OperatorSpec::unit());
    const double sink = opt.lambda * opt.lambda * opt.lambda;
    std::vector<double> f(n, sink);
    while (hi - lo > bracket_width) {
        const double mid = 0.5 * (lo + hi);
        LcpWorkspace ws;
        const StepResult r = step_projected(last_alive->field, op, f, mid, ws, opt.lcp);
        if (r.active_set.empty()) hi = mid; else lo = mid;
    }
    return {t_alive + hi, t_alive + lo, t_alive + hi};
}

struct BallVanishingReport {
    long rectangles_checked = 0;
    long violations = 0;
};

/// Post-hoc check on stored snapshots: if 0 <= u <= (theta/3) rho^2 on the ball
/// |x - x0| < rho over every snapshot in [t0 - rho^2, t0] and the sink is >= theta,
/// then u(x0, t0) must vanish.
inline BallVanishingReport ball_vanishing_check(std::span<const StepResult> snapshots, double theta,
                                                std::span<const double> rhos, std::size_t stride = 1) {
    BallVanishingReport rep;
    if (!(theta > 0.0)) return rep;
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        const double t0 = snapshots[k].t;
        const Grid& g = snapshots[k].field.grid();
        for (double rho : rhos) {
            if (!(rho * rho < t0)) continue;
            std::size_t first = k;
            while (first > 0 && snapshots[first - 1].t >= t0 - rho * rho) --first;
            if (first == k) continue;
            const std::size_t half = static_cast<std::size_t>(std::floor(rho / g.h()));
            if (half == 0) continue;
            const double cap = theta / 3.0 * rho * rho;
            for (std::size_t i = half; i + half < g.n_nodes(); i += stride) {
                bool ok = true;
                for (std::size_t m = first; m <= k && ok; ++m) {
                    const auto v = snapshots[m].field.values();
                    for (std::size_t j = i - half; j <= i + half; ++j)
                        if (v[j] > cap) { ok = false; break; }
                }
                if (!ok) continue;
                ++rep.rectangles_checked;
                if (snapshots[k].field.positive(i)) ++rep.violations;
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Composite nonlocal model on (-5, 5) with a localized plateau in g.

inline constexpr double kCompositeGMin = 1.0 / 12.0;
inline constexpr double kCompositeGMax = 6.0 / 7.0;

/// Cubic smoothstep 3s^2 - 2s^3 on [0, 1].
inline double smoothstep(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

/// g_min outside (-7/2, -3/2), g_max on [-3, -2], smoothstep ramps in between.
inline double composite_stimulus(double x) {
    double w = 0.0;
    if (x > -3.5 && x < -3.0) w = smoothstep((x + 3.5) / 0.5);
    else if (x >= -3.0 && x <= -2.0) w = 1.0;
    else if (x > -2.0 && x < -1.5) w = smoothstep((-1.5 - x) / 0.5);
    return kCompositeGMin + (kCompositeGMax - kCompositeGMin) * w;
}

/// C^2 bump with positivity set (-4, -1), peak value `amplitude` at -5/2.
inline double composite_left_bump(double x, double amplitude = 1.0) {
    if (x <= -4.0 || x >= -1.0) return 0.0;
    const double q = (x + 4.0) * (-1.0 - x) / 2.25;
    return amplitude * q * q * q;
}

/// Point mass on the right part of the composite datum.
struct Atom {
    double x = 0.0;
    double mass = 0.0;
};

enum class AtomRegularization { NearestNodeHat, HeatKernel };

struct CompositeSpec {
    std::size_t n_cells = 20000;
    double left_amplitude = 1.0;
    std::vector<Atom> atoms;  ///< inside (0, eta)
    double eta = 1.0;
    AtomRegularization regularization = AtomRegularization::NearestNodeHat;
    double mollify_time = 0.0;  ///< heat-kernel width for HeatKernel mode

    Grid grid() const { return Grid(-5.0, 5.0, n_cells); }

    Stimulus stimulus() const {
        return Stimulus(grid(), composite_stimulus, kCompositeGMin, kCompositeGMax, 0.0);
    }
};

/// Adds atoms to `values` on `grid`: a node hat of the atom's mass, or the heat kernel at
/// `mollify_time` integrated over control volumes. Either way the discrete mass is exact.
inline void deposit_atoms(const Grid& grid, std::span<const Atom> atoms, AtomRegularization mode,
                          double mollify_time, std::span<double> values) {
    for (const auto& a : atoms) {
        if (a.x < grid.x_min() || a.x > grid.x_max()) reject("atom outside the grid");
        if (mode == AtomRegularization::NearestNodeHat) {
            const std::size_t i = grid.nearest(a.x);
            values[i] += a.mass / grid.weight(i);
        } else {
            if (!(mollify_time > 0.0)) reject("heat-kernel regularization needs a positive time");
            const double reach = 12.0 * std::sqrt(mollify_time);
            const std::size_t lo = grid.nearest(a.x - reach), hi = grid.nearest(a.x + reach);
            for (std::size_t i = lo; i <= hi; ++i) {
                const double l = std::max(grid.x_min(), grid.x(i) - 0.5 * grid.h()) - a.x;
                const double r = std::min(grid.x_max(), grid.x(i) + 0.5 * grid.h()) - a.x;
                values[i] += a.mass * heat_kernel_mass(l, r, mollify_time) / grid.weight(i);
            }
        }
    }
}

inline Field1D composite_initial(const CompositeSpec& spec) {
    const Grid grid = spec.grid();
    for (const auto& a : spec.atoms)
        if (!(a.x > 0.0 && a.x < spec.eta)) reject("right-part atoms must lie in (0, eta)");
    std::vector<double> v(grid.n_nodes());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = composite_left_bump(grid.x(i), spec.left_amplitude);
    deposit_atoms(grid, spec.atoms, spec.regularization, spec.mollify_time, v);
    const double peak = *std::max_element(v.begin(), v.end());
    return Field1D(grid, std::move(v), default_positivity_threshold(peak));
}

/// Restriction of u to the open interval (a, b), zero elsewhere.
inline Field1D restrict_to(const Field1D& u, double a, double b) {
    std::vector<double> v(u.values().begin(), u.values().end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = u.grid().x(i);
        if (!(x > a && x < b)) v[i] = 0.0;
    }
    return Field1D(u.grid(), std::move(v), u.positivity_threshold());
}

inline constexpr double kCompositeSplit = -0.5;

/// Bounds expected on the composite run at small times.
struct CompositeBoundsReport {
    double min_positivity_on_core = std::numeric_limits<double>::infinity();  ///< min u on [-7/2, -3/2]
    double min_lambda = std::numeric_limits<double>::infinity();
    double max_lambda = -std::numeric_limits<double>::infinity();
    double lambda_lower_bound = 11.0 / 120.0;
    double lambda_upper_bound = 0.0;  ///< (1/2) int_{-4}^{-1} g
    double min_sink_off_core = std::numeric_limits<double>::infinity();  ///< min 1 - g/lambda off [-7/2,-3/2]
    bool holds = false;
};

struct CompositeRun {
    NonlocalRun nonlocal;
    FreeBoundaryTrace left;   ///< restriction to (-5, -1/2)
    FreeBoundaryTrace right;  ///< restriction to (-1/2, 5)
    std::vector<double> lambdas;  ///< lambda at each probe
    CompositeBoundsReport bounds;
};

/// Integral of g over [a, b] by composite Simpson with 20000 panels.
inline double integrate_function(const std::function<double(double)>& f, double a, double b) {
    const int n = 20000;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline TraceRow restricted_row(const Field1D& part, double t, double lambda) {
    TraceRow r;
    r.t = t;
    if (auto p = infimum_of_support(part)) r.p = *p;
    r.lambda = lambda;
    r.support_measure = detect_support(part).measure;
    r.mass = integrate(part);
    return r;
}

inline CompositeRun solve_composite(const CompositeSpec& spec, double t_end,
                                    const TimeSchedule& schedule, std::span<const double> probes,
                                    NonlocalOptions opt = {}) {
    const Field1D u0 = composite_initial(spec);
    const Stimulus g = spec.stimulus();
    opt.mass_factor = 1.0;
    CompositeRun out;
    out.nonlocal = solve_nonlocal(u0, OperatorSpec::unit(BoundaryCondition::NeumannZero), g, t_end,
                                  schedule, probes, opt);
    out.bounds.lambda_upper_bound = 0.5 * integrate_function(composite_stimulus, -4.0, -1.0);
    const Grid& grid = u0.grid();
    const auto gv = g.nodes();
    const auto& rows = out.nonlocal.run.trace.rows;
    for (const auto& s : out.nonlocal.run.snapshots) {
        auto row = std::find_if(rows.begin(), rows.end(), [&](const TraceRow& r) { return r.t == s.t; });
        const double lambda = row != rows.end() ? row->lambda : lambda_of_support(g, detect_support(s.field));
        out.lambdas.push_back(lambda);
        out.left.rows.push_back(restricted_row(restrict_to(s.field, -5.0 - grid.h(), kCompositeSplit), s.t, lambda));
        out.right.rows.push_back(restricted_row(restrict_to(s.field, kCompositeSplit, 5.0 + grid.h()), s.t, lambda));
        auto& b = out.bounds;
        b.min_lambda = std::min(b.min_lambda, lambda);
        b.max_lambda = std::max(b.max_lambda, lambda);
        for (std::size_t i = 0; i < s.field.size(); ++i) {
            const double x = grid.x(i);
            if (x >= -3.5 && x <= -1.5) b.min_positivity_on_core = std::min(b.min_positivity_on_core, s.field[i]);
            else b.min_sink_off_core = std::min(b.min_sink_off_core, 1.0 - gv[i] / lambda);
        }
    }
    auto& b = out.bounds;
    b.holds = b.min_positivity_on_core > 0.0 && b.min_lambda >= b.lambda_lower_bound &&
              b.max_lambda <= b.lambda_upper_bound && b.min_sink_off_core >= 1.0 / 11.0;
    return out;
}

/// Lower bound for the lambda oscillation amplitude produced by a right-part support that
/// oscillates between measures a_minus and a_plus next to a fixed left support A:
///   int_A (g_max - g) / ((|A| + a_plus)(|A| + a_minus)) * (a_plus - a_minus).
inline double lambda_gap_lower_bound(const SupportSet& left_support, double a_minus, double a_plus,
                                     const Stimulus& g) {
    if (!(a_minus < a_plus) && a_minus != a_plus) reject("lambda gap needs a_minus <= a_plus");
    if (left_support.empty()) reject("left support must be nonempty");
    const auto v = g.nodes();
    const double g_max = *std::max_element(v.begin(), v.end());
    const Grid& grid = g.grid();
    double integral = 0.0;
    for (const auto& r : left_support.intervals) {
        if (r.first == r.last) {
            integral += grid.h() * (g_max - v[r.first]);
            continue;
        }
        for (std::size_t i = r.first; i <= r.last; ++i) {
            const double w = (i == r.first || i == r.last) ? 0.5 * grid.h() : grid.h();
            integral += w * (g_max - v[i]);
        }
    }
    const double A = left_support.measure;
    return integral / ((A + a_plus) * (A + a_minus)) * (a_plus - a_minus);
}

}  // namespace mcob
