#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcob/error.hpp"
#include "mcob/grid1d.hpp"
#include "mcob/obstacle_core.hpp"

namespace mcob {

/// External signal g sampled on a grid, with its bounds and monotone slope.
class Stimulus {
public:
    Stimulus(const Grid& grid, std::function<double(double)> g, double g0, double g1,
             double kappa = 0.0)
        : grid_(grid), g_(std::move(g)), g0_(g0), g1_(g1), kappa_(kappa) {
        if (!g_) reject("stimulus function is not set");
        if (!(g0 <= g1)) reject("stimulus bounds require g0 <= g1");
        if (kappa < 0.0) reject("monotone slope must be nonnegative");
        auto nodes = std::make_shared<std::vector<double>>(grid.n_nodes());
        const double tol = 1e-12 * std::max(1.0, std::abs(g1));
        for (std::size_t i = 0; i < nodes->size(); ++i) {
            const double v = g_(grid.x(i));
            if (!std::isfinite(v)) reject("stimulus value is not finite");
            if (v < g0 - tol || v > g1 + tol)
                reject("stimulus leaves [g0, g1] at x = " + std::to_string(grid.x(i)));
            (*nodes)[i] = v;
        }
        if (kappa > 0.0) {
            for (std::size_t i = 0; i + 1 < nodes->size(); ++i) {
                if ((*nodes)[i + 1] - (*nodes)[i] < kappa * grid.h() * (1.0 - 1e-9))
                    reject("stimulus increments fall below kappa h at x = " +
                           std::to_string(grid.x(i)));
            }
        }
        nodes_ = std::move(nodes);
    }

    const Grid& grid() const noexcept { return grid_; }
    double operator()(double x) const { return g_(x); }
    const std::function<double(double)>& function() const noexcept { return g_; }
    std::span<const double> nodes() const noexcept { return *nodes_; }
    std::shared_ptr<const std::vector<double>> shared_nodes() const noexcept { return nodes_; }
    double g0() const noexcept { return g0_; }
    double g1() const noexcept { return g1_; }
    double kappa() const noexcept { return kappa_; }

    /// Largest discrete slope, used as the Lipschitz bound of g.
    double max_slope() const {
        double m = 0.0;
        for (std::size_t i = 0; i + 1 < nodes_->size(); ++i)
            m = std::max(m, std::abs((*nodes_)[i + 1] - (*nodes_)[i]) / grid_.h());
        return m;
    }

    double interpolate_at(double x) const { return mcob::interpolate(grid_, *nodes_, x); }

private:
    Grid grid_;
    std::function<double(double)> g_;
    double g0_, g1_, kappa_;
    std::shared_ptr<const std::vector<double>> nodes_;
};

/// Average of g over the support nodes, each weighted by its control volume.
/// This is the quadrature under which the discrete sink integrates to zero, so the
/// update conserves trapezoidal mass exactly at the fixed point.
inline double lambda_of_support(const Stimulus& g, const SupportSet& supp) {
    if (supp.empty() || !(supp.measure > 0.0))
        throw Error(ErrorKind::DegenerateSupport, "lambda is undefined on an empty support");
    const Grid& grid = g.grid();
    const auto v = g.nodes();
    double num = 0.0, den = 0.0;
    for (const auto& r : supp.intervals) {
        if (r.last >= v.size()) reject("support exceeds the stimulus grid");
        for (std::size_t i = r.first; i <= r.last; ++i) {
            num += grid.weight(i) * v[i];
            den += grid.weight(i);
        }
    }
    return num / den;
}

/// Unique root of g(s) = lambda for strictly increasing g, by bisection on the
/// piecewise-linear interpolant.
inline double s_of_t(const Stimulus& g, double lambda, double tol = 1e-12) {
    if (!(g.kappa() > 0.0)) reject("s(t) requires a strictly increasing stimulus");
    const Grid& grid = g.grid();
    const auto v = g.nodes();
    if (!(lambda > v.front() && lambda < v.back()))
        throw Error(ErrorKind::OutOfRange, "lambda outside (g(x_min), g(x_max))");
    double lo = grid.x_min(), hi = grid.x_max();
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (g.interpolate_at(mid) < lambda) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct NonlocalOptions {
    double lambda_tolerance = 1e-10;
    int max_fixed_point_iterations = 50;
    double side_condition_tolerance = 1e-6;
    double mass_factor = 1.0;
    LcpOptions lcp;
};

/// Per-step diagnostics of the lambda coupling.
struct CouplingLog {
    double max_side_condition = -std::numeric_limits<double>::infinity();
    long side_condition_violations = 0;
    long fallback_steps = 0;
    long disconnected_steps = 0;
    int max_fixed_point_iterations = 0;
    std::vector<double> lambdas;  ///< accepted lambda per step
};

/// Backward-Euler stepper for  u_t - (a u')' = -(1 - g/lambda) H(u)  with lambda the
/// support average of g, resolved by an inner fixed point on lambda per step.
///
/// The inner iteration freezes lambda, solves the complementarity step, recomputes lambda
/// from {u_new > 0} and repeats until lambda settles. If it cycles, lambda is found instead
/// by regula falsi on the mass defect, which is continuous and monotone in 1/lambda and
/// vanishes exactly when lambda equals the support average.
class NonlocalStepper {
public:
    NonlocalStepper(const OperatorSpec& spec, const Stimulus& g, NonlocalOptions opt = {})
        : op_(g.grid(), spec), g_(g), opt_(opt) {}

    const CouplingLog& log() const noexcept { return log_; }
    const DiscreteOperator& op() const noexcept { return op_; }

    /// Lambda from the exact positivity set of the nodal values.
    double lambda_of(const Field1D& u) const {
        SupportSet s = detect_support(u.values(), 0.0, u.grid().h());
        return lambda_of_support(g_, s);
    }

    StepResult step(const Field1D& u, double t_old, double t_new) {
        const double dt = t_new - t_old;
        if (!lagged_) lagged_ = lambda_of(u);
        const double mass_old = integrate(u);
        double lambda = *lagged_;
        std::vector<double> seen;
        std::optional<StepResult> accepted;
        int k = 0;
        for (; k < opt_.max_fixed_point_iterations; ++k) {
            StepResult r = solve_with(u, lambda, dt);
            if (r.active_set.empty() && r.field.max_value() == 0.0) {
                if (mass_old > 0.0)
                    throw Error(ErrorKind::Inconsistency, "support vanished while mass is positive");
                accepted = std::move(r);
                break;
            }
            const double next = graph_average(r.field, dt);
            if (std::abs(next - lambda) <= opt_.lambda_tolerance) {
                accepted = std::move(r);
                break;
            }
            const bool cycling = std::any_of(seen.begin(), seen.end(), [&](double s) {
                return std::abs(s - next) <= opt_.lambda_tolerance;
            });
            seen.push_back(lambda);
            if (cycling) break;
            lambda = next;
        }
        log_.max_fixed_point_iterations = std::max(log_.max_fixed_point_iterations, k + 1);
        if (!accepted) {
            ++log_.fallback_steps;
            seen.push_back(lambda);
            accepted = solve_by_mass(u, mass_old, dt, seen, lambda);
        }
        StepResult r = std::move(*accepted);
        r.t = t_new;
        lagged_ = lambda;
        record_step(r, lambda);
        return r;
    }

    TraceRow row(const Field1D& u, double t) {
        TraceRow row;
        row.t = t;
        if (auto p = infimum_of_support(u)) row.p = *p;
        const SupportSet s = detect_support(u);
        row.support_measure = s.measure;
        row.mass = opt_.mass_factor * integrate(u);
        if (!s.empty()) {
            row.lambda = (lagged_ && last_t_ == t) ? *lagged_ : lambda_of(u);
            if (g_.kappa() > 0.0) {
                const auto v = g_.nodes();
                if (row.lambda > v.front() && row.lambda < v.back()) row.s = s_of_t(g_, row.lambda);
            }
        }
        return row;
    }

private:
    /// Average of g under the discrete Heaviside selection of the last solve: weight 1 on
    /// {u_new > 0} and 1 - w_i / (dt F_i) in [0, 1] on contact nodes, w the multiplier.
    /// Zero trapezoidal mass change of the step is equivalent to lambda equal to this average.
    double graph_average(const Field1D& u_new, double dt) const {
        const Grid& grid = u_new.grid();
        const auto g = g_.nodes();
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < u_new.size(); ++i) {
            double hv = 1.0;
            if (u_new[i] == 0.0) {
                const double f = dt * sink_[i];
                hv = f > 0.0 ? std::clamp(1.0 - ws_.w[i] / f, 0.0, 1.0) : 0.0;
            }
            num += grid.weight(i) * hv * g[i];
            den += grid.weight(i) * hv;
        }
        if (!(den > 0.0))
            throw Error(ErrorKind::DegenerateSupport, "lambda is undefined on an empty support");
        return num / den;
    }

    StepResult solve_with(const Field1D& u, double lambda, double dt) {
        sink_.resize(u.size());
        SinkField::nonlocal(g_.shared_nodes(), lambda).fill(u.grid(), 0.0, sink_);
        return step_projected(u, op_, sink_, dt, ws_, opt_.lcp);
    }

    StepResult solve_by_mass(const Field1D& u, double mass_old, double dt,
                             std::span<const double> candidates, double& lambda) {
        // Defect D(mu) = mass(u_new(mu)) - mass_old is nondecreasing in mu = 1/lambda.
        auto defect = [&](double mu, StepResult* keep) {
            StepResult r = solve_with(u, 1.0 / mu, dt);
            const double d = integrate(r.field) - mass_old;
            if (keep) *keep = std::move(r);
            return d;
        };
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double c : candidates) {
            lo = std::min(lo, 1.0 / c);
            hi = std::max(hi, 1.0 / c);
        }
        double dlo = defect(lo, nullptr), dhi = defect(hi, nullptr);
        for (int e = 0; e < 60 && dlo > 0.0; ++e) { lo *= 0.9; dlo = defect(lo, nullptr); }
        for (int e = 0; e < 60 && dhi < 0.0; ++e) { hi *= 1.1; dhi = defect(hi, nullptr); }
        if (dlo > 0.0 || dhi < 0.0)
            throw Error(ErrorKind::SolverFailure, "lambda fixed point could not be bracketed");
        const double target = 1e-14 * std::max(1.0, std::abs(mass_old));
        int side = 0;
        for (int it = 0; it < 200; ++it) {
            double mu = (lo * dhi - hi * dlo) / (dhi - dlo);
            if (!(mu > lo && mu < hi)) mu = 0.5 * (lo + hi);
            StepResult r{0.0, Field1D(u.grid()), {}, 0.0, 0, false};
            const double d = defect(mu, &r);
            lambda = 1.0 / mu;
            if (std::abs(d) <= target || (hi - lo) <= 1e-15 * hi) return r;
            if (d < 0.0) {
                lo = mu; dlo = d;
                if (side == -1) dhi *= 0.5;
                side = -1;
            } else {
                hi = mu; dhi = d;
                if (side == 1) dlo *= 0.5;
                side = 1;
            }
        }
        throw Error(ErrorKind::SolverFailure, "lambda fixed point did not converge");
    }

    void record_step(const StepResult& r, double lambda) {
        const auto u = r.field.values();
        const auto g = g_.nodes();
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < u.size(); ++i)
            if (u[i] == 0.0) worst = std::max(worst, g[i] - lambda);
        log_.max_side_condition = std::max(log_.max_side_condition, worst);
        if (worst > opt_.side_condition_tolerance) ++log_.side_condition_violations;
        if (detect_support(r.field).intervals.size() > 1) ++log_.disconnected_steps;
        log_.lambdas.push_back(lambda);
        last_t_ = r.t;
    }

    DiscreteOperator op_;
    Stimulus g_;
    NonlocalOptions opt_;
    LcpWorkspace ws_;
    std::vector<double> sink_;
    std::optional<double> lagged_;
    double last_t_ = -1.0;
    CouplingLog log_;
};

struct NonlocalRun {
    EvolveResult run;
    CouplingLog log;
};

/// Evolves the nonlocal problem from u0 at t = 0.
inline NonlocalRun solve_nonlocal(const Field1D& u0, const OperatorSpec& spec, const Stimulus& g,
                                  double t_end, const TimeSchedule& schedule,
                                  std::span<const double> probes, NonlocalOptions opt = {}) {
    for (double v : u0.values())
        if (v < 0.0) reject("initial datum must be nonnegative");
    if (!(integrate(u0) > 0.0)) reject("initial datum must have positive mass");
    if (!(u0.grid() == g.grid())) reject("initial datum and stimulus grids differ");
    NonlocalStepper stepper(spec, g, opt);
    EvolveOptions eo;
    eo.mass_factor = opt.mass_factor;
    eo.lcp = opt.lcp;
    NonlocalRun out;
    out.run = evolve_with(stepper, u0, 0.0, t_end, schedule, probes, eo);
    out.log = stepper.log();
    return out;
}

/// Axisymmetric sphere problem: a(x) = 1 - x^2 on [-1, 1], mass reported as 2 pi int u.
inline NonlocalRun solve_sphere(const Field1D& u0, const Stimulus& g, double t_end, double dt,
                                std::span<const double> probes, NonlocalOptions opt = {}) {
    if (u0.grid().x_min() != -1.0 || u0.grid().x_max() != 1.0)
        reject("sphere model lives on [-1, 1]");
    opt.mass_factor = 2.0 * std::numbers::pi;
    return solve_nonlocal(u0, OperatorSpec::sphere(), g, t_end, TimeSchedule{dt}, probes, opt);
}

/// Sphere data with a linear stimulus g(x) = g_left + (g_right - g_left)(x + 1)/2 and
/// u0 = A (x - gamma)_+^2. The default amplitude matches the initial sink at gamma,
/// A = (1 - g(gamma)/lambda(0)) / (2 a(gamma)), so the front starts with finite speed.
struct SphereSetup {
    double gamma = -0.2;
    double g_left = 0.25;
    double g_right = 0.75;
    std::size_t n_cells = 2000;
    std::optional<double> amplitude;

    double slope() const { return 0.5 * (g_right - g_left); }
    double g(double x) const { return g_left + slope() * (x + 1.0); }
    Grid grid() const { return Grid(-1.0, 1.0, n_cells); }

    Stimulus stimulus() const {
        return Stimulus(grid(), [gl = g_left, k = slope()](double x) { return gl + k * (x + 1.0); }, g_left,
                        g_right, slope());
    }

    double compatible_amplitude() const {
        const double lambda0 = g(0.5 * (gamma + 1.0));
        return (1.0 - g(gamma) / lambda0) / (2.0 * (1.0 - gamma * gamma));
    }

    Field1D initial() const {
        if (!(gamma > -1.0 && gamma < 1.0)) reject("gamma must lie in (-1, 1)");
        if (!(g_left > 0.0 && g_left < g_right && g_right < 1.0)) reject("stimulus needs 0 < g_left < g_right < 1");
        const double A = amplitude.value_or(compatible_amplitude());
        if (!(A > 0.0)) reject("amplitude must be positive");
        return Field1D::sample(
            grid(), [A, c = gamma](double x) { return x > c ? A * (x - c) * (x - c) : 0.0; },
            default_positivity_threshold(A * (1.0 - gamma) * (1.0 - gamma)));
    }
};

inline SphereSetup sphere_preset(const std::string& name) {
    if (name == "assumption-3.1-default" || name == "default") return SphereSetup{};
    reject("unknown sphere preset: " + name);
}

struct MonotonicityReport {
    bool monotone = true;
    double worst_slope = 0.0;  ///< most negative forward difference seen
    std::optional<std::size_t> snapshot;
    std::optional<std::size_t> node;
};

/// Forward differences u[i+1] - u[i] >= -tolerance on every snapshot.
inline MonotonicityReport monotonicity_check(std::span<const StepResult> snapshots,
                                             double tolerance) {
    MonotonicityReport rep;
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        const auto v = snapshots[k].field.values();
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            const double d = v[i + 1] - v[i];
            if (d < rep.worst_slope) {
                rep.worst_slope = d;
                if (d < -tolerance) {
                    rep.monotone = false;
                    rep.snapshot = k;
                    rep.node = i;
                }
            }
        }
    }
    return rep;
}

struct NondegeneracyReport {
    bool hypotheses_met = false;     ///< kappa > 0, g within (0, 1), support of u0 is (gamma, 1]
    double theta_margin = 0.0;       ///< min over {u0 = 0} of lambda(0) - g
    double fattening_measure = 0.0;  ///< h times the number of support-boundary nodes of u0
    double mass = 0.0;               ///< m = 2 pi int u0
    double sup_norm = 0.0;           ///< sup over stored snapshots
    double c0 = std::numeric_limits<double>::quiet_NaN();
    double delta0 = std::numeric_limits<double>::quiet_NaN();
    double p_upper_bound = 0.0;      ///< 1 - m / (2 pi |u|_inf)
    double p_bound_margin = 0.0;     ///< min over probes of p_upper_bound - p
    double lambda_gap_margin = std::numeric_limits<double>::quiet_NaN();  ///< min lambda - g(p) - kappa m/(4 pi |u|)
    double separation_margin = std::numeric_limits<double>::quiet_NaN();  ///< min s - p - c0
};

/// Nondegeneracy constants and margins of a sphere run.
///
/// With m the sphere mass and M = sup |u|:
///   p(t) <= 1 - m / (2 pi M),   lambda(t) >= g(p(t)) + kappa m / (4 pi M),
///   s(t) - p(t) >= c0 := kappa m / (4 pi M max|g'|),
///   delta0 = min(c0, m / (2 pi M), kappa m / (4 pi M)) / 8.
inline NondegeneracyReport nondegeneracy_report(const Field1D& u0, const Stimulus& g,
                                                const FreeBoundaryTrace& trace,
                                                std::span<const StepResult> snapshots,
                                                double slack = 0.0) {
    NondegeneracyReport rep;
    const double two_pi = 2.0 * std::numbers::pi;
    const Grid& grid = u0.grid();
    rep.mass = two_pi * integrate(u0);
    rep.sup_norm = u0.max_value();
    for (const auto& s : snapshots) rep.sup_norm = std::max(rep.sup_norm, s.field.max_value());

    const SupportSet s0 = detect_support(u0);
    if (!s0.empty()) {
        const double lambda0 = lambda_of_support(g, s0);
        rep.theta_margin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < u0.size(); ++i)
            if (!u0.positive(i)) rep.theta_margin = std::min(rep.theta_margin, lambda0 - g.nodes()[i]);
        std::size_t boundary_nodes = 0;
        for (const auto& r : s0.intervals) {
            if (r.first > 0) ++boundary_nodes;
            if (r.last + 1 < u0.size()) ++boundary_nodes;
        }
        rep.fattening_measure = grid.h() * static_cast<double>(boundary_nodes);
    }
    const bool support_right = s0.intervals.size() == 1 && s0.intervals[0].last == u0.size() - 1;
    rep.hypotheses_met = g.kappa() > 0.0 && g.g0() > 0.0 && g.g1() < 1.0 && support_right;

    const double ratio = rep.mass / (two_pi * rep.sup_norm);
    rep.p_upper_bound = 1.0 - ratio;
    rep.p_bound_margin = std::numeric_limits<double>::infinity();
    for (const auto& row : trace.rows)
        if (std::isfinite(row.p)) rep.p_bound_margin = std::min(rep.p_bound_margin, rep.p_upper_bound + slack - row.p);
    if (!rep.hypotheses_met) return rep;

    const double gap = g.kappa() * rep.mass / (2.0 * two_pi * rep.sup_norm);
    rep.c0 = gap / g.max_slope();
    rep.delta0 = 0.125 * std::min({rep.c0, ratio, gap});
    rep.lambda_gap_margin = std::numeric_limits<double>::infinity();
    rep.separation_margin = std::numeric_limits<double>::infinity();
    for (const auto& row : trace.rows) {
        if (!std::isfinite(row.p) || !std::isfinite(row.lambda)) continue;
        rep.lambda_gap_margin = std::min(rep.lambda_gap_margin, row.lambda - g.interpolate_at(row.p) - gap);
        if (std::isfinite(row.s))
            rep.separation_margin = std::min(rep.separation_margin, row.s - row.p - rep.c0 + slack);
    }
    return rep;
}

struct VanishingReport {
    long rectangles_checked = 0;
    long violations = 0;
};

/// Post-hoc check on consecutive snapshots: whenever the sink is >= theta > 0 and
/// u <= theta rho^2 on [x_min, x0 + 2 rho] over a time window with x0 + 2 rho <= p at the
/// window start, u must vanish on [x_min, x0 + rho] over that window.
inline VanishingReport left_vanishing_check(std::span<const StepResult> snapshots,
                                            const Stimulus& g, std::span<const double> lambdas,
                                            std::span<const double> rhos) {
    VanishingReport rep;
    if (snapshots.size() != lambdas.size()) reject("one lambda per snapshot is required");
    const Grid& grid = g.grid();
    const auto gv = g.nodes();
    for (std::size_t a = 0; a + 1 < snapshots.size(); ++a) {
        const auto p0 = infimum_of_support(snapshots[a].field);
        if (!p0) continue;
        for (double rho : rhos) {
            for (double x0 = grid.x_min(); x0 + 2.0 * rho <= *p0; x0 += rho) {
                const std::size_t outer = grid.nearest(x0 + 2.0 * rho);
                const std::size_t inner = grid.nearest(x0 + rho);
                double theta = std::numeric_limits<double>::infinity();
                double umax = 0.0;
                for (std::size_t k = a; k <= a + 1; ++k) {
                    const auto v = snapshots[k].field.values();
                    for (std::size_t i = 0; i <= outer; ++i) {
                        theta = std::min(theta, 1.0 - gv[i] / lambdas[k]);
                        umax = std::max(umax, v[i]);
                    }
                }
                if (!(theta > 0.0) || umax > theta * rho * rho) continue;
                ++rep.rectangles_checked;
                for (std::size_t k = a; k <= a + 1; ++k) {
                    const auto v = snapshots[k].field.values();
                    for (std::size_t i = 0; i < inner; ++i) {
                        if (v[i] > snapshots[k].field.positivity_threshold()) {
                            ++rep.violations;
                            break;
                        }
                    }
                }
            }
        }
    }
    return rep;
}

}  // namespace mcob
