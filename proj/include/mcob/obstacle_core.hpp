#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcob/error.hpp"
#include "mcob/grid1d.hpp"
#include "mcob/tridiagonal.hpp"

namespace mcob {

enum class BoundaryCondition { NaturalDegenerate, NeumannZero, DirichletZero };

/// Diffusion coefficient a(x) and boundary behaviour of  u_t - (a u')'.
struct OperatorSpec {
    std::function<double(double)> a;
    BoundaryCondition bc = BoundaryCondition::NeumannZero;

    static OperatorSpec unit(BoundaryCondition bc = BoundaryCondition::NeumannZero) {
        return {[](double) { return 1.0; }, bc};
    }

    /// Axisymmetric Laplace-Beltrami on the unit sphere: a(x) = 1 - x^2, no flux at the poles.
    static OperatorSpec sphere() {
        return {[](double x) { return 1.0 - x * x; }, BoundaryCondition::NaturalDegenerate};
    }
};

/// Flux-form stencil of (a u')' with face-centred coefficients a((x_i + x_{i+1})/2).
/// At zero-flux ends the boundary node owns a half cell, so the trapezoid mass of L u is zero.
class DiscreteOperator {
public:
    DiscreteOperator(const Grid& grid, const OperatorSpec& spec) : grid_(grid), bc_(spec.bc) {
        if (!spec.a) reject("operator coefficient is not set");
        const std::size_t nc = grid.n_cells();
        const double inv_h2 = 1.0 / (grid.h() * grid.h());
        faces_.resize(nc);
        for (std::size_t i = 0; i < nc; ++i) {
            const double a = spec.a(0.5 * (grid.x(i) + grid.x(i + 1)));
            if (!std::isfinite(a) || a < 0.0) reject("diffusion coefficient must be finite and >= 0");
            if (a == 0.0) reject("diffusion coefficient vanishes inside the domain");
            faces_[i] = a * inv_h2;
        }
        for (std::size_t i = 1; i < nc; ++i) {
            if (!(spec.a(grid.x(i)) > 0.0))
                reject("diffusion coefficient may vanish only at the domain ends");
        }
        max_coefficient_ = 0.0;
        for (std::size_t i = 0; i <= nc; ++i)
            max_coefficient_ = std::max(max_coefficient_, spec.a(grid.x(i)));
    }

    const Grid& grid() const noexcept { return grid_; }
    BoundaryCondition bc() const noexcept { return bc_; }
    bool dirichlet() const noexcept { return bc_ == BoundaryCondition::DirichletZero; }
    double max_coefficient() const noexcept { return max_coefficient_; }

    /// Face coefficients already divided by h^2.
    std::span<const double> faces() const noexcept { return faces_; }

    /// out = L u
    void apply(std::span<const double> u, std::span<double> out) const {
        const std::size_t n = u.size();
        const std::size_t nc = n - 1;
        for (std::size_t i = 1; i < nc; ++i)
            out[i] = faces_[i] * (u[i + 1] - u[i]) - faces_[i - 1] * (u[i] - u[i - 1]);
        if (dirichlet()) {
            out[0] = 0.0;
            out[nc] = 0.0;
        } else {
            out[0] = 2.0 * faces_[0] * (u[1] - u[0]);
            out[nc] = -2.0 * faces_[nc - 1] * (u[nc] - u[nc - 1]);
        }
    }

    /// Bands of (I - dt L).
    void implicit_bands(double dt, std::vector<double>& lower, std::vector<double>& diag,
                        std::vector<double>& upper) const {
        const std::size_t n = grid_.n_nodes();
        const std::size_t nc = n - 1;
        lower.assign(n, 0.0);
        diag.assign(n, 1.0);
        upper.assign(n, 0.0);
        for (std::size_t i = 1; i < nc; ++i) {
            lower[i] = -dt * faces_[i - 1];
            upper[i] = -dt * faces_[i];
            diag[i] = 1.0 + dt * (faces_[i - 1] + faces_[i]);
        }
        if (!dirichlet()) {
            upper[0] = -2.0 * dt * faces_[0];
            diag[0] = 1.0 + 2.0 * dt * faces_[0];
            lower[nc] = -2.0 * dt * faces_[nc - 1];
            diag[nc] = 1.0 + 2.0 * dt * faces_[nc - 1];
        }
    }

private:
    Grid grid_;
    BoundaryCondition bc_;
    std::vector<double> faces_;
    double max_coefficient_ = 0.0;
};

/// Right-hand side F in  u_t - (a u')' = -F H(u).
class SinkField {
public:
    enum class Kind { Constant, LambdaCubed, Nonlocal, Custom };

    static SinkField constant(double theta) {
        if (!std::isfinite(theta)) reject("sink constant is not finite");
        SinkField s;
        s.kind_ = Kind::Constant;
        s.value_ = theta;
        return s;
    }

    /// Constant sink lambda^3.
    static SinkField lambda_cubed(double lambda) {
        if (!(lambda > 0.0)) reject("lambda must be positive");
        SinkField s;
        s.kind_ = Kind::LambdaCubed;
        s.lambda_ = lambda;
        s.value_ = lambda * lambda * lambda;
        return s;
    }

    /// F = 1 - g / lambda with nodal g.
    static SinkField nonlocal(std::shared_ptr<const std::vector<double>> g_nodes, double lambda) {
        if (!g_nodes) reject("stimulus values missing");
        if (!(lambda > 0.0) || !std::isfinite(lambda)) reject("lambda must be positive and finite");
        SinkField s;
        s.kind_ = Kind::Nonlocal;
        s.lambda_ = lambda;
        s.g_ = std::move(g_nodes);
        return s;
    }

    static SinkField custom(std::function<double(double x, double t)> f) {
        SinkField s;
        s.kind_ = Kind::Custom;
        s.f_ = std::move(f);
        return s;
    }

    Kind kind() const noexcept { return kind_; }
    double lambda() const noexcept { return lambda_; }

    void fill(const Grid& grid, double t, std::span<double> out) const {
        const std::size_t n = grid.n_nodes();
        switch (kind_) {
            case Kind::Constant:
            case Kind::LambdaCubed:
                std::fill(out.begin(), out.end(), value_);
                break;
            case Kind::Nonlocal: {
                if (g_->size() != n) reject("stimulus size does not match grid");
                const double inv = 1.0 / lambda_;
                for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 - (*g_)[i] * inv;
                break;
            }
            case Kind::Custom:
                for (std::size_t i = 0; i < n; ++i) out[i] = f_(grid.x(i), t);
                break;
        }
    }

    std::vector<double> values(const Grid& grid, double t) const {
        std::vector<double> v(grid.n_nodes());
        fill(grid, t, v);
        return v;
    }

private:
    Kind kind_ = Kind::Constant;
    double value_ = 0.0;
    double lambda_ = std::numeric_limits<double>::quiet_NaN();
    std::shared_ptr<const std::vector<double>> g_;
    std::function<double(double, double)> f_;
};

struct LcpOptions {
    double tolerance = 1e-10;
    int max_sweeps = 10000;
    int max_active_set_iterations = 200;
};

struct StepResult {
    double t = 0.0;
    Field1D field;
    SupportSet active_set;
    double complementarity_residual = 0.0;
    int iterations = 0;
    bool used_sweeps = false;
};

/// Scratch buffers reused across steps; one per running solver.
struct LcpWorkspace {
    std::vector<double> rhs, x, w, scratch, band_lo, band_di, band_up, sink;
    std::vector<char> contact;
    double bands_dt = -1.0;
    const DiscreteOperator* bands_op = nullptr;
};

namespace detail {

inline double lcp_residual(std::span<const double> u, std::span<const double> w, double scale) {
    double r = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) r = std::max(r, std::abs(std::min(u[i], w[i])));
    return r / scale;
}

/// w = A u - rhs for the tridiagonal A.
inline void lcp_defect(std::span<const double> lo, std::span<const double> di,
                       std::span<const double> up, std::span<const double> u,
                       std::span<const double> rhs, std::span<double> w) {
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) {
        double v = di[i] * u[i] - rhs[i];
        if (i > 0) v += lo[i] * u[i - 1];
        if (i + 1 < n) v += up[i] * u[i + 1];
        w[i] = v;
    }
}

}  // namespace detail

/// Solves the LCP  u >= 0,  w = A u - rhs >= 0,  u.w = 0  for the M-matrix A held in
/// ws.band_*. Primal-dual active set iteration (semismooth Newton on min(u, w) = 0), each
/// iterate a Thomas solve with contact rows pinned to zero; projected Gauss-Seidel sweeps
/// take over if the active set does not settle. `ws.contact` on entry is the initial guess.
inline void solve_lcp(LcpWorkspace& ws, double scale, const LcpOptions& opt, int& iterations,
                      bool& used_sweeps, double& residual) {
    const std::size_t n = ws.rhs.size();
    ws.x.assign(n, 0.0);
    ws.w.assign(n, 0.0);
    ws.scratch.resize(n);
    const double eps = 1e-14 * scale;
    used_sweeps = false;
    iterations = 0;
    const std::span<const double> lo(ws.band_lo), di(ws.band_di), up(ws.band_up), rhs(ws.rhs);
    const std::span<double> x(ws.x), scratch(ws.scratch);
    for (int it = 0; it < opt.max_active_set_iterations; ++it) {
        ++iterations;
        // Contact rows pin x to zero, so each run of free nodes is an independent system.
        std::size_t i = 0;
        while (i < n) {
            if (ws.contact[i]) {
                x[i] = 0.0;
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < n && !ws.contact[j]) ++j;
            const std::size_t m = j - i;
            solve_tridiagonal(lo.subspan(i, m), di.subspan(i, m), up.subspan(i, m), rhs.subspan(i, m),
                              x.subspan(i, m), scratch.subspan(i, m));
            i = j;
        }
        bool changed = false;
        for (std::size_t k = 0; k < n; ++k) {
            bool next;
            if (ws.contact[k]) {
                double w = -rhs[k];
                if (k > 0) w += lo[k] * x[k - 1];
                if (k + 1 < n) w += up[k] * x[k + 1];
                next = w >= -eps;
            } else {
                next = x[k] < -eps;
            }
            if (next != static_cast<bool>(ws.contact[k])) {
                ws.contact[k] = next;
                changed = true;
            }
        }
        if (!changed) break;
    }
    for (double& v : ws.x)
        if (v < 0.0) v = 0.0;
    detail::lcp_defect(ws.band_lo, ws.band_di, ws.band_up, ws.x, ws.rhs, ws.w);
    residual = detail::lcp_residual(ws.x, ws.w, scale);
    if (residual <= opt.tolerance) return;

    used_sweeps = true;
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = ws.rhs[i];
            if (i > 0) s -= ws.band_lo[i] * ws.x[i - 1];
            if (i + 1 < n) s -= ws.band_up[i] * ws.x[i + 1];
            ws.x[i] = std::max(0.0, s / ws.band_di[i]);
        }
        ++iterations;
        if (sweep % 16 == 15 || sweep + 1 == opt.max_sweeps) {
            detail::lcp_defect(ws.band_lo, ws.band_di, ws.band_up, ws.x, ws.rhs, ws.w);
            residual = detail::lcp_residual(ws.x, ws.w, scale);
            if (residual <= opt.tolerance) return;
        }
    }
    throw SolverFailure("complementarity iteration did not converge", residual);
}

/// One backward-Euler step of  u_t - (a u')' = -F H(u),  u >= 0,  with nodal sink values.
///
/// The update is the complementarity system
///   u_new >= 0,  (u_new - u)/dt - L u_new + F >= 0,  with equality where u_new > 0.
/// The contact guess is taken from ws.contact when its size matches, else from {u == 0}.
inline StepResult step_projected(const Field1D& u, const DiscreteOperator& op,
                                 std::span<const double> sink, double dt, LcpWorkspace& ws,
                                 const LcpOptions& opt = {}) {
    if (!(dt > 0.0) || !std::isfinite(dt)) reject("time step must be positive");
    if (!(u.grid() == op.grid())) reject("field and operator grids differ");
    const std::size_t n = u.size();
    if (sink.size() != n) reject("sink size does not match grid");
    if (ws.bands_op != &op || ws.bands_dt != dt) {
        op.implicit_bands(dt, ws.band_lo, ws.band_di, ws.band_up);
        ws.bands_op = &op;
        ws.bands_dt = dt;
    }
    ws.rhs.resize(n);
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(sink[i])) reject("sink value is not finite");
        ws.rhs[i] = u[i] - dt * sink[i];
        scale = std::max(scale, u[i]);
    }
    if (op.dirichlet()) {
        ws.rhs[0] = 0.0;
        ws.rhs[n - 1] = 0.0;
    }
    if (ws.contact.size() != n) {
        ws.contact.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) ws.contact[i] = (u[i] == 0.0 && ws.rhs[i] <= 0.0);
    }
    StepResult res{0.0, Field1D(u.grid(), u.positivity_threshold()), {}, 0.0, 0, false};
    solve_lcp(ws, scale, opt, res.iterations, res.used_sweeps, res.complementarity_residual);
    res.field.mutable_values() = ws.x;
    res.active_set = detect_support(res.field);
    return res;
}

/// Convenience overload assembling operator and sink for a single step.
inline StepResult step_projected(const Field1D& u, const OperatorSpec& spec,
                                 const SinkField& sink, double dt, double t_new = 0.0,
                                 const LcpOptions& opt = {}) {
    if (!(dt > 0.0) || !std::isfinite(dt)) reject("time step must be positive");
    DiscreteOperator op(u.grid(), spec);
    LcpWorkspace ws;
    const auto f = sink.values(u.grid(), t_new);
    StepResult r = step_projected(u, op, f, dt, ws, opt);
    r.t = t_new;
    return r;
}

/// Step-size policy. Uniform when growth == 0; otherwise dt_k = clamp(growth t_k, dt, dt_max).
struct TimeSchedule {
    double dt = 1e-3;
    double growth = 0.0;
    double dt_max = std::numeric_limits<double>::infinity();

    /// Step end times in (t0, t_end], with every probe in (t0, t_end] hit exactly.
    std::vector<double> build(double t0, double t_end, std::span<const double> probes) const {
        if (!(dt > 0.0) || !std::isfinite(dt)) reject("time step must be positive");
        if (growth < 0.0) reject("time-step growth must be nonnegative");
        if (t_end < t0) reject("t_end precedes the start time");
        std::vector<double> times;
        std::vector<double> pending;
        for (double p : probes)
            if (p > t0 && p <= t_end) pending.push_back(p);
        pending.push_back(t_end);
        std::sort(pending.begin(), pending.end());
        pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
        if (t_end == t0) return times;
        std::size_t next = 0;
        double t = t0;
        long k = 0;
        while (next < pending.size()) {
            double step = dt;
            if (growth > 0.0) step = std::clamp(growth * t, dt, std::max(dt, dt_max));
            double candidate = growth > 0.0 ? t + step : t0 + static_cast<double>(k + 1) * dt;
            const double target = pending[next];
            const double snap = 1e-9 * step;
            if (candidate >= target - snap) {
                candidate = target;
                ++next;
            } else {
                ++k;
            }
            if (growth == 0.0 && candidate == target) {
                // Stay on the uniform lattice after an off-lattice probe.
                const double lattice = (candidate - t0) / dt;
                if (std::abs(lattice - std::round(lattice)) <= 1e-9)
                    k = static_cast<long>(std::round(lattice));
            }
            if (candidate > t) times.push_back(candidate);
            t = candidate;
        }
        return times;
    }
};

/// n points from lo to hi, evenly spaced in log t.
inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k)
        v[k] = lo * std::pow(hi / lo, n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1));
    v.back() = hi;
    return v;
}

/// One row per completed step: (t, p, s, lambda, support measure, mass).
struct TraceRow {
    double t = 0.0;
    double p = std::numeric_limits<double>::quiet_NaN();
    double s = std::numeric_limits<double>::quiet_NaN();
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double support_measure = 0.0;
    double mass = 0.0;
};

struct FreeBoundaryTrace {
    std::vector<TraceRow> rows;
};

struct EvolveResult {
    std::vector<StepResult> snapshots;  ///< One per probe, in probe order.
    FreeBoundaryTrace trace;
};

struct EvolveOptions {
    double mass_factor = 1.0;
    LcpOptions lcp;
    /// Called after every step; returning false stops the run early.
    std::function<bool(const StepResult&)> on_step;
};

/// Interface expected by evolve_with:
///   StepResult step(const Field1D& u, double t_old, double t_new)
///   TraceRow row(const Field1D& u, double t)
template <class S>
concept Stepper = requires(S s, const Field1D& u, double t) {
    { s.step(u, t, t) } -> std::same_as<StepResult>;
    { s.row(u, t) } -> std::same_as<TraceRow>;
};

template <Stepper S>
EvolveResult evolve_with(S& stepper, const Field1D& u0, double t0, double t_end,
                         const TimeSchedule& schedule, std::span<const double> probes,
                         const EvolveOptions& options = {}) {
    for (std::size_t i = 0; i < probes.size(); ++i) {
        if (probes[i] < t0 || probes[i] > t_end) reject("probe time outside [t0, t_end]");
        if (i > 0 && probes[i] < probes[i - 1]) reject("probe times must be sorted");
    }
    EvolveResult out;
    out.trace.rows.push_back(stepper.row(u0, t0));
    std::size_t next_probe = 0;
    auto take_probes = [&](const Field1D& f, double t, double residual, const SupportSet& act) {
        while (next_probe < probes.size() && probes[next_probe] <= t) {
            out.snapshots.push_back(StepResult{t, f, act, residual, 0, false});
            ++next_probe;
        }
    };
    take_probes(u0, t0, 0.0, detect_support(u0));
    const std::vector<double> times = schedule.build(t0, t_end, probes);
    Field1D u = u0;
    double t = t0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        StepResult r = [&] {
            try {
                return stepper.step(u, t, times[k]);
            } catch (const SolverFailure& e) {
                throw SolverFailure(e.what(), e.residual(), static_cast<long>(k + 1));
            } catch (const Error& e) {
                throw Error(e.kind(), std::string(e.what()) + " at step " + std::to_string(k + 1));
            }
        }();
        r.t = times[k];
        t = times[k];
        out.trace.rows.push_back(stepper.row(r.field, t));
        take_probes(r.field, t, r.complementarity_residual, r.active_set);
        const bool keep_going = !options.on_step || options.on_step(r);
        u = std::move(r.field);
        if (!keep_going) break;
    }
    return out;
}

/// Stepper for sinks that do not depend on the solution (constant, lambda^3, custom).
class LocalSinkStepper {
public:
    LocalSinkStepper(const Grid& grid, const OperatorSpec& spec, SinkField sink,
                     double mass_factor = 1.0, LcpOptions lcp = {})
        : op_(grid, spec), sink_(std::move(sink)), mass_factor_(mass_factor), lcp_(lcp) {}

    StepResult step(const Field1D& u, double t_old, double t_new) {
        values_.resize(u.size());
        sink_.fill(u.grid(), t_new, values_);
        return step_projected(u, op_, values_, t_new - t_old, ws_, lcp_);
    }

    TraceRow row(const Field1D& u, double t) const {
        TraceRow r;
        r.t = t;
        if (auto p = infimum_of_support(u)) r.p = *p;
        if (sink_.kind() == SinkField::Kind::LambdaCubed) r.lambda = sink_.lambda();
        r.support_measure = detect_support(u).measure;
        r.mass = mass_factor_ * integrate(u);
        return r;
    }

    const DiscreteOperator& op() const noexcept { return op_; }

private:
    DiscreteOperator op_;
    SinkField sink_;
    double mass_factor_;
    LcpOptions lcp_;
    LcpWorkspace ws_;
    std::vector<double> values_;
};

/// Runs step_projected from u0 at t = 0 to t_end with uniform steps.
inline EvolveResult evolve(const Field1D& u0, const OperatorSpec& spec, const SinkField& sink,
                           double t_end, double dt, std::span<const double> probes,
                           const EvolveOptions& options = {}) {
    LocalSinkStepper stepper(u0.grid(), spec, sink, options.mass_factor, options.lcp);
    return evolve_with(stepper, u0, 0.0, t_end, TimeSchedule{dt}, probes, options);
}

struct ComparisonReport {
    bool ordered = true;
    double worst_excess = 0.0;  ///< max(u_low - u_high), may be negative
    std::optional<std::size_t> probe;
    std::optional<std::size_t> node;
    std::optional<double> x;
};

/// Checks u_low <= u_high + tolerance at every node of every paired snapshot.
inline ComparisonReport comparison_check(std::span<const StepResult> low,
                                         std::span<const StepResult> high,
                                         double tolerance = 1e-8) {
    if (low.size() != high.size()) reject("comparison traces have different probe counts");
    ComparisonReport rep;
    rep.worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < low.size(); ++k) {
        if (!(low[k].field.grid() == high[k].field.grid()))
            reject("comparison traces live on different grids");
        if (low[k].t != high[k].t) reject("comparison traces have different probe times");
        const auto a = low[k].field.values();
        const auto b = high[k].field.values();
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double e = a[i] - b[i];
            if (e > rep.worst_excess) rep.worst_excess = e;
            if (e > tolerance && rep.ordered) {
                rep.ordered = false;
                rep.probe = k;
                rep.node = i;
                rep.x = low[k].field.grid().x(i);
            }
        }
    }
    if (low.empty()) rep.worst_excess = 0.0;
    return rep;
}

}  // namespace mcob
