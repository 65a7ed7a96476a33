#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mcob/error.hpp"

namespace mcob {

/// Uniform grid on [x_min, x_max] with n_cells + 1 nodes.
class Grid {
public:
    Grid(double x_min, double x_max, std::size_t n_cells)
        : x_min_(x_min), x_max_(x_max), n_cells_(n_cells) {
        if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max))
            reject("grid requires finite x_min < x_max");
        if (n_cells == 0) reject("grid requires at least one cell");
        h_ = (x_max - x_min) / static_cast<double>(n_cells);
    }

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t n_cells() const noexcept { return n_cells_; }
    std::size_t n_nodes() const noexcept { return n_cells_ + 1; }
    double h() const noexcept { return h_; }
    double length() const noexcept { return x_max_ - x_min_; }

    double x(std::size_t i) const noexcept {
        // Pin the last node so x(n_cells) == x_max exactly.
        return i == n_cells_ ? x_max_ : x_min_ + static_cast<double>(i) * h_;
    }

    /// Control-volume (trapezoid) weight of node i.
    double weight(std::size_t i) const noexcept {
        return (i == 0 || i == n_cells_) ? 0.5 * h_ : h_;
    }

    /// Index of the node nearest to x, clamped to the grid.
    std::size_t nearest(double x) const noexcept {
        const double s = std::round((x - x_min_) / h_);
        if (s <= 0.0) return 0;
        if (s >= static_cast<double>(n_cells_)) return n_cells_;
        return static_cast<std::size_t>(s);
    }

    std::vector<double> nodes() const {
        std::vector<double> xs(n_nodes());
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = x(i);
        return xs;
    }

    bool operator==(const Grid& o) const noexcept {
        return x_min_ == o.x_min_ && x_max_ == o.x_max_ && n_cells_ == o.n_cells_;
    }

private:
    double x_min_;
    double x_max_;
    std::size_t n_cells_;
    double h_;
};

/// Nonnegative nodal field with a positivity threshold for support detection.
class Field1D {
public:
    Field1D(Grid grid, std::vector<double> values, double positivity_threshold = 0.0)
        : grid_(std::move(grid)), values_(std::move(values)), threshold_(positivity_threshold) {
        if (values_.size() != grid_.n_nodes()) reject("field size does not match grid");
        if (!(threshold_ >= 0.0)) reject("positivity threshold must be nonnegative");
        for (double v : values_) {
            if (!std::isfinite(v)) reject("field value is not finite");
            if (v < 0.0) reject("field value is negative");
        }
    }

    /// Zero field on `grid`.
    explicit Field1D(Grid grid, double positivity_threshold = 0.0)
        : Field1D(grid, std::vector<double>(grid.n_nodes(), 0.0), positivity_threshold) {}

    /// Sample a nonnegative function at the nodes.
    static Field1D sample(const Grid& grid, const std::function<double(double)>& f,
                          double positivity_threshold = 0.0) {
        std::vector<double> v(grid.n_nodes());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.x(i));
        return Field1D(grid, std::move(v), positivity_threshold);
    }

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }
    double positivity_threshold() const noexcept { return threshold_; }
    void set_positivity_threshold(double t) {
        if (!(t >= 0.0)) reject("positivity threshold must be nonnegative");
        threshold_ = t;
    }

    double max_value() const noexcept {
        return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
    }

    bool positive(std::size_t i) const noexcept { return values_[i] > threshold_; }

    /// Mutable access for solvers; callers keep the values nonnegative.
    std::vector<double>& mutable_values() noexcept { return values_; }

private:
    Grid grid_;
    std::vector<double> values_;
    double threshold_;
};

/// Default threshold: 1e-12 * max(1, max u0).
inline double default_positivity_threshold(double max_initial_value) {
    return 1e-12 * std::max(1.0, max_initial_value);
}

/// Closed index range [first, last].
struct IndexRange {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t count() const noexcept { return last - first + 1; }
    bool operator==(const IndexRange&) const = default;
};

/// Measure of a run of k consecutive supra-threshold nodes: (k - 1) h, or h when k == 1.
inline double range_measure(const IndexRange& r, double h) {
    const std::size_t k = r.count();
    return k <= 1 ? h : static_cast<double>(k - 1) * h;
}

/// Disjoint, sorted supra-threshold index ranges with their total measure.
struct SupportSet {
    std::vector<IndexRange> intervals;
    double measure = 0.0;

    bool empty() const noexcept { return intervals.empty(); }
    bool operator==(const SupportSet&) const = default;
};

/// Composite trapezoidal rule, optionally against a weight function.
inline double integrate(const Field1D& f,
                        const std::function<double(double)>& weight = nullptr) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double v = f[i];
        if (weight) v *= weight(g.x(i));
        if (!std::isfinite(v)) reject("integrand is not finite");
        sum += g.weight(i) * v;
    }
    return sum;
}

/// Trapezoid over raw nodal values on `grid` (values may be signed).
inline double integrate_values(const Grid& grid, std::span<const double> v) {
    if (v.size() != grid.n_nodes()) reject("value count does not match grid");
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) reject("integrand is not finite");
        sum += grid.weight(i) * v[i];
    }
    return sum;
}

inline SupportSet detect_support(std::span<const double> values, double threshold, double h) {
    SupportSet s;
    const std::size_t n = values.size();
    std::size_t i = 0;
    while (i < n) {
        if (values[i] > threshold) {
            std::size_t j = i;
            while (j + 1 < n && values[j + 1] > threshold) ++j;
            s.intervals.push_back({i, j});
            s.measure += range_measure({i, j}, h);
            i = j + 1;
        } else {
            ++i;
        }
    }
    return s;
}

inline SupportSet detect_support(const Field1D& f) {
    return detect_support(f.values(), f.positivity_threshold(), f.grid().h());
}

/// Support restricted to nodes with index in [lo, hi].
inline SupportSet detect_support_in(const Field1D& f, std::size_t lo, std::size_t hi) {
    SupportSet s;
    if (lo > hi || lo >= f.size()) return s;
    hi = std::min(hi, f.size() - 1);
    auto sub = f.values().subspan(lo, hi - lo + 1);
    s = detect_support(sub, f.positivity_threshold(), f.grid().h());
    for (auto& r : s.intervals) {
        r.first += lo;
        r.last += lo;
    }
    return s;
}

/// Leftmost supra-threshold node coordinate.
inline std::optional<double> infimum_of_support(const Field1D& f) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.positive(i)) return f.grid().x(i);
    return std::nullopt;
}

/// Rightmost supra-threshold node coordinate.
inline std::optional<double> supremum_of_support(const Field1D& f) {
    for (std::size_t i = f.size(); i-- > 0;)
        if (f.positive(i)) return f.grid().x(i);
    return std::nullopt;
}

/// Piecewise-linear interpolation of nodal values at x; zero outside the grid.
inline double interpolate(const Grid& grid, std::span<const double> v, double x) {
    if (x < grid.x_min() || x > grid.x_max()) return 0.0;
    const double s = (x - grid.x_min()) / grid.h();
    std::size_t i = static_cast<std::size_t>(std::floor(s));
    if (i >= grid.n_cells()) return v[grid.n_cells()];
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * v[i] + w * v[i + 1];
}

}  // namespace mcob
