#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcob/error.hpp"

namespace mcob {

/// Thomas algorithm for lower/diag/upper bands. lower[0] and upper[n-1] are ignored.
/// Assumes the system is diagonally dominant (no pivoting). `scratch` holds at least n values.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<const double> rhs,
                              std::span<double> x, std::span<double> scratch) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n || x.size() != n || scratch.size() < n)
        reject("tridiagonal band sizes differ");
    if (n == 0) return;
    double denom = diag[0];
    scratch[0] = upper[0] / denom;
    x[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = upper[i] / denom;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= scratch[i] * x[i + 1];
}

inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<const double> rhs,
                              std::span<double> x, std::vector<double>& scratch) {
    scratch.resize(diag.size());
    solve_tridiagonal(lower, diag, upper, rhs, x, std::span<double>(scratch));
}

}  // namespace mcob
