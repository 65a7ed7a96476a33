#pragma once

#include <cmath>
#include <numbers>

namespace mcob {

/// 1D heat kernel (4 pi t)^{-1/2} exp(-x^2 / 4t).
inline double heat_kernel(double x, double t) {
    return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

/// Integral of the heat kernel over [a, b].
inline double heat_kernel_mass(double a, double b, double t) {
    const double s = 2.0 * std::sqrt(t);
    return 0.5 * (std::erf(b / s) - std::erf(a / s));
}

/// sqrt(6 t ln(1/t)), the small-time support radius of the Dirac obstacle solution.
inline double support_reference(double t) { return std::sqrt(6.0 * t * std::log(1.0 / t)); }

/// Radius where heat_kernel(x, t) = t, i.e. |x|^2 = 6 t ln(1 / ((4 pi)^{1/3} t)).
/// Zero when the kernel peak is already below t.
inline double subsolution_radius(double t) {
    const double arg = 1.0 / (std::cbrt(4.0 * std::numbers::pi) * t);
    return arg > 1.0 ? std::sqrt(6.0 * t * std::log(arg)) : 0.0;
}

/// Outer support bound sqrt(6 t ln(alpha / t)) + sqrt(t / alpha), valid for alpha > 9 max(1, T*).
inline double outer_support_bound(double t, double alpha) {
    return std::sqrt(6.0 * t * std::log(alpha / t)) + std::sqrt(t / alpha);
}

}  // namespace mcob
