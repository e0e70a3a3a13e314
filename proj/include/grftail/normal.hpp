#pragma once

#include <cmath>
#include <numbers>

namespace grftail {

/// Standard normal upper tail P(Z > x).
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// log P(Z > x), usable far beyond the range where erfc underflows.
inline double log_normal_sf(double x) {
    if (x < 30.0) return std::log(normal_sf(x));
    // Asymptotic series of the Mills ratio.
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

/// Inverse of normal_sf on (0, 1).
double normal_isf(double p);

}  // namespace grftail
