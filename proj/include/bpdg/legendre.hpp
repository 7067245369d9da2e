#pragma once

#include <cmath>

namespace bpdg {

/// Legendre polynomials shifted to [0,1] and normalized so that
/// ∫₀¹ φ_m φ_n dξ = δ_mn. φ_0 ≡ 1.
inline double legendre_phi(int n, double xi) {
    const double t = 2.0 * xi - 1.0;
    double p0 = 1.0, p1 = t;
    if (n == 0) return 1.0;
    for (int j = 1; j < n; ++j) {
        const double p2 = ((2.0 * j + 1.0) * t * p1 - j * p0) / (j + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return std::sqrt(2.0 * n + 1.0) * p1;
}

/// dφ_n/dξ on [0,1].
inline double legendre_dphi(int n, double xi) {
    if (n == 0) return 0.0;
    const double t = 2.0 * xi - 1.0;
    // P'_n = n P_{n-1} + t P'_{n-1}.
    double p = 1.0, dp = 0.0;
    double p_prev = 0.0;
    for (int j = 1; j <= n; ++j) {
        const double dp_new = j * p + t * dp;
        const double p_new = j == 1 ? t : ((2.0 * j - 1.0) * t * p - (j - 1.0) * p_prev) / j;
        p_prev = p;
        p = p_new;
        dp = dp_new;
    }
    return 2.0 * std::sqrt(2.0 * n + 1.0) * dp;
}

} // namespace bpdg
