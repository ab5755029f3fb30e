#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <ocmt/errors.hpp>

namespace ocmt {

/// Standard normal distribution function.
inline double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Upper tail 1 - Phi(x), accurate for large x.
inline double normal_sf(double x)
{
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/**
 * Inverse of the standard normal distribution function.
 *
 * Acklam's rational approximation (relative error ~1e-9) followed by two
 * Halley steps against erfc, which brings the result to within a few ulp.
 * The correction is taken in the tail that is computed without cancellation.
 */
inline double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw DomainError("normal_quantile: probability outside (0, 1)");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549671464928540e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    // Work in the lower half so the target probability q = min(p, 1-p) is
    // exact; 1 - p is exact for p >= 0.5 (Sterbenz).
    const bool upper = p > 0.5;
    const double q = upper ? 1.0 - p : p;

    double x = 0.0;
    if (q < p_low) {
        const double r = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    } else {
        const double s = q - 0.5;
        const double r = s * s;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

    // x <= 0 here; refine Phi(x) = q.
    const double sqrt_2pi = std::sqrt(2.0 * std::numbers::pi);
    for (int it = 0; it < 2; ++it) {
        const double e = normal_cdf(x) - q;
        const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return upper ? -x : x;
}

} // namespace ocmt
