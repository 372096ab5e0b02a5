#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qclock/errors.hpp"

// Small-number primitives. The proper-time differences this library cares
// about sit 16 orders of magnitude below the coordinate times they belong to,
// so every formula is arranged to compute the small part directly instead of
// subtracting two large numbers.

namespace qclock::num {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// sqrt(1 + e) - 1 without cancellation, valid for all e > -1.
inline double sqrt1p_minus1(double e) {
    return e / (1.0 + std::sqrt(1.0 + e));
}

// tanh(x) - x. Series below |x| = 0.08 (the direct difference would lose
// half the mantissa there), plain difference above.
inline double tanh_minus_identity(double x) {
    const double x2 = x * x;
    if (std::abs(x) < 0.08) {
        // tanh x = x - x^3/3 + 2x^5/15 - 17x^7/315 + ...
        const double c3 = -1.0 / 3.0;
        const double c5 = 2.0 / 15.0;
        const double c7 = -17.0 / 315.0;
        const double c9 = 62.0 / 2835.0;
        const double c11 = -1382.0 / 155925.0;
        const double c13 = 21844.0 / 6081075.0;
        return x * x2 *
               (c3 + x2 * (c5 + x2 * (c7 + x2 * (c9 + x2 * (c11 + x2 * c13)))));
    }
    return std::tanh(x) - x;
}

// asinh(w) - w, same strategy.
inline double asinh_minus_identity(double w) {
    const double w2 = w * w;
    if (std::abs(w) < 0.06) {
        // asinh w = w - w^3/6 + 3w^5/40 - 5w^7/112 + 35w^9/1152 - ...
        const double c3 = -1.0 / 6.0;
        const double c5 = 3.0 / 40.0;
        const double c7 = -5.0 / 112.0;
        const double c9 = 35.0 / 1152.0;
        const double c11 = -63.0 / 2816.0;
        const double c13 = 231.0 / 13312.0;
        return w * w2 *
               (c3 + w2 * (c5 + w2 * (c7 + w2 * (c9 + w2 * (c11 + w2 * c13)))));
    }
    return std::asinh(w) - w;
}

// cosh(x) - 1 = 2 sinh^2(x/2), exact to rounding for any x.
inline double cosh_minus_one(double x) {
    const double s = std::sinh(0.5 * x);
    return 2.0 * s * s;
}

// Reduce a phase expressed in cycles to the nearest-integer residual in
// [-0.5, 0.5]. Phases accumulated over macroscopic times reach 1e20 cycles;
// only the fractional part carries physics, and for commensurate spectra the
// reduction is exact because the integer part subtracts without rounding.
inline double wrap_cycles(double cycles) {
    return cycles - std::nearbyint(cycles);
}

// exp(-2*pi*i * cycles) with the reduction above.
inline std::complex<double> unit_phasor_neg(double cycles) {
    const double phase = two_pi * wrap_cycles(cycles);
    return {std::cos(phase), -std::sin(phase)};
}

// Angle wrapped to (-pi, pi].
inline double wrap_angle(double phi) {
    double r = two_pi * wrap_cycles(phi / two_pi);
    if (r <= -pi) r += two_pi;
    if (r > pi) r -= two_pi;
    return r;
}

// Neumaier-compensated accumulator for sums whose terms span many scales.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }

    double value() const { return sum + comp; }
};

namespace detail {

inline constexpr int simpson_max_depth = 48;
// Levels of unconditional refinement before the error estimate may stop the
// recursion; features narrower than the first few sample spacings would
// otherwise be invisible.
inline constexpr int simpson_min_depth = 6;

template <class F>
double simpson_recurse(F& f, double a, double fa, double b, double fb, double m,
                       double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double h6 = (b - a) / 12.0;
    const double left = h6 * (fa + 4.0 * flm + fm);
    const double right = h6 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    const bool forced = depth > simpson_max_depth - simpson_min_depth;
    if (depth <= 0 || (!forced && std::abs(delta) <= 15.0 * tol))
        return left + right + delta / 15.0;
    return simpson_recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson quadrature. The tolerance is relative to the first whole
// estimate with an absolute floor, so integrals that are legitimately tiny
// (or cross zero) still terminate.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double rel_tol = 1e-12,
                        double abs_floor = 1e-24) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = std::max(abs_floor, rel_tol * std::abs(whole));
    return detail::simpson_recurse(f, a, fa, b, fb, m, fm, whole, tol,
                                   detail::simpson_max_depth);
}

// Least-squares line y = intercept + slope * x, with the usual R^2.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2)
        throw DimensionMismatch("fit_line needs two equal-length samples of size >= 2");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw DimensionMismatch("fit_line: degenerate abscissa");
    LineFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - (out.intercept + out.slope * x[i]);
            ss_res += r * r;
        }
        out.r2 = 1.0 - ss_res / syy;
    }
    return out;
}

// Unweighted through-origin fit y = a * x.
inline double fit_through_origin(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty())
        throw DimensionMismatch("fit_through_origin needs equal-length nonempty samples");
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    if (sxx == 0.0)
        throw DimensionMismatch("fit_through_origin: degenerate abscissa");
    return sxy / sxx;
}

// Through-origin slope as the mean of y/x over x != 0. Equivalent to a
// 1/x^2-weighted least squares; emphasizes small x, which is the right
// estimator for the limiting Taylor coefficient of a smooth curve (the
// unweighted fit soaks up higher-order terms from the far end of the window).
inline double mean_ratio_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty())
        throw DimensionMismatch("mean_ratio_slope needs equal-length nonempty samples");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) {
            acc += y[i] / x[i];
            ++n;
        }
    }
    if (n == 0)
        throw DimensionMismatch("mean_ratio_slope: all abscissae are zero");
    return acc / static_cast<double>(n);
}

inline double rms_residual_through_origin(std::span<const double> x,
                                          std::span<const double> y, double a) {
    if (x.size() != y.size() || x.empty())
        throw DimensionMismatch("rms_residual_through_origin: bad sample");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - a * x[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(x.size()));
}

// Best rational approximation p/q of x with q <= max_den, by continued
// fractions. Returns nothing if no convergent lands within tol.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
};

inline std::optional<Rational> rationalize(double x, std::int64_t max_den, double tol) {
    if (!(max_den >= 1) || !std::isfinite(x)) return std::nullopt;
    std::int64_t p0 = 1, q0 = 0; // h_{-1}/k_{-1}
    std::int64_t p1 = static_cast<std::int64_t>(std::floor(x));
    std::int64_t q1 = 1;
    double frac = x - std::floor(x);
    for (int it = 0; it < 64; ++it) {
        if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= tol)
            return Rational{p1, q1};
        if (frac == 0.0) break;
        const double inv = 1.0 / frac;
        if (inv > 9.2e18) break;
        const std::int64_t a = static_cast<std::int64_t>(std::floor(inv));
        frac = inv - std::floor(inv);
        // Overflow guard on the recurrence p2 = a*p1 + p0.
        if (a != 0 && (std::abs(p1) > (std::numeric_limits<std::int64_t>::max() - std::abs(p0)) / a ||
                       q1 > (std::numeric_limits<std::int64_t>::max() - q0) / a))
            break;
        const std::int64_t p2 = a * p1 + p0;
        const std::int64_t q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= tol)
        return Rational{p1, q1};
    return std::nullopt;
}

} // namespace qclock::num
