#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qclock/constants.hpp"
#include "qclock/errors.hpp"
#include "qclock/internal.hpp"
#include "qclock/numeric.hpp"

// Interferometric visibility of a composite particle whose branches age
// differently. The internal state dephases as exp(-i E dtau / hbar) per
// level; visibility is the modulus of the population-weighted phasor sum.

namespace qclock::coherence {

// How the proper-time gap between the two branches grows with lab time.
class DeltaTauLaw {
public:
    enum class Kind { FixedHeights, FreeFallRindler, Explicit };

    static DeltaTauLaw fixed_heights(double g, double delta_x) {
        if (!(g > 0.0))
            throw NonPositiveArgument("fixed_heights law needs g > 0");
        DeltaTauLaw l;
        l.kind_ = Kind::FixedHeights;
        l.g_ = g;
        l.delta_x_ = delta_x;
        return l;
    }

    static DeltaTauLaw free_fall_rindler(double g, double delta_x) {
        if (!(g > 0.0))
            throw NonPositiveArgument("free_fall_rindler law needs g > 0");
        DeltaTauLaw l;
        l.kind_ = Kind::FreeFallRindler;
        l.g_ = g;
        l.delta_x_ = delta_x;
        return l;
    }

    // Tabulated (t, dtau) pairs, linearly interpolated. The first node must
    // be (0, 0): no aging gap before the branches separate.
    static DeltaTauLaw explicit_table(std::vector<double> t, std::vector<double> dtau) {
        if (t.size() != dtau.size() || t.size() < 2)
            throw ValidationError("explicit law needs >= 2 matching nodes");
        if (t.front() != 0.0 || dtau.front() != 0.0)
            throw ValidationError("explicit law must start at (0, 0)");
        for (std::size_t i = 1; i < t.size(); ++i)
            if (!(t[i] > t[i - 1]))
                throw ValidationError("explicit law times must increase strictly");
        DeltaTauLaw l;
        l.kind_ = Kind::Explicit;
        l.t_ = std::move(t);
        l.dtau_ = std::move(dtau);
        return l;
    }

    Kind kind() const { return kind_; }
    double g() const { return g_; }
    double delta_x() const { return delta_x_; }

    bool linear() const { return kind_ == Kind::FixedHeights; }

    double linear_rate(const Constants& k) const {
        if (!linear())
            throw UnsupportedLaw("only the fixed-heights law has a constant rate");
        return (g_ * delta_x_) / k.c2();
    }

    double eval(double t, const Constants& k) const {
        switch (kind_) {
        case Kind::FixedHeights:
            return ((g_ * delta_x_) / k.c2()) * t;
        case Kind::FreeFallRindler:
            return delta_x_ / k.c * std::tanh(g_ * t / k.c);
        case Kind::Explicit: {
            if (t < t_.front() || t > t_.back())
                throw ValidationError("explicit law evaluated outside its table");
            std::size_t hi = 1;
            while (hi + 1 < t_.size() && t_[hi] < t) ++hi;
            const double w = (t - t_[hi - 1]) / (t_[hi] - t_[hi - 1]);
            return dtau_[hi - 1] + w * (dtau_[hi] - dtau_[hi - 1]);
        }
        }
        return 0.0;
    }

private:
    Kind kind_ = Kind::FixedHeights;
    double g_ = 0.0;
    double delta_x_ = 0.0;
    std::vector<double> t_, dtau_;
};

// V = | sum_i p_i exp(-i E_i dtau / hbar) |. Each phase is reduced to its
// fractional cycle count before the trig call: the integer part of 1e20
// cycles carries no information but would destroy the fraction.
inline double visibility(const internal::InternalSpectrum& s, double dtau,
                         const Constants& k) {
    const double scale = dtau / (num::two_pi * k.hbar);
    num::CompensatedSum re, im;
    for (const auto& l : s.levels()) {
        const auto z = num::unit_phasor_neg(l.energy * scale);
        re.add(l.population * z.real());
        im.add(l.population * z.imag());
    }
    const double v = std::hypot(re.value(), im.value());
    return std::clamp(v, 0.0, 1.0);
}

// Two-level closed form |cos(w dtau / 2)|, with the same cycle reduction so
// it agrees with the general sum for arbitrarily large phases.
inline double visibility_two_level(double omega, double dtau) {
    const double cycles = omega * dtau / num::two_pi;
    return std::abs(std::cos(num::pi * num::wrap_cycles(cycles)));
}

// Time for visibility to fall by 1/sqrt(e) under a Gaussian energy spread:
// hbar c^2 / (dH0 g dx).
inline double decoherence_time(double delta_h0, double g, double delta_x,
                               const Constants& k) {
    if (!(delta_h0 > 0.0))
        throw NonPositiveArgument("decoherence_time needs delta_h0 > 0");
    if (!(g > 0.0))
        throw NonPositiveArgument("decoherence_time needs g > 0");
    if (!(delta_x > 0.0))
        throw NonPositiveArgument("decoherence_time needs delta_x > 0");
    return k.hbar * k.c2() / (delta_h0 * g * delta_x);
}

// Second-cumulant envelope exp(-(dH0 dtau / hbar)^2 / 2). With the
// decoherence time above, V(tau_dec) = exp(-1/2).
inline double gaussian_visibility(double delta_h0, double dtau, const Constants& k) {
    const double s = delta_h0 * dtau / k.hbar;
    return std::exp(-0.5 * s * s);
}

struct RevivalResult {
    bool periodic = false;
    double t_rev = 0.0; // 0 with periodic = true: visibility never leaves 1
};

// Exact revival time for a linear-in-t law: the first t where every phase
// E_i dtau(t) / hbar returns to a multiple of 2 pi. Exists iff the energy
// gaps are commensurate; detected by rationalizing gap ratios.
inline RevivalResult revival_time(const internal::InternalSpectrum& s,
                                  const DeltaTauLaw& law, const Constants& k,
                                  double tol = 1e-9) {
    if (!law.linear())
        throw UnsupportedLaw("revival_time needs a linear delta-tau law");
    const double rate = law.linear_rate(k);
    if (s.size() == 1 || rate == 0.0)
        return {true, 0.0};

    std::vector<double> gaps;
    gaps.reserve(s.size() - 1);
    for (std::size_t i = 1; i < s.size(); ++i)
        gaps.push_back(s.energy(i) - s.energy(0));
    const double d_ref = *std::min_element(gaps.begin(), gaps.end());
    if (!(d_ref > 0.0)) return {false, 0.0};

    constexpr std::int64_t den_cap = 1000000;
    std::int64_t lcm = 1;
    for (double d : gaps) {
        const double r = d / d_ref;
        const auto rat = num::rationalize(r, den_cap, tol * r);
        if (!rat) return {false, 0.0};
        const std::int64_t g = std::gcd(lcm, rat->den);
        const std::int64_t factor = rat->den / g;
        if (lcm > den_cap / factor) return {false, 0.0};
        lcm *= factor;
    }
    // Finest common gap G = d_ref / lcm; all phases close after
    // dtau = 2 pi hbar / G.
    const double G = d_ref / static_cast<double>(lcm);
    const double t_rev = num::two_pi * k.hbar / (G * rate);
    const double v_back = visibility(s, law.eval(t_rev, k), k);
    if (v_back < 1.0 - tol) return {false, 0.0};
    return {true, t_rev};
}

struct VisibilityCurve {
    std::vector<double> times;
    std::vector<double> delta_taus;
    std::vector<double> values;
    std::string spectrum_label;
};

inline VisibilityCurve visibility_curve(const internal::InternalSpectrum& s,
                                        const DeltaTauLaw& law,
                                        std::span<const double> times,
                                        const Constants& k) {
    VisibilityCurve c;
    c.spectrum_label = s.label();
    c.times.assign(times.begin(), times.end());
    c.delta_taus.resize(times.size());
    c.values.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        c.delta_taus[i] = law.eval(times[i], k);
        c.values[i] = visibility(s, c.delta_taus[i], k);
    }
    return c;
}

struct GaussianFit {
    double coefficient = 0.0; // a in -ln V = a t^2
    double tau_dec = 0.0;     // 1 / sqrt(2 a)
    std::size_t points = 0;
};

// Quadratic decay coefficient of -ln V on the early window V >= v_min.
// Uses the small-t-weighted slope estimator: the target is the limiting
// Taylor coefficient, and an unweighted fit would drag in the quartic
// cumulant from the far edge of the window.
inline GaussianFit fit_gaussian_decay(std::span<const double> times,
                                      std::span<const double> values,
                                      double v_min = 0.95) {
    if (times.size() != values.size())
        throw DimensionMismatch("fit_gaussian_decay needs matching samples");
    std::vector<double> t2, y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        // Leading window only: a revival at late times re-enters the
        // V >= v_min band and would drag the quadratic coefficient down.
        if (values[i] < v_min) break;
        if (times[i] > 0.0 && values[i] > 0.0) {
            t2.push_back(times[i] * times[i]);
            y.push_back(-std::log(values[i]));
        }
    }
    if (t2.size() < 3)
        throw ValidationError("fit_gaussian_decay needs >= 3 points inside the window");
    GaussianFit f;
    f.coefficient = num::mean_ratio_slope(t2, y);
    f.points = t2.size();
    if (f.coefficient > 0.0) f.tau_dec = 1.0 / std::sqrt(2.0 * f.coefficient);
    return f;
}

} // namespace qclock::coherence
