#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qclock/constants.hpp"
#include "qclock/errors.hpp"
#include "qclock/numeric.hpp"

// World lines, charts, and proper time. Everything here accumulates the
// *excess* tau - dt rather than tau itself: at laboratory scales the excess
// sits near 1e-16 s per second, which a plain accumulation of tau would
// round away entirely.

namespace qclock::geometry {

// Piecewise-linear gravitational potential Phi(x) in J/kg.
class Potential {
public:
    Potential() : uniform_(true), slope_(0.0) {}

    static Potential uniform(double slope) {
        Potential p;
        p.uniform_ = true;
        p.slope_ = slope;
        return p;
    }

    static Potential tabulated(std::vector<double> x, std::vector<double> phi) {
        if (x.size() != phi.size() || x.size() < 2)
            throw ValidationError("tabulated potential needs >= 2 matching nodes");
        for (std::size_t i = 1; i < x.size(); ++i)
            if (!(x[i] > x[i - 1]))
                throw ValidationError("tabulated potential nodes must increase strictly");
        Potential p;
        p.uniform_ = false;
        p.x_ = std::move(x);
        p.phi_ = std::move(phi);
        return p;
    }

    bool is_uniform() const { return uniform_; }

    double slope() const {
        if (!uniform_)
            throw ValidationError("potential is not uniform");
        return slope_;
    }

    // Linear extrapolation beyond the table keeps the piecewise-linear
    // semantics instead of silently flattening the field.
    double operator()(double x) const {
        if (uniform_) return slope_ * x;
        std::size_t hi = 1;
        while (hi + 1 < x_.size() && x_[hi] < x) ++hi;
        const std::size_t lo = hi - 1;
        const double w = (x - x_[lo]) / (x_[hi] - x_[lo]);
        return phi_[lo] + w * (phi_[hi] - phi_[lo]);
    }

    std::span<const double> nodes() const { return x_; }

private:
    bool uniform_;
    double slope_ = 0.0;
    std::vector<double> x_, phi_;
};

struct Metric {
    enum class Kind { Minkowski, Rindler, WeakField };

    Kind kind = Kind::Minkowski;
    double g = 0.0; // Rindler proper acceleration at x = 0
    Potential phi;  // WeakField only

    static Metric minkowski() { return Metric{}; }

    static Metric rindler(double g) {
        if (!(g > 0.0))
            throw NonPositiveArgument("Rindler chart needs g > 0");
        Metric m;
        m.kind = Kind::Rindler;
        m.g = g;
        return m;
    }

    static Metric weak_field(Potential p) {
        Metric m;
        m.kind = Kind::WeakField;
        m.phi = std::move(p);
        if (m.phi.is_uniform()) m.g = m.phi.slope();
        return m;
    }

    static Metric uniform_weak_field(double g) {
        return weak_field(Potential::uniform(g));
    }
};

// A motion law inside one segment. free_fall is the coordinate parabola
// x0 + v0 dt - g dt^2 / 2 of the active chart; in the weak-field regime the
// post-Newtonian guard bounds how far that sits from a true geodesic.
struct Motion {
    enum class Kind { AtRest, UniformVelocity, FreeFall };

    Kind kind = Kind::AtRest;
    double x0 = 0.0;
    double v0 = 0.0;

    static Motion at_rest(double x) { return {Kind::AtRest, x, 0.0}; }
    static Motion uniform_velocity(double x0, double v) {
        return {Kind::UniformVelocity, x0, v};
    }
    static Motion free_fall(double x0, double v0) {
        return {Kind::FreeFall, x0, v0};
    }
};

struct Segment {
    double t_start = 0.0;
    double t_end = 0.0;
    Motion motion;
};

namespace detail {

// x(t) = x0 + v0 (t - t_ref) - a (t - t_ref)^2 / 2
struct Kinematics {
    double t_ref = 0.0;
    double x0 = 0.0;
    double v0 = 0.0;
    double a = 0.0;

    double position(double t) const {
        const double dt = t - t_ref;
        return x0 + dt * (v0 - 0.5 * a * dt);
    }
    double velocity(double t) const { return v0 - a * (t - t_ref); }
};

inline double chart_acceleration(const Metric& m) {
    switch (m.kind) {
    case Metric::Kind::Minkowski: return 0.0;
    case Metric::Kind::Rindler: return m.g;
    case Metric::Kind::WeakField:
        if (!m.phi.is_uniform())
            throw ValidationError(
                "free fall needs a uniform potential gradient in this chart");
        return m.phi.slope();
    }
    return 0.0;
}

inline Kinematics kinematics(const Segment& s, const Metric& m) {
    Kinematics k;
    k.t_ref = s.t_start;
    k.x0 = s.motion.x0;
    switch (s.motion.kind) {
    case Motion::Kind::AtRest:
        k.v0 = 0.0;
        k.a = 0.0;
        break;
    case Motion::Kind::UniformVelocity:
        k.v0 = s.motion.v0;
        k.a = 0.0;
        break;
    case Motion::Kind::FreeFall:
        k.v0 = s.motion.v0;
        k.a = chart_acceleration(m);
        break;
    }
    return k;
}

} // namespace detail

class WorldLine {
public:
    WorldLine() = default;

    WorldLine& append(Segment s) {
        segments_.push_back(s);
        return *this;
    }

    static WorldLine at_rest(double x, double t0, double t1) {
        WorldLine w;
        w.append({t0, t1, Motion::at_rest(x)});
        return w;
    }

    const std::vector<Segment>& segments() const { return segments_; }

    double t_start() const { return segments_.front().t_start; }
    double t_end() const { return segments_.back().t_end; }

    // Structural checks plus the chart-dependent ones (free-fall end
    // positions depend on the chart's acceleration).
    void validate(const Metric& m, const Constants& k) const {
        if (segments_.empty())
            throw ValidationError("world line has no segments");
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const Segment& s = segments_[i];
            if (!(s.t_end > s.t_start))
                throw NonContiguousWorldLine("segment spans must have positive length");
            const auto kin = detail::kinematics(s, m);
            // Local coordinate speed limit: c in flat and weak-field charts,
            // c (1 + g x / c^2) in the accelerated chart.
            for (double tp : {s.t_start, s.t_end}) {
                double limit = k.c;
                if (m.kind == Metric::Kind::Rindler)
                    limit = k.c * std::max(0.0, 1.0 + m.g * kin.position(tp) / k.c2());
                if (std::abs(kin.velocity(tp)) >= limit)
                    throw SuperluminalSegment("segment leaves the local light cone");
            }
            if (i + 1 < segments_.size()) {
                const Segment& n = segments_[i + 1];
                if (n.t_start != s.t_end)
                    throw NonContiguousWorldLine("segment times leave a gap or overlap");
                const double xe = kin.position(s.t_end);
                const double xs = n.motion.x0;
                if (std::abs(xs - xe) > 1e-9 * std::max(1.0, std::abs(xe)))
                    throw NonContiguousWorldLine("segment positions jump at a joint");
            }
        }
    }

    // Index of the segment whose span contains t; the first and last
    // segments extend beyond their declared span so that measurement cuts
    // landing marginally outside the domain stay well defined.
    std::size_t segment_index(double t) const {
        if (segments_.empty())
            throw ValidationError("world line has no segments");
        std::size_t i = 0;
        while (i + 1 < segments_.size() && t >= segments_[i].t_end) ++i;
        return i;
    }

    double position(double t, const Metric& m) const {
        const Segment& s = segments_[segment_index(t)];
        return detail::kinematics(s, m).position(t);
    }

    double velocity(double t, const Metric& m) const {
        const Segment& s = segments_[segment_index(t)];
        return detail::kinematics(s, m).velocity(t);
    }

private:
    std::vector<Segment> segments_;
};

struct ProperTime {
    double duration = 0.0; // t1 - t0
    double excess = 0.0;   // tau - duration
    bool pn_guard_tripped = false;

    double tau() const { return duration + excess; }
};

namespace detail {

inline constexpr double pn_guard_limit = 1e-3;

// Excess integrand at one instant: d tau / dt - 1.
inline double excess_rate(const Metric& m, const Kinematics& kin, double t,
                          const Constants& k) {
    const double beta = kin.velocity(t) / k.c;
    switch (m.kind) {
    case Metric::Kind::Minkowski: {
        const double arg = -beta * beta;
        if (arg <= -1.0) throw SuperluminalSegment("segment reaches |v| >= c");
        return num::sqrt1p_minus1(arg);
    }
    case Metric::Kind::WeakField:
        // Linearized lapse; its validity is what the PN guard watches.
        return m.phi(kin.position(t)) / k.c2() - 0.5 * beta * beta;
    case Metric::Kind::Rindler: {
        const double a = m.g * kin.position(t) / k.c2();
        const double arg = a * (2.0 + a) - beta * beta;
        if (arg <= -1.0)
            throw SuperluminalSegment("line leaves the local light cone of the chart");
        return num::sqrt1p_minus1(arg);
    }
    }
    return 0.0;
}

inline void check_pn(const Metric& m, const Kinematics& kin, double u, double v,
                     const Constants& k, bool& flag) {
    if (m.kind != Metric::Kind::WeakField || flag) return;
    double worst = std::max(std::abs(m.phi(kin.position(u))), std::abs(m.phi(kin.position(v))));
    if (kin.a != 0.0) {
        const double t_apex = kin.t_ref + kin.v0 / kin.a;
        if (t_apex > u && t_apex < v)
            worst = std::max(worst, std::abs(m.phi(kin.position(t_apex))));
    }
    if (worst / k.c2() >= pn_guard_limit) flag = true;
}

// Excess over [u, v] inside one segment. Closed forms where the integrand
// is polynomial in t, adaptive quadrature otherwise.
inline double span_excess(const Metric& m, const Segment& s, double u, double v,
                          const Constants& k, bool& pn_flag) {
    const Kinematics kin = kinematics(s, m);
    const double dt = v - u;
    if (dt == 0.0) return 0.0;

    const double bu = kin.velocity(u) / k.c;
    const double bv = kin.velocity(v) / k.c;
    if (std::abs(bu) >= 1.0 || std::abs(bv) >= 1.0)
        throw SuperluminalSegment("segment reaches |v| >= c");
    check_pn(m, kin, u, v, k, pn_flag);

    switch (m.kind) {
    case Metric::Kind::Minkowski: {
        if (kin.a == 0.0)
            return num::sqrt1p_minus1(-bu * bu) * dt;
        return num::adaptive_simpson(
            [&](double t) { return excess_rate(m, kin, t, k); }, u, v);
    }
    case Metric::Kind::WeakField: {
        if (kin.a == 0.0 && kin.v0 == 0.0)
            return (m.phi(kin.x0) / k.c2()) * dt;
        if (m.phi.is_uniform()) {
            // Phi(x(t)) is polynomial in t: integrate exactly.
            const double slope = m.phi.slope();
            const double du = u - kin.t_ref;
            const double dv = v - kin.t_ref;
            // int x dt over [u, v]
            const double ix = kin.x0 * dt + 0.5 * kin.v0 * (dv * dv - du * du) -
                              kin.a * (dv * dv * dv - du * du * du) / 6.0;
            // int v^2 dt over [u, v]
            const double iv2 =
                kin.v0 * kin.v0 * dt - kin.v0 * kin.a * (dv * dv - du * du) +
                kin.a * kin.a * (dv * dv * dv - du * du * du) / 3.0;
            return (slope * ix - 0.5 * iv2) / k.c2();
        }
        if (kin.a == 0.0) {
            // Straight path through a tabulated field: trapezoids between
            // node crossings are exact because Phi(x(t)) is piecewise linear.
            std::vector<double> cuts{u, v};
            for (double xn : m.phi.nodes()) {
                if (kin.v0 == 0.0) break;
                const double tc = kin.t_ref + (xn - kin.x0) / kin.v0;
                if (tc > u && tc < v) cuts.push_back(tc);
            }
            std::sort(cuts.begin(), cuts.end());
            num::CompensatedSum acc;
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                const double a0 = cuts[i], b0 = cuts[i + 1];
                const double mean_phi =
                    0.5 * (m.phi(kin.position(a0)) + m.phi(kin.position(b0)));
                acc.add((mean_phi / k.c2() - 0.5 * bu * bu) * (b0 - a0));
            }
            return acc.value();
        }
        return num::adaptive_simpson(
            [&](double t) { return excess_rate(m, kin, t, k); }, u, v);
    }
    case Metric::Kind::Rindler: {
        const double a0 = m.g * kin.x0 / k.c2();
        if (kin.a == 0.0 && kin.v0 == 0.0) {
            if (a0 <= -1.0)
                throw OutsideRindlerWedge("static point sits behind the horizon");
            return a0 * dt; // exact: sqrt((1 + a)^2) - 1
        }
        return num::adaptive_simpson(
            [&](double t) { return excess_rate(m, kin, t, k); }, u, v);
    }
    }
    return 0.0;
}

} // namespace detail

// Proper time along `line` between coordinate times t0 and t1.
inline ProperTime proper_time(const Metric& m, const WorldLine& line, double t0,
                              double t1, const Constants& k) {
    if (!(t1 >= t0))
        throw ValidationError("proper_time needs t1 >= t0");
    line.validate(m, k);

    ProperTime out;
    out.duration = t1 - t0;
    num::CompensatedSum acc;
    const auto& segs = line.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const double lo = (i == 0) ? t0 : std::max(t0, segs[i].t_start);
        const double hi = (i + 1 == segs.size()) ? t1 : std::min(t1, segs[i].t_end);
        if (hi > lo)
            acc.add(detail::span_excess(m, segs[i], lo, hi, k, out.pn_guard_tripped));
    }
    out.excess = acc.value();
    return out;
}

// --- chart transforms -------------------------------------------------

struct MinkowskiEvent {
    double X = 0.0;
    double T = 0.0;
};

struct RindlerEvent {
    double x = 0.0;
    double t = 0.0;
};

inline MinkowskiEvent rindler_to_minkowski(const RindlerEvent& e, double g,
                                           const Constants& k) {
    if (!(g > 0.0))
        throw NonPositiveArgument("rindler_to_minkowski needs g > 0");
    const double R = k.c2() / g;
    if (e.x <= -R)
        throw OutsideRindlerWedge("event sits on or behind the horizon");
    const double theta = g * e.t / k.c;
    MinkowskiEvent out;
    // X = x cosh(theta) + R (cosh(theta) - 1), kept in this split form so the
    // R-sized term never swallows x.
    out.X = e.x * std::cosh(theta) + R * num::cosh_minus_one(theta);
    out.T = (e.x + R) / k.c * std::sinh(theta);
    return out;
}

inline RindlerEvent minkowski_to_rindler(const MinkowskiEvent& e, double g,
                                         const Constants& k) {
    if (!(g > 0.0))
        throw NonPositiveArgument("minkowski_to_rindler needs g > 0");
    const double R = k.c2() / g;
    const double cT = k.c * e.T;
    if (!(e.X + R > std::abs(cT)))
        throw OutsideRindlerWedge("event lies outside the right Rindler wedge");
    const double S = (e.X + R - cT) * (e.X + R + cT); // (X + R)^2 - (cT)^2
    RindlerEvent out;
    // x = sqrt(S) - R without cancellation: multiply through by sqrt(S) + R.
    out.x = (e.X * (e.X + 2.0 * R) - cT * cT) / (std::sqrt(S) + R);
    out.t = k.c / g * std::atanh(cT / (e.X + R));
    return out;
}

// --- closed forms ------------------------------------------------------

// Two branches dropped from heights Delta x apart, read out at lab time t_f:
// Delta tau = (Delta x / c) tanh(g t_f / c).
inline double delta_tau_freefall_in_rindler(double delta_x, double t_f, double g,
                                            const Constants& k) {
    if (!(g > 0.0))
        throw NonPositiveArgument("delta_tau_freefall_in_rindler needs g > 0");
    if (t_f < 0.0)
        throw ValidationError("delta_tau_freefall_in_rindler needs t_f >= 0");
    return delta_x / k.c * std::tanh(g * t_f / k.c);
}

// Two branches held at fixed heights Delta x apart for duration t.
inline double delta_tau_fixed_heights(double delta_x, double t, double g,
                                      const Constants& k) {
    if (!(g > 0.0))
        throw NonPositiveArgument("delta_tau_fixed_heights needs g > 0");
    if (std::abs(g * delta_x) / k.c2() >= detail::pn_guard_limit)
        throw PostNewtonianGuardTripped(
            "g dx / c^2 too large for the fixed-height closed form");
    return ((g * delta_x) / k.c2()) * t;
}

// --- two-branch readout ------------------------------------------------

enum class MeasurementFrame { LabRindler, FreeFallMinkowski };

struct BranchPair {
    WorldLine branch_a;
    WorldLine branch_b;
    MeasurementFrame frame = MeasurementFrame::LabRindler;
    double t_final = 0.0;
    // Acceleration of the lab chart relative to the coordinates the branches
    // are written in; needed only when the readout frame is not the native
    // frame of the metric.
    double frame_g = 0.0;
};

struct BranchDeltaTau {
    double delta_tau = 0.0; // tau_b - tau_a, cancellation-free
    double tau_a = 0.0;
    double tau_b = 0.0;
    bool pn_guard_tripped = false;
};

namespace detail {

inline MeasurementFrame native_frame(const Metric& m) {
    return m.kind == Metric::Kind::Minkowski ? MeasurementFrame::FreeFallMinkowski
                                             : MeasurementFrame::LabRindler;
}

// Offset delta such that the readout surface (simultaneity of the chosen
// frame at its time t_final) crosses this world line at coordinate time
// t_final + delta. Closed forms only: delta is a frame effect 8+ orders of
// magnitude below t_final in SI scenarios, so it must never be produced by
// subtracting two coordinate times.
inline double cut_shift(const Metric& m, const WorldLine& line,
                        MeasurementFrame frame, double t_final, double frame_g,
                        const Constants& k) {
    if (frame == native_frame(m)) return 0.0;

    if (m.kind == Metric::Kind::Minkowski) {
        // Branches in inertial coordinates, readout at lab (Rindler) time.
        if (!(frame_g > 0.0))
            throw NonPositiveArgument(
                "readout at lab time from inertial coordinates needs frame_g > 0");
        const double g = frame_g;
        const double R = k.c2() / g;
        const double theta = g * t_final / k.c;
        const double th = std::tanh(theta);
        double t_cut = t_final;
        for (int pass = 0; pass < 4; ++pass) {
            const Segment& s = line.segments()[line.segment_index(t_cut)];
            const auto kin = kinematics(s, m);
            if (kin.a != 0.0)
                throw ValidationError(
                    "lab-time readout supports straight inertial segments only");
            const double V = kin.v0;
            const double X_at0 = kin.position(t_final) - V * t_final;
            const double delta =
                (X_at0 * th + t_final * V * th + R * num::tanh_minus_identity(theta)) /
                (k.c - V * th);
            const double t_new = t_final + delta;
            const MinkowskiEvent cut_ev{line.position(t_new, m), t_new};
            if (!(cut_ev.X + R > std::abs(k.c * cut_ev.T)))
                throw OutsideRindlerWedge("readout surface meets the branch outside the wedge");
            if (line.segment_index(t_new) == line.segment_index(t_cut))
                return delta;
            t_cut = t_new;
        }
        throw ValidationError("readout surface does not settle on one segment");
    }

    // Branches in an accelerated chart, readout at inertial (free-fall) time.
    const double g = (m.kind == Metric::Kind::Rindler)
                         ? m.g
                         : (m.phi.is_uniform()
                                ? m.phi.slope()
                                : throw ValidationError(
                                      "free-fall readout needs a uniform potential"));
    if (!(g > 0.0))
        throw NonPositiveArgument("free-fall readout needs g > 0");
    const double theta = g * t_final / k.c;
    double t_cut = t_final;
    for (int pass = 0; pass < 4; ++pass) {
        const Segment& s = line.segments()[line.segment_index(t_cut)];
        if (s.motion.kind != Motion::Kind::AtRest)
            throw ValidationError(
                "free-fall readout supports branches at rest in the lab chart only");
        const double a = g * s.motion.x0 / k.c2();
        if (a <= -1.0)
            throw OutsideRindlerWedge("branch sits behind the horizon");
        const double w = theta / (1.0 + a);
        const double delta =
            k.c / g * (num::asinh_minus_identity(w) - theta * a / (1.0 + a));
        const double t_new = t_final + delta;
        if (line.segment_index(t_new) == line.segment_index(t_cut))
            return delta;
        t_cut = t_new;
    }
    throw ValidationError("readout surface does not settle on one segment");
}

} // namespace detail

// Proper-time difference tau_b - tau_a between the two branches, both read
// out on the simultaneity surface t = t_final of the chosen frame.
inline BranchDeltaTau delta_tau(const Metric& m, const BranchPair& pair,
                                const Constants& k) {
    pair.branch_a.validate(m, k);
    pair.branch_b.validate(m, k);
    if (!(pair.t_final >= 0.0))
        throw ValidationError("delta_tau needs t_final >= 0");

    const double da =
        detail::cut_shift(m, pair.branch_a, pair.frame, pair.t_final, pair.frame_g, k);
    const double db =
        detail::cut_shift(m, pair.branch_b, pair.frame, pair.t_final, pair.frame_g, k);
    const ProperTime pa = proper_time(m, pair.branch_a, 0.0, pair.t_final + da, k);
    const ProperTime pb = proper_time(m, pair.branch_b, 0.0, pair.t_final + db, k);

    BranchDeltaTau out;
    // tau_i = t_final + (delta_i + excess_i); the t_final part is common, so
    // the difference of the two small remainders is the whole answer.
    out.delta_tau = (db - da) + (pb.excess - pa.excess);
    out.tau_a = pa.tau() + da;
    out.tau_b = pb.tau() + db;
    out.pn_guard_tripped = pa.pn_guard_tripped || pb.pn_guard_tripped;
    return out;
}

} // namespace qclock::geometry
