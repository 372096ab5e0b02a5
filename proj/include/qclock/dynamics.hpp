#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qclock/constants.hpp"
#include "qclock/errors.hpp"
#include "qclock/internal.hpp"
#include "qclock/numeric.hpp"

// Joint (path x internal) states and their dynamics. The center of mass is
// a discrete branch label here: each branch carries a potential, momentum,
// position and external energy offset, and the internal clock ticks at a
// branch-dependent rate 1 + kappa_b.

namespace qclock::dynamics {

struct BranchCoupling {
    double phi = 0.0;   // potential at the branch, J/kg
    double p = 0.0;     // center-of-mass momentum, kg m/s
    double x = 0.0;     // position, m (position-coupled baths use this)
    double h_ext = 0.0; // external energy offset, J
};

struct HamiltonianSpec {
    double mass = 1.0; // kg
    internal::InternalSpectrum spectrum;
    std::vector<BranchCoupling> branches;

    // Redshift factor that scales the internal Hamiltonian on branch b.
    double kappa(std::size_t b, const Constants& k) const {
        const BranchCoupling& c = branches[b];
        return c.phi / k.c2() - c.p * c.p / (2.0 * mass * mass * k.c2());
    }
};

inline constexpr std::size_t exact_level_cap = 4096;

struct JointState {
    Eigen::MatrixXcd rho; // (branches * levels)^2, row index r = b * levels + i
    std::size_t branches = 0;
    std::size_t levels = 0;
    double time = 0.0;

    std::size_t dim() const { return branches * levels; }

    // Cheap structural checks. Positivity needs an eigendecomposition and is
    // left to validate_full so the hot path stays O(dim^2).
    void validate() const {
        if (branches < 1 || levels < 1 ||
            rho.rows() != static_cast<Eigen::Index>(dim()) ||
            rho.cols() != static_cast<Eigen::Index>(dim()))
            throw DimensionMismatch("joint state dimensions do not match its matrix");
        double herm = 0.0;
        for (Eigen::Index r = 0; r < rho.rows(); ++r)
            for (Eigen::Index c = r; c < rho.cols(); ++c)
                herm = std::max(herm, std::abs(rho(r, c) - std::conj(rho(c, r))));
        if (herm > 1e-12)
            throw ValidationError("joint state is not Hermitian within 1e-12");
        if (std::abs(rho.trace() - std::complex<double>(1.0, 0.0)) > 1e-12)
            throw ValidationError("joint state trace differs from 1 beyond 1e-12");
    }

    void validate_full() const {
        validate();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw ValidationError("joint state has an eigenvalue below -1e-10");
    }
};

// Branch superposition rho_path = a a^dagger tensored with the diagonal
// internal state given by the spectrum populations.
inline JointState initial_superposition(const std::vector<std::complex<double>>& amps,
                                        const internal::InternalSpectrum& s) {
    if (amps.size() < 2)
        throw ValidationError("superposition needs at least two branches");
    double norm = 0.0;
    for (const auto& a : amps) norm += std::norm(a);
    if (std::abs(norm - 1.0) > 1e-12)
        throw ValidationError("branch amplitudes must be normalized within 1e-12");
    JointState st;
    st.branches = amps.size();
    st.levels = s.size();
    st.rho = Eigen::MatrixXcd::Zero(st.dim(), st.dim());
    for (std::size_t b = 0; b < st.branches; ++b)
        for (std::size_t c = 0; c < st.branches; ++c)
            for (std::size_t i = 0; i < st.levels; ++i)
                st.rho(b * st.levels + i, c * st.levels + i) =
                    amps[b] * std::conj(amps[c]) * s.population(i);
    return st;
}

// Unitary evolution for duration t under the branch-diagonal Hamiltonian
// E(b, i) = h_ext_b + E_i (1 + kappa_b). The phase of each matrix element is
// assembled from a per-level factor (common to all branches) and a
// branch-relative factor h_ext_b - h_ext_0 + E_i (kappa_b - kappa_0); the
// common factor cancels exactly in same-level cross-branch elements, which
// is where the 1e-16-scale physics lives.
inline JointState evolve_exact(const HamiltonianSpec& spec, const JointState& st0,
                               double t, const Constants& k) {
    if (spec.branches.size() != st0.branches || spec.spectrum.size() != st0.levels)
        throw DimensionMismatch("hamiltonian and state disagree on dimensions");
    if (st0.levels > exact_level_cap)
        throw ValidationError("exact evolution is capped at 4096 internal levels");

    const std::size_t B = st0.branches;
    const std::size_t L = st0.levels;
    const double inv_cycle = t / (num::two_pi * k.hbar);
    const double kappa0 = spec.kappa(0, k);
    const double h0 = spec.branches[0].h_ext;

    std::vector<std::complex<double>> u(B * L);
    for (std::size_t i = 0; i < L; ++i) {
        const double e = spec.spectrum.energy(i);
        const auto common =
            num::unit_phasor_neg((e * (1.0 + kappa0) + h0) * inv_cycle);
        for (std::size_t b = 0; b < B; ++b) {
            const double rel =
                (spec.branches[b].h_ext - h0) + e * (spec.kappa(b, k) - kappa0);
            u[b * L + i] = common * num::unit_phasor_neg(rel * inv_cycle);
        }
    }

    JointState out = st0;
    out.time = st0.time + t;
    for (std::size_t r = 0; r < B * L; ++r)
        for (std::size_t c = 0; c < B * L; ++c)
            out.rho(r, c) = u[r] * std::conj(u[c]) * st0.rho(r, c);
    return out;
}

// Reduced branch-space state: trace over the internal index.
inline Eigen::MatrixXcd trace_out_internal(const JointState& st) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(st.branches, st.branches);
    for (std::size_t b = 0; b < st.branches; ++b)
        for (std::size_t c = 0; c < st.branches; ++c) {
            num::CompensatedSum re, im;
            for (std::size_t i = 0; i < st.levels; ++i) {
                const auto z = st.rho(b * st.levels + i, c * st.levels + i);
                re.add(z.real());
                im.add(z.imag());
            }
            out(b, c) = {re.value(), im.value()};
        }
    return out;
}

// --- second-order (Born) master equation --------------------------------

struct BathModel {
    enum class Kind { TimeDilation, QuantumBrownian };

    Kind kind = Kind::TimeDilation;
    double variance = 0.0; // (delta H0)^2, J^2; TimeDilation kernel height
    double mass = 0.0;     // kg        } QuantumBrownian
    double gamma = 0.0;    // 1/s       }
    double temperature = 0.0; // K      }

    static BathModel time_dilation(double delta_h0) {
        if (!(delta_h0 > 0.0))
            throw NonPositiveArgument("time_dilation bath needs delta_h0 > 0");
        BathModel b;
        b.kind = Kind::TimeDilation;
        b.variance = delta_h0 * delta_h0;
        return b;
    }

    static BathModel quantum_brownian(double mass, double gamma, double temperature) {
        if (!(mass > 0.0) || !(gamma > 0.0) || !(temperature > 0.0))
            throw NonPositiveArgument("quantum_brownian bath needs positive parameters");
        BathModel b;
        b.kind = Kind::QuantumBrownian;
        b.mass = mass;
        b.gamma = gamma;
        b.temperature = temperature;
        return b;
    }
};

struct ReducedTrajectory {
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> states;
    bool step_size_too_coarse = false;
    double halving_delta = 0.0; // max element change when run at half resolution
};

namespace detail {

// Per-element decay weights lambda_bc. Both baths couple through an operator
// diagonal in the branch basis, so the double commutator acts elementwise:
// [S, [S, rho]]_bc = (S_b - S_c)^2 rho_bc.
inline Eigen::MatrixXd coupling_weights(const BathModel& bath,
                                        const HamiltonianSpec& spec,
                                        const Constants& k) {
    const std::size_t B = spec.branches.size();
    Eigen::MatrixXd w(B, B);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < B; ++c) {
            double s;
            if (bath.kind == BathModel::Kind::TimeDilation)
                s = spec.kappa(b, k) - spec.kappa(c, k);
            else
                s = spec.branches[b].x - spec.branches[c].x;
            w(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)) = s * s;
        }
    return w;
}

inline std::vector<Eigen::MatrixXcd> born_grid(const BathModel& bath,
                                               const HamiltonianSpec& spec,
                                               const Eigen::MatrixXcd& rho0,
                                               double t_end, std::size_t n_steps,
                                               const Constants& k) {
    const Eigen::MatrixXd w = coupling_weights(bath, spec, k);
    const double h = t_end / static_cast<double>(n_steps);

    std::vector<Eigen::MatrixXcd> rho;
    rho.reserve(n_steps + 1);
    rho.push_back(rho0);

    if (bath.kind == BathModel::Kind::QuantumBrownian) {
        // Delta-correlated kernel: the memory integral collapses on the spot
        // (half weight at the boundary) and leaves a local generator.
        const double rate = 2.0 * bath.mass * bath.gamma * k.k_B * bath.temperature /
                            (k.hbar * k.hbar);
        const Eigen::MatrixXd gam = rate * w;
        auto f = [&](const Eigen::MatrixXcd& r) {
            return (-gam.array() * r.array()).matrix().eval();
        };
        for (std::size_t j = 0; j < n_steps; ++j) {
            const Eigen::MatrixXcd f0 = f(rho.back());
            const Eigen::MatrixXcd pred = rho.back() + h * f0;
            rho.push_back(rho.back() + 0.5 * h * (f0 + f(pred)));
        }
        return rho;
    }

    // Flat kernel C(t, t') = variance: the full history enters,
    // rho'(t) = -(variance / hbar^2) W o Int_0^t rho(t') dt',
    // integrated with a Heun step over a trapezoidal running memory.
    const double lam = bath.variance / (k.hbar * k.hbar);
    Eigen::MatrixXcd memory = Eigen::MatrixXcd::Zero(rho0.rows(), rho0.cols());
    auto deriv = [&](const Eigen::MatrixXcd& mem) {
        return (-lam * w.array() * mem.array()).matrix().eval();
    };
    for (std::size_t j = 0; j < n_steps; ++j) {
        const Eigen::MatrixXcd f0 = deriv(memory);
        const Eigen::MatrixXcd pred = rho.back() + h * f0;
        const Eigen::MatrixXcd mem_pred = memory + 0.5 * h * (rho.back() + pred);
        const Eigen::MatrixXcd f1 = deriv(mem_pred);
        const Eigen::MatrixXcd next = rho.back() + 0.5 * h * (f0 + f1);
        memory += 0.5 * h * (rho.back() + next);
        rho.push_back(next);
    }
    return rho;
}

} // namespace detail

// Integrate the second-order master equation with the chosen bath from the
// reduced branch state rho0 over [0, t_end]. A second pass at half the
// resolution estimates the discretization error; a visible gap is reported,
// not thrown, so the caller still gets the trajectory it asked for.
inline ReducedTrajectory evolve_master_born(const BathModel& bath,
                                            const HamiltonianSpec& spec,
                                            const Eigen::MatrixXcd& rho0,
                                            double t_end, std::size_t n_steps,
                                            const Constants& k) {
    const std::size_t B = spec.branches.size();
    if (rho0.rows() != static_cast<Eigen::Index>(B) ||
        rho0.cols() != static_cast<Eigen::Index>(B))
        throw DimensionMismatch("reduced state must be branches x branches");
    if (!(t_end > 0.0))
        throw ValidationError("evolve_master_born needs t_end > 0");
    if (n_steps < 16 || n_steps % 2 != 0)
        throw ValidationError("evolve_master_born needs an even n_steps >= 16");
    if (n_steps > 10000000)
        throw ValidationError("n_steps above 1e7");

    if (bath.kind == BathModel::Kind::TimeDilation) {
        // The Born closure turns strong dephasing into a spurious
        // oscillation; refuse to integrate past its first zero crossing.
        const Eigen::MatrixXd w = detail::coupling_weights(bath, spec, k);
        const double s_max =
            std::sqrt(bath.variance * w.maxCoeff()) * t_end / k.hbar;
        if (s_max > num::pi)
            throw GuardTripped(
                "flat-kernel coupling drives the Born closure past validity");
    }

    const auto fine = detail::born_grid(bath, spec, rho0, t_end, n_steps, k);
    const auto coarse = detail::born_grid(bath, spec, rho0, t_end, n_steps / 2, k);

    ReducedTrajectory out;
    out.times.resize(n_steps + 1);
    const double h = t_end / static_cast<double>(n_steps);
    for (std::size_t j = 0; j <= n_steps; ++j)
        out.times[j] = static_cast<double>(j) * h;
    out.states = fine;
    out.halving_delta = (fine.back() - coarse.back()).cwiseAbs().maxCoeff();
    out.step_size_too_coarse = out.halving_delta > 1e-6;
    return out;
}

// --- dispersion, phases, equivalence ------------------------------------

// Contravariant metric components in the (ct, x) block.
struct InverseMetric {
    double g00 = -1.0;
    double g01 = 0.0;
    double g11 = 1.0;
};

inline InverseMetric inverse_metric_weak_field(double phi, const Constants& k) {
    return {-1.0 / (1.0 + 2.0 * phi / k.c2()), 0.0, 1.0};
}

// Positive-energy root H = c p0 of
// g00 p0^2 + 2 g01 p0 p + g11 p^2 = -(m c + H0 / c)^2.
inline double solve_dispersion(const InverseMetric& gm, double p, double m,
                               double internal_energy, const Constants& k) {
    if (!(gm.g00 < 0.0))
        throw WrongSignature("g00 must be negative for a timelike momentum");
    if (!(m > 0.0))
        throw NonPositiveArgument("solve_dispersion needs m > 0");
    const double Mc = m * k.c + internal_energy / k.c;
    const double a = gm.g00;
    const double b = 2.0 * gm.g01 * p;
    const double c0 = gm.g11 * p * p + Mc * Mc;
    const double disc = b * b - 4.0 * a * c0;
    if (disc < 0.0)
        throw NoRealRoot("dispersion relation has no real root");
    const double root = (-b - std::sqrt(disc)) / (2.0 * a);
    if (!(root > 0.0))
        throw NoRealRoot("dispersion relation has no positive-energy root");
    return k.c * root;
}

// Galilei-group bookkeeping for one plane-wave component.
struct PlaneWave {
    double mass = 0.0;
    double momentum = 0.0;
    double phase = 0.0;
};

inline void boost(PlaneWave& w, double v) { w.momentum -= w.mass * v; }

inline void translate(PlaneWave& w, double a, const Constants& k) {
    w.phase -= w.momentum * a / k.hbar;
}

// Phase separating two mass components after boost(v), translate(a),
// boost(-v), translate(-a): the commutator leaves v a (m1 - m2) / hbar.
// Composed operation by operation; the closed form exists only to test this.
inline double bargmann_phase(double m1, double m2, double v, double a,
                             const Constants& k) {
    PlaneWave w1{m1, 0.0, 0.0}, w2{m2, 0.0, 0.0};
    for (PlaneWave* w : {&w1, &w2}) {
        boost(*w, v);
        translate(*w, a, k);
        boost(*w, -v);
        translate(*w, -a, k);
        if (w->momentum != 0.0)
            throw ValidationError("loop failed to restore the momentum");
    }
    return num::wrap_angle(w1.phase - w2.phase);
}

struct EquivalenceMasses {
    double weight_mass = 0.0;   // dH/dPhi at Phi = 0, p = 0
    double inertial_mass = 0.0; // 1 / (d^2 H / dp^2) at p = 0, flat space
};

// Both derivatives must land on m + H0/c^2: internal energy gravitates and
// resists acceleration equally. Central differences on the dispersion root.
inline EquivalenceMasses equivalence_check(double m, double internal_energy,
                                           const Constants& k) {
    if (!(m > 0.0))
        throw NonPositiveArgument("equivalence_check needs m > 0");
    const double M = m + internal_energy / k.c2();
    EquivalenceMasses out;

    const double d_phi = 1e-4 * k.c2();
    const double h_plus = solve_dispersion(inverse_metric_weak_field(d_phi, k), 0.0,
                                           m, internal_energy, k);
    const double h_minus = solve_dispersion(inverse_metric_weak_field(-d_phi, k), 0.0,
                                            m, internal_energy, k);
    out.weight_mass = (h_plus - h_minus) / (2.0 * d_phi);

    const InverseMetric flat;
    const double d_p = 1e-3 * M * k.c;
    const double h0 = solve_dispersion(flat, 0.0, m, internal_energy, k);
    const double hp = solve_dispersion(flat, d_p, m, internal_energy, k);
    const double hm = solve_dispersion(flat, -d_p, m, internal_energy, k);
    out.inertial_mass = d_p * d_p / (hp - 2.0 * h0 + hm);
    return out;
}

} // namespace qclock::dynamics
