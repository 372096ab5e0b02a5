#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qclock/constants.hpp"
#include "qclock/errors.hpp"
#include "qclock/numeric.hpp"

// Internal energy spectra: the clock degree of freedom. A spectrum is a
// finite list of (energy, population) pairs; populations are the diagonal of
// the internal density matrix in the energy basis, which is all the
// dephasing formulas ever need.

namespace qclock::internal {

struct Level {
    double energy = 0.0;     // J
    double population = 0.0; // dimensionless, simplex
};

class InternalSpectrum {
public:
    InternalSpectrum(std::vector<Level> levels, std::string label)
        : levels_(std::move(levels)), label_(std::move(label)) {
        if (levels_.empty())
            throw ValidationError("spectrum needs at least one level");
        num::CompensatedSum sum;
        for (auto& l : levels_) {
            if (!std::isfinite(l.energy) || !std::isfinite(l.population))
                throw ValidationError("spectrum entries must be finite");
            if (l.population < -1e-15)
                throw InvalidPopulation("negative population");
            if (l.population < 0.0) l.population = 0.0;
            sum.add(l.population);
        }
        if (std::abs(sum.value() - 1.0) > 1e-12)
            throw InvalidPopulation("populations must sum to 1 within 1e-12");
        std::stable_sort(levels_.begin(), levels_.end(),
                         [](const Level& a, const Level& b) { return a.energy < b.energy; });
        // Collapse bit-identical energies; they are one level physically.
        std::vector<Level> merged;
        merged.reserve(levels_.size());
        for (const auto& l : levels_) {
            if (!merged.empty() && merged.back().energy == l.energy)
                merged.back().population += l.population;
            else
                merged.push_back(l);
        }
        levels_ = std::move(merged);
    }

    std::size_t size() const { return levels_.size(); }
    double energy(std::size_t i) const { return levels_[i].energy; }
    double population(std::size_t i) const { return levels_[i].population; }
    const std::vector<Level>& levels() const { return levels_; }
    const std::string& label() const { return label_; }

    double mean_energy() const {
        num::CompensatedSum acc;
        for (const auto& l : levels_) acc.add(l.population * l.energy);
        return acc.value();
    }

    // True when the energies form an arithmetic ladder E0 + i * step.
    bool is_ladder(double* step_out = nullptr) const {
        if (levels_.size() == 1) {
            if (step_out) *step_out = 0.0;
            return true;
        }
        const double step = (levels_.back().energy - levels_.front().energy) /
                            static_cast<double>(levels_.size() - 1);
        if (!(step > 0.0)) return false;
        for (std::size_t i = 0; i < levels_.size(); ++i) {
            const double want = levels_.front().energy + static_cast<double>(i) * step;
            if (std::abs(levels_[i].energy - want) > 1e-9 * step) return false;
        }
        if (step_out) *step_out = step;
        return true;
    }

private:
    std::vector<Level> levels_;
    std::string label_;
};

// Two levels split by hbar * omega with excited-state weight p_excited.
inline InternalSpectrum two_level(double omega, double p_excited, const Constants& k) {
    if (!(omega > 0.0))
        throw NonPositiveArgument("two_level needs omega > 0");
    if (!(p_excited >= 0.0 && p_excited <= 1.0))
        throw InvalidPopulation("p_excited must lie in [0, 1]");
    return InternalSpectrum({{0.0, 1.0 - p_excited}, {k.hbar * omega, p_excited}},
                            "two_level");
}

// One harmonic mode in a thermal state, truncated at n_max quanta. The
// discarded Boltzmann tail must stay below 1e-10.
inline InternalSpectrum truncated_thermal_mode(double omega, double temperature,
                                               std::size_t n_max, const Constants& k) {
    if (!(omega > 0.0))
        throw NonPositiveArgument("truncated_thermal_mode needs omega > 0");
    if (!(temperature > 0.0))
        throw NonPositiveArgument("truncated_thermal_mode needs temperature > 0");
    if (n_max < 1)
        throw ValidationError("truncated_thermal_mode needs n_max >= 1");
    const double q = std::exp(-k.hbar * omega / (k.k_B * temperature));
    const double tail = std::pow(q, static_cast<double>(n_max + 1));
    if (tail > 1e-10)
        throw TruncationTooSevere("thermal tail above 1e-10; raise n_max");
    std::vector<Level> levels(n_max + 1);
    num::CompensatedSum norm;
    double w = 1.0;
    for (std::size_t n = 0; n <= n_max; ++n) {
        levels[n].energy = k.hbar * omega * static_cast<double>(n);
        levels[n].population = w;
        norm.add(w);
        w *= q;
    }
    const double inv = 1.0 / norm.value();
    for (auto& l : levels) l.population *= inv;
    return InternalSpectrum(std::move(levels), "thermal_mode");
}

// Spectrum of two independent subsystems: energies add, populations multiply.
// Commensurate ladders (equal step) go through an index-space convolution;
// anything else materializes the full product, which is capped.
inline InternalSpectrum tensor_product(const InternalSpectrum& a,
                                       const InternalSpectrum& b,
                                       std::size_t level_cap = 200000) {
    double step_a = 0.0, step_b = 0.0;
    const bool ladders = a.is_ladder(&step_a) && b.is_ladder(&step_b);
    const bool commensurate =
        ladders && (step_a == 0.0 || step_b == 0.0 ||
                    std::abs(step_a - step_b) <= 1e-12 * std::max(step_a, step_b));
    if (commensurate) {
        const double step = std::max(step_a, step_b);
        const std::size_t n_out = a.size() + b.size() - 1;
        if (n_out > level_cap)
            throw LevelCapExceeded("tensor product exceeds the level cap");
        const double base = a.energy(0) + b.energy(0);
        std::vector<Level> out(n_out);
        for (std::size_t m = 0; m < n_out; ++m)
            out[m].energy = base + static_cast<double>(m) * step;
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                out[i + j].population += a.population(i) * b.population(j);
        return InternalSpectrum(std::move(out), "tensor_product");
    }

    if (a.size() > level_cap / std::max<std::size_t>(b.size(), 1))
        throw LevelCapExceeded("tensor product exceeds the level cap");
    std::vector<Level> pairs;
    pairs.reserve(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            pairs.push_back({a.energy(i) + b.energy(j), a.population(i) * b.population(j)});
    std::sort(pairs.begin(), pairs.end(),
              [](const Level& l, const Level& r) { return l.energy < r.energy; });
    // Merge levels that are equal to within rounding of the energy sums.
    std::vector<Level> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (!out.empty() &&
            p.energy - out.back().energy <=
                1e-12 * std::max(std::abs(p.energy), std::abs(out.back().energy))) {
            const double w = out.back().population + p.population;
            if (w > 0.0)
                out.back().energy =
                    (out.back().energy * out.back().population + p.energy * p.population) / w;
            out.back().population = w;
        } else {
            out.push_back(p);
        }
    }
    if (out.size() > level_cap)
        throw LevelCapExceeded("tensor product exceeds the level cap");
    return InternalSpectrum(std::move(out), "tensor_product");
}

// Variance of the internal energy, two-pass for stability.
inline double energy_variance(const InternalSpectrum& s) {
    const double mean = s.mean_energy();
    num::CompensatedSum acc;
    for (const auto& l : s.levels()) {
        const double d = l.energy - mean;
        acc.add(l.population * d * d);
    }
    return acc.value();
}

struct EinsteinSolid {
    std::size_t n_constituents = 1;
    double omega = 0.0;       // rad/s, shared mode frequency
    double temperature = 0.0; // K
};

// Root of the internal-energy variance of an Einstein solid: 3N identical
// modes, each contributing (hbar w / 2 sinh(hbar w / 2 kT))^2. Approaches
// the high-temperature value sqrt(3N) k_B T from below.
inline double einstein_delta_h0(const EinsteinSolid& solid, const Constants& k) {
    if (solid.n_constituents < 1)
        throw ValidationError("einstein solid needs at least one constituent");
    if (!(solid.omega > 0.0))
        throw NonPositiveArgument("einstein solid needs omega > 0");
    if (!(solid.temperature > 0.0))
        throw NonPositiveArgument("einstein solid needs temperature > 0");
    const double x = k.hbar * solid.omega / (k.k_B * solid.temperature);
    const double per_mode = k.hbar * solid.omega / (2.0 * std::sinh(0.5 * x));
    return std::sqrt(3.0 * static_cast<double>(solid.n_constituents)) * per_mode;
}

// Full thermal spectrum of the 3N-mode solid over total quanta n. The count
// distribution is negative binomial; computed in log space so large mode
// counts cannot underflow the recurrence.
inline InternalSpectrum einstein_spectrum(const EinsteinSolid& solid,
                                          std::size_t n_max, const Constants& k,
                                          std::size_t level_cap = 200000) {
    if (solid.n_constituents < 1)
        throw ValidationError("einstein solid needs at least one constituent");
    if (!(solid.omega > 0.0))
        throw NonPositiveArgument("einstein solid needs omega > 0");
    if (!(solid.temperature > 0.0))
        throw NonPositiveArgument("einstein solid needs temperature > 0");
    if (n_max + 1 > level_cap)
        throw LevelCapExceeded("einstein spectrum exceeds the level cap");
    const double K = 3.0 * static_cast<double>(solid.n_constituents);
    const double x = k.hbar * solid.omega / (k.k_B * solid.temperature);
    const double log_q = -x;
    // log p_n = log C(n + K - 1, n) + K log(1 - q) + n log q, up to the
    // normalization restored below.
    std::vector<double> logp(n_max + 1);
    double log_max = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n <= n_max; ++n) {
        const double nn = static_cast<double>(n);
        logp[n] = std::lgamma(nn + K) - std::lgamma(nn + 1.0) - std::lgamma(K) +
                  nn * log_q;
        log_max = std::max(log_max, logp[n]);
    }
    std::vector<Level> levels(n_max + 1);
    num::CompensatedSum norm;
    for (std::size_t n = 0; n <= n_max; ++n) {
        levels[n].energy = k.hbar * solid.omega * static_cast<double>(n);
        levels[n].population = std::exp(logp[n] - log_max);
        norm.add(levels[n].population);
    }
    // Captured weight of the untruncated distribution; the discarded tail
    // must stay below 1e-10 like every other truncation here.
    const double log_one_minus_q = (x > 1e-4) ? std::log1p(-std::exp(-x))
                                              : std::log(-std::expm1(-x));
    const double captured = norm.value() * std::exp(log_max + K * log_one_minus_q);
    if (captured < 1.0 - 1e-10)
        throw TruncationTooSevere("einstein spectrum tail above 1e-10; raise n_max");
    const double inv = 1.0 / norm.value();
    for (auto& l : levels) l.population *= inv;
    return InternalSpectrum(std::move(levels), "einstein_solid");
}

// --- import/export -----------------------------------------------------

// Two columns, energy in J then population; '#' starts a comment.
inline void write_spectrum_table(std::ostream& os, const InternalSpectrum& s) {
    os << "# energy_J population\n";
    char buf[64];
    for (const auto& l : s.levels()) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", l.energy, l.population);
        os << buf;
    }
}

inline void write_spectrum_table(const std::string& path, const InternalSpectrum& s) {
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open spectrum table for writing: " + path);
    write_spectrum_table(os, s);
}

inline InternalSpectrum read_spectrum_table(std::istream& is, const std::string& name) {
    std::vector<Level> levels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double e, p;
        if (ss >> e) {
            if (!(ss >> p))
                throw ParseError(name + ":" + std::to_string(lineno) +
                                 ": expected two columns (energy_J population)");
            std::string rest;
            if (ss >> rest)
                throw ParseError(name + ":" + std::to_string(lineno) +
                                 ": trailing tokens after two columns");
            levels.push_back({e, p});
        }
    }
    if (levels.empty())
        throw ParseError(name + ": no levels found");
    return InternalSpectrum(std::move(levels), "table");
}

inline InternalSpectrum read_spectrum_table(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw MissingFile("cannot open spectrum table: " + path);
    return read_spectrum_table(is, path);
}

} // namespace qclock::internal
