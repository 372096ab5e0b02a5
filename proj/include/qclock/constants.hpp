#pragma once

namespace qclock {

// Physical constants threaded through every formula instead of being baked
// in, so the same code runs in SI units and in natural units where the
// relativistic scales are O(1) and floating point has no hierarchy problem.
struct Constants {
    double c = 299792458.0;        // m/s
    double hbar = 1.054571817e-34; // J s
    double k_B = 1.380649e-23;     // J/K

    static constexpr Constants si() { return Constants{}; }

    static constexpr Constants natural() { return Constants{1.0, 1.0, 1.0}; }

    constexpr double c2() const { return c * c; }
};

} // namespace qclock
