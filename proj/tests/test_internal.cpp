#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "qclock/internal.hpp"

using namespace qclock;
using namespace qclock::internal;

namespace {
const Constants si = Constants::si();
const Constants nat = Constants::natural();

InternalSpectrum random_spectrum(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> ed(0.0, 5.0);
    std::uniform_real_distribution<double> pd(0.05, 1.0);
    std::vector<Level> lv(n);
    double sum = 0.0;
    for (auto& l : lv) {
        l.energy = ed(rng);
        l.population = pd(rng);
        sum += l.population;
    }
    for (auto& l : lv) l.population /= sum;
    return InternalSpectrum(std::move(lv), "random");
}

} // namespace

TEST_CASE("two_level lays out the qubit as expected") {
    const auto s = two_level(1e15, 0.25, si);
    REQUIRE(s.size() == 2);
    CHECK(s.energy(0) == 0.0);
    CHECK(s.energy(1) == si.hbar * 1e15);
    CHECK(s.population(0) == 0.75);
    CHECK(s.population(1) == 0.25);
    CHECK_THROWS_AS(two_level(-1.0, 0.5, si), NonPositiveArgument);
    CHECK_THROWS_AS(two_level(1.0, 1.5, si), InvalidPopulation);
}

TEST_CASE("spectra enforce the population simplex") {
    CHECK_THROWS_AS(InternalSpectrum({{0.0, -0.1}, {1.0, 1.1}}, "bad"),
                    InvalidPopulation);
    CHECK_THROWS_AS(InternalSpectrum({{0.0, 0.4}, {1.0, 0.4}}, "bad"),
                    InvalidPopulation);
    CHECK_THROWS_AS(InternalSpectrum({}, "empty"), ValidationError);
    // Levels arrive sorted and exact duplicates collapse.
    const InternalSpectrum s({{2.0, 0.25}, {1.0, 0.5}, {2.0, 0.25}}, "dup");
    REQUIRE(s.size() == 2);
    CHECK(s.energy(0) == 1.0);
    CHECK(s.population(1) == 0.5);
}

TEST_CASE("thermal mode matches the Boltzmann ladder") {
    const double omega = 1.0, T = 10.0;
    const auto s = truncated_thermal_mode(omega, T, 300, nat);
    REQUIRE(s.size() == 301);
    const double q = std::exp(-omega / T);
    for (std::size_t n : {std::size_t{1}, std::size_t{7}, std::size_t{200}}) {
        CHECK(s.population(n) / s.population(n - 1) == Catch::Approx(q).epsilon(1e-13));
        CHECK(s.energy(n) == Catch::Approx(static_cast<double>(n)).epsilon(1e-15));
    }
    num::CompensatedSum total;
    for (const auto& l : s.levels()) total.add(l.population);
    CHECK(total.value() == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("thermal mode refuses truncations that drop real weight") {
    // kT / (hbar w) = 100: even 200 quanta keep more than 1e-10 in the tail.
    CHECK_THROWS_AS(truncated_thermal_mode(1.0, 100.0, 200, nat),
                    TruncationTooSevere);
    CHECK_NOTHROW(truncated_thermal_mode(1.0, 100.0, 2400, nat));
}

TEST_CASE("thermal variance converges against a doubled truncation") {
    const auto a = truncated_thermal_mode(1.0, 10.0, 300, nat);
    const auto b = truncated_thermal_mode(1.0, 10.0, 600, nat);
    CHECK(energy_variance(a) ==
          Catch::Approx(energy_variance(b)).epsilon(1e-8));
    // Closed form for the untruncated mode: q / (1 - q)^2 in units hbar w.
    const double q = std::exp(-0.1);
    CHECK(energy_variance(b) == Catch::Approx(q / ((1 - q) * (1 - q))).epsilon(1e-9));
}

TEST_CASE("mean and variance add under tensor products") {
    std::mt19937 rng(20250817);
    std::uniform_int_distribution<std::size_t> nd(2, 5);
    for (int i = 0; i < 40; ++i) {
        const auto a = random_spectrum(rng, nd(rng));
        const auto b = random_spectrum(rng, nd(rng));
        const auto ab = tensor_product(a, b);
        CHECK(ab.mean_energy() ==
              Catch::Approx(a.mean_energy() + b.mean_energy()).epsilon(1e-12));
        CHECK(energy_variance(ab) ==
              Catch::Approx(energy_variance(a) + energy_variance(b)).epsilon(1e-11));
    }
}

TEST_CASE("commensurate ladders convolve by index") {
    const auto m1 = truncated_thermal_mode(2.0, 10.0, 200, nat);
    const auto m2 = truncated_thermal_mode(2.0, 10.0, 200, nat);
    const auto prod = tensor_product(m1, m2);
    REQUIRE(prod.size() == 401);
    // Test-local convolution, straight from the definition.
    for (std::size_t k : {std::size_t{0}, std::size_t{3}, std::size_t{150}}) {
        double want = 0.0;
        for (std::size_t i = 0; i <= k; ++i)
            if (i < m1.size() && k - i < m2.size())
                want += m1.population(i) * m2.population(k - i);
        CHECK(prod.population(k) == Catch::Approx(want).epsilon(1e-13));
    }
    CHECK(prod.energy(5) == Catch::Approx(5.0 * 2.0).epsilon(1e-12));
}

TEST_CASE("tensor product enforces its level cap") {
    std::mt19937 rng(99);
    const auto a = random_spectrum(rng, 20);
    const auto b = random_spectrum(rng, 20);
    CHECK_THROWS_AS(tensor_product(a, b, 100), LevelCapExceeded);
}

TEST_CASE("einstein energy spread approaches sqrt(3N) kT from below") {
    const EinsteinSolid one{1, 1.0, 100.0};
    const double high_t = std::sqrt(3.0) * nat.k_B * 100.0;
    const double got = einstein_delta_h0(one, nat);
    CHECK(got == Catch::Approx(high_t).epsilon(1e-4));
    CHECK(got < high_t);

    // Monotone approach as the temperature ratio grows.
    double prev = 0.0;
    for (double T : {0.5, 1.0, 2.0, 8.0, 64.0}) {
        const double r = einstein_delta_h0({1, 1.0, T}, nat) /
                         (std::sqrt(3.0) * nat.k_B * T);
        CHECK(r <= 1.0);
        CHECK(r > prev);
        prev = r;
    }

    // SI anchor: room-temperature solid, N = 1, hbar w / kT about 2.5.
    const double si_val = einstein_delta_h0({1, 1e14, 300.0}, si);
    const double x = si.hbar * 1e14 / (si.k_B * 300.0);
    CHECK(si_val == Catch::Approx(std::sqrt(3.0) * si.hbar * 1e14 /
                                  (2.0 * std::sinh(x / 2.0))).epsilon(1e-12));
    CHECK(si_val < std::sqrt(3.0) * si.k_B * 300.0);
}

TEST_CASE("einstein spectrum equals three convolved thermal modes") {
    // Independent construction: the N = 1 solid is literally mode x mode x
    // mode. Populations must agree level by level.
    const double omega = 1.0, T = 5.0;
    const auto mode = truncated_thermal_mode(omega, T, 160, nat);
    const auto three = tensor_product(tensor_product(mode, mode), mode);
    const auto direct = einstein_spectrum({1, omega, T}, 480, nat);
    REQUIRE(direct.size() == 481);
    // Compare only up to the per-mode cap: past 160 total quanta the
    // mode-by-mode construction starts missing decompositions.
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{40},
                          std::size_t{100}, std::size_t{160}}) {
        CHECK(direct.population(n) ==
              Catch::Approx(three.population(n)).epsilon(1e-10).margin(1e-18));
    }
    CHECK(energy_variance(direct) ==
          Catch::Approx(energy_variance(three)).epsilon(1e-9));
}

TEST_CASE("einstein spectrum variance matches the closed form") {
    for (std::size_t N : {std::size_t{1}, std::size_t{5}}) {
        const EinsteinSolid solid{N, 1.0, 8.0};
        const auto s = einstein_spectrum(solid, 400 * N, nat);
        const double want = einstein_delta_h0(solid, nat);
        CHECK(std::sqrt(energy_variance(s)) == Catch::Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("einstein spectrum rejects starved truncations") {
    CHECK_THROWS_AS(einstein_spectrum({1, 1.0, 50.0}, 60, nat), TruncationTooSevere);
}

TEST_CASE("spectrum tables round-trip exactly") {
    const auto s = two_level(1e15, 0.3, si);
    std::stringstream ss;
    write_spectrum_table(ss, s);
    const auto back = read_spectrum_table(ss, "buffer");
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back.energy(i) == s.energy(i));
        CHECK(back.population(i) == s.population(i));
    }
}

TEST_CASE("spectrum table parsing flags malformed rows") {
    std::stringstream one_col("1.0\n");
    CHECK_THROWS_AS(read_spectrum_table(one_col, "buf"), ParseError);
    std::stringstream three_col("1.0 0.5 9\n");
    CHECK_THROWS_AS(read_spectrum_table(three_col, "buf"), ParseError);
    std::stringstream empty("# only comments\n");
    CHECK_THROWS_AS(read_spectrum_table(empty, "buf"), ParseError);
    CHECK_THROWS_AS(read_spectrum_table("/nonexistent/path/spec.txt"), MissingFile);
}
