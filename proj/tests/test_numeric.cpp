#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qclock/numeric.hpp"

using namespace qclock;

namespace {

// Relative closeness against an independently computed reference.
void check_rel(double got, double want, double tol) {
    INFO("got " << got << " want " << want);
    CHECK(std::abs(got - want) <= tol * std::abs(want));
}

} // namespace

TEST_CASE("sqrt1p_minus1 against 40-digit references") {
    // References from arbitrary-precision evaluation of sqrt(1+e) - 1.
    check_rel(num::sqrt1p_minus1(-0.99), -0.9, 1e-14);
    check_rel(num::sqrt1p_minus1(-0.36), -0.2, 1e-14);
    check_rel(num::sqrt1p_minus1(-1e-8), -5.0000000125000000625e-9, 1e-14);
    check_rel(num::sqrt1p_minus1(1e-12), 4.99999999999875e-13, 1e-14);
    check_rel(num::sqrt1p_minus1(0.5), 0.2247448713915890491, 1e-14);
    check_rel(num::sqrt1p_minus1(1e8), 9999.000049999999875, 1e-14);
}

TEST_CASE("sqrt1p_minus1 respects the identity sqrt(1+e) = 1 + f") {
    // The sum 1 + f cancels when f approaches -1, so the identity holds to
    // an absolute ulp of 1, not to a relative ulp of the root.
    for (double e : {-0.999, -0.5, -1e-3, -1e-12, 0.0, 1e-12, 1e-3, 2.0, 1e10}) {
        const double f = num::sqrt1p_minus1(e);
        const double want = std::sqrt(1.0 + e);
        INFO("e = " << e);
        CHECK(std::abs((1.0 + f) - want) <= std::max(1e-15 * want, 3e-16));
    }
}

TEST_CASE("tanh_minus_identity against 40-digit references") {
    check_rel(num::tanh_minus_identity(1e-6), -3.333333333332e-19, 1e-13);
    check_rel(num::tanh_minus_identity(1e-3), -3.3333320000005396823e-10, 1e-13);
    check_rel(num::tanh_minus_identity(0.01), -3.3332000053966067108e-7, 1e-13);
    check_rel(num::tanh_minus_identity(0.05), -4.1625042120027801614e-5, 1e-13);
    check_rel(num::tanh_minus_identity(0.079), -1.6393709293375716263e-4, 1e-13);
    check_rel(num::tanh_minus_identity(0.2), -2.6246797750959992618e-3, 1e-13);
    check_rel(num::tanh_minus_identity(1.5), -0.59485174635513356176, 1e-13);
    check_rel(num::tanh_minus_identity(20.0), -19.000000000000000008, 1e-13);
    // Odd function.
    CHECK(num::tanh_minus_identity(-0.05) == -num::tanh_minus_identity(0.05));
}

TEST_CASE("asinh_minus_identity against 40-digit references") {
    check_rel(num::asinh_minus_identity(1e-6), -1.6666666666659166667e-19, 1e-13);
    check_rel(num::asinh_minus_identity(1e-3), -1.6666659166671130949e-10, 1e-13);
    check_rel(num::asinh_minus_identity(0.01), -1.6665916711306485839e-7, 1e-13);
    check_rel(num::asinh_minus_identity(0.059), -3.4176324848895226639e-5, 1e-13);
    check_rel(num::asinh_minus_identity(0.3), -4.3269524365775608973e-3, 1e-13);
    check_rel(num::asinh_minus_identity(2.0), -0.55636452482118965751, 1e-13);
    CHECK(num::asinh_minus_identity(-0.3) == -num::asinh_minus_identity(0.3));
}

TEST_CASE("cosh_minus_one against 40-digit references") {
    check_rel(num::cosh_minus_one(1e-8), 5.0000000000000000417e-17, 1e-14);
    check_rel(num::cosh_minus_one(1e-3), 5.0000004166666805556e-7, 1e-14);
    check_rel(num::cosh_minus_one(2.0), 2.7621956910836314596, 1e-14);
}

TEST_CASE("cycle reduction is exact for representable inputs") {
    CHECK(num::wrap_cycles(1e15 + 0.25) == 0.25);
    CHECK(num::wrap_cycles(-7.0) == 0.0);
    CHECK(num::wrap_cycles(3.5) == Catch::Approx(-0.5).margin(0.0)); // ties to even
    CHECK(num::wrap_cycles(0.3) == Catch::Approx(0.3).epsilon(1e-15));

    // Quarter cycle: exp(-i pi / 2) = -i.
    const auto z = num::unit_phasor_neg(1e15 + 0.25);
    CHECK(std::abs(z.real()) < 1e-15);
    CHECK(z.imag() == Catch::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("unit_phasor_neg matches naive evaluation at small phase") {
    for (double c : {0.0, 0.1, -0.37, 0.499}) {
        const auto z = num::unit_phasor_neg(c);
        CHECK(z.real() == Catch::Approx(std::cos(num::two_pi * c)).margin(1e-15));
        CHECK(z.imag() == Catch::Approx(-std::sin(num::two_pi * c)).margin(1e-15));
    }
}

TEST_CASE("compensated sum resolves terms 1e16 apart") {
    num::CompensatedSum acc;
    acc.add(1.0);
    for (int i = 0; i < 1000; ++i) acc.add(1e-18);
    acc.add(-1.0);
    CHECK(acc.value() == Catch::Approx(1e-15).epsilon(1e-12));
}

TEST_CASE("adaptive Simpson on smooth references") {
    check_rel(num::adaptive_simpson([](double x) { return x * x; }, 0.0, 1.0),
              1.0 / 3.0, 1e-14);
    check_rel(num::adaptive_simpson([](double x) { return std::sin(x); }, 0.0, num::pi),
              2.0, 1e-12);
    check_rel(num::adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0),
              std::exp(1.0) - 1.0, 1e-12);
}

TEST_CASE("adaptive Simpson resolves a narrow bump") {
    // Gaussian of width 1e-3 at 0.3; reference from the error function.
    const double s = 1e-3;
    const double ref = 0.0025066282746310005024;
    const double got = num::adaptive_simpson(
        [&](double x) {
            const double d = (x - 0.3) / s;
            return std::exp(-0.5 * d * d);
        },
        0.0, 1.0);
    check_rel(got, ref, 1e-9);
}

TEST_CASE("adaptive Simpson honors the absolute floor on tiny integrands") {
    const double got =
        num::adaptive_simpson([](double t) { return 1e-16 * t; }, 0.0, 1.0);
    check_rel(got, 5e-17, 1e-10);
}

TEST_CASE("line fit recovers exact lines") {
    std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0};
    std::vector<double> y;
    for (double v : x) y.push_back(2.5 * v - 1.25);
    const auto f = num::fit_line(x, y);
    CHECK(f.slope == Catch::Approx(2.5).epsilon(1e-14));
    CHECK(f.intercept == Catch::Approx(-1.25).epsilon(1e-14));
    CHECK(f.r2 == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("through-origin estimators agree on exact proportionality") {
    std::vector<double> x{0.5, 1.0, 1.5, 2.0};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v);
    CHECK(num::fit_through_origin(x, y) == Catch::Approx(3.0).epsilon(1e-14));
    CHECK(num::mean_ratio_slope(x, y) == Catch::Approx(3.0).epsilon(1e-14));
    CHECK(num::rms_residual_through_origin(x, y, 3.0) < 1e-14);
}

TEST_CASE("mean_ratio_slope suppresses a far-end quartic term") {
    // The real use: y(t) = a t^2 + c t^4 regressed against x = t^2 on a
    // uniform t grid. The plain fit picks up (5/7) c T^2 of quartic bias,
    // the ratio estimator only (1/3) c T^2.
    std::vector<double> x, y;
    for (int i = 1; i <= 100; ++i) {
        const double t = i / 100.0;
        x.push_back(t * t);
        y.push_back(t * t + 0.1 * t * t * t * t);
    }
    const double plain = num::fit_through_origin(x, y);
    const double ratio = num::mean_ratio_slope(x, y);
    CHECK(std::abs(ratio - 1.0) < 0.55 * std::abs(plain - 1.0));
    CHECK(ratio == Catch::Approx(1.0 + 0.1 / 3.0).epsilon(2e-2));
}

TEST_CASE("rationalize finds classic convergents") {
    auto r = num::rationalize(num::pi, 1000, 1e-6);
    REQUIRE(r.has_value());
    CHECK(r->num == 355);
    CHECK(r->den == 113);

    r = num::rationalize(2.0 / 3.0, 10, 1e-12);
    REQUIRE(r.has_value());
    CHECK(r->num == 2);
    CHECK(r->den == 3);

    r = num::rationalize(0.5, 10, 0.0);
    REQUIRE(r.has_value());
    CHECK(r->num == 1);
    CHECK(r->den == 2);

    // The golden ratio is the worst-approximable number: with a tight
    // tolerance and a small cap there is nothing to find.
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    CHECK_FALSE(num::rationalize(phi, 50, 1e-9).has_value());
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
    CHECK(num::wrap_angle(num::two_pi) == Catch::Approx(0.0).margin(1e-15));
    CHECK(num::wrap_angle(3.0 * num::pi) == Catch::Approx(num::pi).epsilon(1e-15));
    CHECK(num::wrap_angle(-0.5) == Catch::Approx(-0.5).epsilon(1e-15));
    CHECK(num::wrap_angle(100.0 * num::two_pi + 0.125) ==
          Catch::Approx(0.125).margin(1e-12));
}
