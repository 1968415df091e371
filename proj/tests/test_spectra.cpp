#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "npspec/spectra.hpp"

using namespace npspec;
using Catch::Approx;

namespace {
constexpr double kAlphaAcute = 5.0 * std::numbers::pi / 36.0;   // 2a = 5pi/18
constexpr double kAlphaReflex = 31.0 * std::numbers::pi / 36.0; // 2a = 31pi/18
} // namespace

TEST_CASE("energy symbol endpoints for the acute reference angle") {
    CHECK(f_point(kAlphaAcute, 0, 0.0) == Approx(0.861463506648456).margin(1e-9));
    CHECK(f_point(kAlphaAcute, 1, 0.0) == Approx(0.018216721972542).margin(1e-9));
    // evenness
    for (double xi : {0.3, 2.0, 7.7})
        CHECK(f_point(kAlphaAcute, 1, -xi) == Approx(f_point(kAlphaAcute, 1, xi)).epsilon(1e-12));
}

TEST_CASE("essential interval of mode 1 hits the printed maximum") {
    EssentialInterval iv = essential_interval(kAlphaAcute, 1);
    CHECK(iv.hi == Approx(0.158139520536354).margin(1e-8));
    CHECK(iv.xi_at_hi == Approx(3.8202309).margin(1e-5));
    CHECK(iv.lo <= 0.0);
    CHECK(iv.hi < 1.0);
    CHECK(iv.lo > -1.0);
}

TEST_CASE("mode 0 interval peaks at xi = 0") {
    EssentialInterval iv = essential_interval(kAlphaAcute, 0);
    CHECK(iv.hi == Approx(f_point(kAlphaAcute, 0, 0.0)).epsilon(1e-10));
    CHECK(iv.xi_at_hi == Approx(0.0).margin(1e-6));
}

TEST_CASE("reflex angle mirrors the acute intervals") {
    // alpha -> pi - alpha flips the sign of F_n
    for (int n : {0, 1}) {
        for (double xi : {0.0, 1.2, 5.0}) {
            CHECK(f_point(kAlphaReflex, n, xi) ==
                  Approx(-f_point(kAlphaAcute, n, xi)).epsilon(1e-10).margin(1e-12));
        }
    }
}

TEST_CASE("curve points: conjugation symmetry and tails") {
    for (int n : {0, 1, 2}) {
        for (double xi : {0.4, 1.0, 6.0}) {
            complexd a = pi_point(kAlphaAcute, n, xi);
            complexd b = pi_point(kAlphaAcute, n, -xi);
            CHECK(std::abs(b - std::conj(a)) < 1e-10 * std::max(1.0, std::abs(a)));
        }
    }
    // the curve closes at 0: large-xi values decay
    CHECK(std::abs(pi_point(kAlphaAcute, 0, 2000.0)) < 1e-2);
    // at xi = 0 the n = 0 curve point is real (equals cos alpha)
    complexd p0 = pi_point(kAlphaAcute, 0, 0.0);
    CHECK(std::abs(p0.imag()) < 1e-10);
    CHECK(p0.real() == Approx(std::cos(kAlphaAcute)).epsilon(1e-12));
}

TEST_CASE("sampled curves satisfy their invariants") {
    SpectralCurve c = sample_curve(kAlphaAcute, 0, 1e-3);
    REQUIRE(c.closed);
    REQUIRE(c.xi.size() >= 2);
    for (size_t i = 1; i < c.xi.size(); ++i) CHECK(c.xi[i] > c.xi[i - 1]);
    CHECK(std::abs(c.value.front()) < 1e-3);
    CHECK(std::abs(c.value.back()) < 1e-3);
    // value(-xi) = conj(value(xi)) on the sampled grid (probe a few)
    for (double xi : {0.5, 2.5}) {
        complexd v = pi_point(kAlphaAcute, 0, xi);
        complexd w = pi_point(kAlphaAcute, 0, -xi);
        CHECK(std::abs(w - std::conj(v)) < 1e-10);
    }
}

TEST_CASE("curve maxima decay like 1/n") {
    double bound = 0.0;
    for (int n = 1; n <= 30; ++n) {
        SpectralCurve c = sample_curve(kAlphaAcute, n, 1e-2);
        bound = std::max(bound, n * c.max_abs());
    }
    CHECK(bound < 10.0); // n * max|Pi_n| stays bounded
}

TEST_CASE("winding numbers: far points, symmetry, interior point") {
    SpectralCurve c0 = sample_curve(kAlphaAcute, 0, 1e-3);
    CHECK(winding_number({2.0, 0.0}, c0) == 0);
    CHECK(winding_number({-1.5, 0.7}, c0) == 0);

    // dense brute-force scan located the big n = 0 leaf; points inside have
    // winding -1 (index theory: windings are always <= 0 for these curves)
    complexd inside{0.55, 0.04};
    int w_in = winding_number(inside, c0);
    CHECK(w_in == -1);
    CHECK(winding_number(std::conj(inside), c0) == w_in);

    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> ur(-1.4, 1.4), ui(-0.6, 0.6);
    SpectralCurve c1 = sample_curve(kAlphaAcute, 1, 1e-3);
    for (int k = 0; k < 60; ++k) {
        complexd z{ur(rng), ui(rng)};
        try {
            int w0 = winding_number(z, c0);
            int w1 = winding_number(z, c1);
            CHECK(w0 <= 0);
            CHECK(w0 >= -2);
            CHECK(w1 <= 0);
            CHECK(w1 >= -2);
            CHECK(winding_number(std::conj(z), c0) == w0);
        } catch (const OnCurve&) {
            // points within resolution of the curve are legitimately rejected
        }
    }
}

TEST_CASE("fredholm index: zero far out, nonpositive everywhere") {
    CHECK(fredholm_index(kAlphaAcute, {2.0, 0.0}) == 0);
    CHECK(fredholm_index(kAlphaAcute, {0.55, 0.04}) == -1);
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> ur(-1.2, 1.2), ui(-0.5, 0.5);
    for (int k = 0; k < 25; ++k) {
        complexd z{ur(rng), ui(rng)};
        try {
            CHECK(fredholm_index(kAlphaAcute, z) <= 0);
        } catch (const OnCurve&) {
        }
    }
}

TEST_CASE("c_constant: symmetry, positivity, uniform boundedness") {
    double sup = 0.0;
    for (int n : {0, 1, 2, 5, 10, 30}) {
        for (double xi : {0.0, 0.5, 2.0, 8.0, 20.0}) {
            double c = c_constant(kAlphaAcute, n, xi);
            CHECK(c > 0.0);
            CHECK(c_constant(kAlphaAcute, n, -xi) == Approx(c).epsilon(1e-10));
            sup = std::max(sup, c);
        }
    }
    CHECK(sup < 50.0);
}

TEST_CASE("mellin integrator sanity: reference transform at 1/2") {
    complexd v = mellin_log_ratio({0.5, 0.0});
    // (pi / zeta) tan(pi zeta / 2) at zeta = 1/2 equals 2 pi
    CHECK(v.real() == Approx(2.0 * std::numbers::pi).margin(1e-8));
    CHECK(std::abs(v.imag()) < 1e-10);
}

TEST_CASE("mellin symbol reproduces the Legendre ratios") {
    for (double alpha : {kAlphaAcute, kAlphaReflex}) {
        for (int n : {0, 1, 2}) {
            for (double xi : {0.0, 1.0, -1.0, 5.0, -5.0}) {
                // at zeta = 1 + i xi the degree zeta - 2 maps by the parity
                // identity to -i xi, so the matching curve point is Pi_n(-xi)
                complexd m1 = mellin_symbol(alpha, n, complexd(1.0, xi));
                complexd p = pi_point(alpha, n, -xi);
                CHECK(std::abs(m1 - p) <= std::max(1e-6 * std::abs(p), 1e-8));
                complexd m2 = mellin_symbol(alpha, n, complexd(1.5, xi));
                complexd f{f_point(alpha, n, xi), 0.0};
                CHECK(std::abs(m2 - f) <= 1e-6 * std::abs(f));
            }
        }
    }
}
