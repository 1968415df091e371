#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "npspec/legendre.hpp"
#include "npspec/series.hpp"

using namespace npspec;
using Catch::Approx;

namespace {
// extended-precision product oracle for the Pochhammer example, evaluated with
// long double accumulation
complexd poch_oracle(complexd a, int k) {
    std::complex<long double> p(1.0L, 0.0L), al(a.real(), a.imag());
    for (int j = 0; j < k; ++j) p *= (al + static_cast<long double>(j));
    return {double(p.real()), double(p.imag())};
}
} // namespace

TEST_CASE("pochhammer basics") {
    CHECK(pochhammer({2.7, -3.1}, 0) == complexd(1.0, 0.0));
    CHECK(pochhammer({1.0, 0.0}, 5).real() == Approx(120.0));
    complexd a{0.5, 2.0};
    complexd want = poch_oracle(a, 3);
    complexd got = pochhammer(a, 3);
    CHECK(std::abs(got - want) < 1e-14 * std::abs(want));
}

TEST_CASE("gauss_2f1 series") {
    SeriesControl ctl;
    CHECK(gauss_2f1({0.3, 0.1}, {2.0, 0.0}, {1.5, 0.0}, {0.0, 0.0}, ctl) == complexd(1.0, 0.0));
    // terminating case: F(-1, 2; 1; w) = 1 - 2w
    for (double w : {0.1, -0.4, 0.72}) {
        complexd v = gauss_2f1({-1.0, 0.0}, {2.0, 0.0}, {1.0, 0.0}, {w, 0.0}, ctl);
        CHECK(v.real() == Approx(1.0 - 2.0 * w).epsilon(1e-14));
        CHECK(v.imag() == Approx(0.0).margin(1e-15));
    }
    // brute-force summation oracle at (3/4, 1/4; 1; 0.3)
    long double s = 0.0L, term = 1.0L;
    for (int k = 0; k < 200; ++k) {
        s += term;
        term *= (0.75L + k) * (0.25L + k) * 0.3L / ((1.0L + k) * (k + 1.0L));
    }
    complexd v = gauss_2f1({0.75, 0.0}, {0.25, 0.0}, {1.0, 0.0}, {0.3, 0.0}, ctl);
    CHECK(v.real() == Approx(double(s)).epsilon(1e-14));
    CHECK_THROWS_AS(gauss_2f1({1, 0}, {1, 0}, {-2.0, 0.0}, {0.5, 0.0}, ctl), DomainError);
    CHECK_THROWS_AS(gauss_2f1({1, 0}, {1, 0}, {1.0, 0.0}, {1.5, 0.0}, ctl), DomainError);
}

TEST_CASE("digamma at integers and half-integers") {
    CHECK(digamma_half_integer(2) == Approx(-0.5772156649015329).epsilon(1e-14));
    CHECK(digamma_half_integer(4) == Approx(1.0 - 0.5772156649015329).epsilon(1e-13));
    // psi(5/2) = psi(1/2) + 2 + 2/3
    double psi_half = -euler_gamma - 2.0 * std::numbers::ln2;
    CHECK(digamma_half_integer(5) == Approx(psi_half + 2.0 + 2.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(digamma_half_integer(0), DomainError);
}

TEST_CASE("legendre_p special values") {
    // constant function P_0 = 1
    CHECK(legendre_p(0, {0, 0}, 0.37).real() == Approx(1.0));
    // P_1 = x (series terminates)
    CHECK(legendre_p(0, {1, 0}, 0.5).real() == Approx(0.5).epsilon(1e-14));
    CHECK(legendre_p_deriv(0, {1, 0}, 0.5).real() == Approx(1.0).epsilon(1e-14));
    CHECK(legendre_p_deriv(0, {0, 0}, 0.41).real() == Approx(0.0).margin(1e-16));
    // parity P^n_lambda = P^n_{-lambda-1}
    complexd lam{0.3, 0.2};
    complexd a = legendre_p(2, lam, 0.5);
    complexd b = legendre_p(2, -lam - 1.0, 0.5);
    CHECK(std::abs(a - b) < 1e-12 * std::abs(a));
}

TEST_CASE("legendre parity and conjugation invariants") {
    for (int n : {0, 1, 3}) {
        for (double xi : {0.25, 1.5, 4.0}) {
            for (double x : {-0.7, 0.2, 0.9}) {
                complexd lam{-0.5, xi};
                complexd a = legendre_p(n, lam, x);
                complexd b = legendre_p(n, -lam - 1.0, x);
                CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
                complexd cc = legendre_p(n, std::conj(lam), x);
                CHECK(std::abs(cc - std::conj(a)) <= 1e-12 * std::abs(a));
            }
        }
    }
}

TEST_CASE("legendre derivative matches central differences") {
    const double h = 1e-6;
    for (int n : {0, 1, 2}) {
        for (double x : {-0.5, 0.1, std::cos(5.0 * std::numbers::pi / 36.0)}) {
            complexd lam{-0.5, 1.0};
            complexd d = legendre_p_deriv(n, lam, x);
            complexd fd = (legendre_p(n, lam, x + h) - legendre_p(n, lam, x - h)) / (2.0 * h);
            CHECK(std::abs(d - fd) < 1e-7 * std::max(1.0, std::abs(d)));
        }
    }
}

TEST_CASE("legendre positivity on the energy line") {
    // P^n_{i xi - 1/2}(x) > 0 and its derivative < 0 for real xi, |x| < 1
    for (int n : {0, 1, 2, 5}) {
        for (double xi : {0.0, 0.7, 3.0}) {
            for (double x : {-0.9, -0.2, 0.6}) {
                LegendreReduced r = legendre_reduced(n, {-0.5, xi}, x);
                complexd pref = pochhammer({0.5, -xi}, n) * pochhammer({0.5, xi}, n);
                complexd P = (r.value * pref).to_complex();
                complexd dP = (r.deriv * (pref * r.deriv_scale)).to_complex();
                CHECK(P.real() > 0.0);
                CHECK(std::abs(P.imag()) < 1e-12 * P.real());
                CHECK(dP.real() < 0.0);
            }
        }
    }
}

TEST_CASE("q_half matches the integral oracle") {
    // grid from the module contract; the quadrature oracle's double-precision
    // noise floor is ~1e-15 of the n = 0 magnitude at the same chi
    for (double chi : {1.001, 1.01, 1.1, 1.5, 2.0, 5.0, 100.0}) {
        double floor = 1e-15 * q_half(0, chi);
        for (int n = 0; n <= 8; ++n) {
            double qs = q_half(n, chi);
            double qi = q_half_integral(n, chi);
            CHECK(std::abs(qs - qi) <= std::max(1e-8 * std::abs(qi), floor));
        }
    }
}

TEST_CASE("q_half series regimes overlap") {
    for (int n : {0, 1, 4}) {
        for (double chi : {1.3, 1.5, 1.79, 2.2}) {
            QHalfSplit s = q_half_log_split(n, chi - 1.0);
            double via_log = s.smooth + s.log_coef * std::log(chi - 1.0);
            double via_far = q_half_far(n, chi);
            CHECK(via_log == Approx(via_far).epsilon(1e-10));
        }
    }
}

TEST_CASE("q_half asymptotics and oracle properties") {
    // leading far-field term at huge argument
    CHECK(q_half(0, 1e4) == Approx(std::numbers::pi / std::sqrt(2e4)).epsilon(1e-7));
    // log-regime value against the integral
    CHECK(q_half(3, 1.01) == Approx(q_half_integral(3, 1.01)).epsilon(1e-8));
    CHECK(q_half(0, 3.0) == Approx(q_half_integral(0, 3.0)).epsilon(1e-10));
    // monotone decrease in chi
    CHECK(q_half_integral(1, 2.0) > q_half_integral(1, 2.5));
    CHECK(q_half_integral(1, 2.0) > 0.0);
    CHECK_THROWS_AS(q_half(0, 0.99), DomainError);
    CHECK_THROWS_AS(q_half_integral(0, 1.0), DomainError);
}
