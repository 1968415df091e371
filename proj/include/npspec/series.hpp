#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>

#include "npspec/errors.hpp"

namespace npspec {

using complexd = std::complex<double>;

inline constexpr double euler_gamma = 0.57721566490153286060651209;

/// Truncation policy for the power series in this header and in legendre.hpp.
/// A series is accepted once the running term stays below rel_tol times the
/// partial sum for three consecutive terms; reaching max_terms first throws
/// NonConvergence.
struct SeriesControl {
    double rel_tol = 1e-16;
    int max_terms = 20000;
};

/// Complex number m * 2^e. The spectral curve formulas multiply Legendre
/// values that grow like exp(pi*xi), far past double range; carrying the
/// exponent separately keeps every ratio finite.
struct ScaledComplex {
    complexd m{0.0, 0.0};
    std::int64_t e = 0;

    void normalize() {
        double a = std::max(std::abs(m.real()), std::abs(m.imag()));
        if (a == 0.0 || !std::isfinite(a)) {
            e = 0;
            return;
        }
        int k = std::ilogb(a);
        if (k > 256 || k < -256) {
            m = complexd(std::scalbn(m.real(), -k), std::scalbn(m.imag(), -k));
            e += k;
        }
    }

    ScaledComplex operator*(const ScaledComplex& o) const {
        ScaledComplex r{m * o.m, e + o.e};
        r.normalize();
        return r;
    }
    ScaledComplex operator*(const complexd& c) const {
        ScaledComplex r{m * c, e};
        r.normalize();
        return r;
    }
    ScaledComplex operator-() const { return {-m, e}; }

    ScaledComplex operator+(const ScaledComplex& o) const {
        // Align exponents; a gap beyond 2100 bits means the smaller term is
        // invisible even to long double.
        const ScaledComplex *hi = this, *lo = &o;
        if (o.e > e) std::swap(hi, lo);
        std::int64_t d = hi->e - lo->e;
        if (d > 2100) return *hi;
        ScaledComplex r{hi->m + complexd(std::scalbn(lo->m.real(), -int(d)),
                                         std::scalbn(lo->m.imag(), -int(d))),
                        hi->e};
        r.normalize();
        return r;
    }
    ScaledComplex operator-(const ScaledComplex& o) const { return *this + ScaledComplex{-o.m, o.e}; }

    /// Ratio as a plain complex; exponent overflow maps to inf/0 with the
    /// correct phase.
    complexd ratio(const ScaledComplex& den) const {
        complexd q = m / den.m;
        std::int64_t d = e - den.e;
        if (d > 1000) return q * std::numeric_limits<double>::infinity();
        if (d < -1100) return complexd(0.0, 0.0);
        return complexd(std::scalbn(q.real(), int(d)), std::scalbn(q.imag(), int(d)));
    }

    complexd to_complex() const { return ratio(ScaledComplex{1.0, 0}); }
};

/// Pochhammer symbol (a)_k = a (a+1) ... (a+k-1) by direct product.
/// The empty product (k = 0) is 1. A product of complex factors has no
/// branch ambiguity, unlike the log-gamma route.
inline complexd pochhammer(complexd a, int k) {
    if (k < 0) throw DomainError("pochhammer: k must be nonnegative");
    complexd p(1.0, 0.0);
    for (int j = 0; j < k; ++j) p *= (a + double(j));
    return p;
}

/// Gauss hypergeometric series F(a,b;c;w) = sum (a)_k (b)_k / (c)_k w^k / k!
/// for |w| < 1, generated by the term ratio recursion.
inline complexd gauss_2f1(complexd a, complexd b, complexd c, complexd w,
                          const SeriesControl& ctl = {}) {
    if (std::abs(w) >= 1.0) throw DomainError("gauss_2f1: |w| >= 1");
    if (c.imag() == 0.0 && c.real() <= 0.0 && c.real() == std::floor(c.real()))
        throw DomainError("gauss_2f1: c is a nonpositive integer");
    complexd sum(0.0, 0.0), comp(0.0, 0.0), term(1.0, 0.0);
    int small_streak = 0;
    for (int k = 0; k < ctl.max_terms; ++k) {
        // Kahan update of sum += term
        complexd y = term - comp;
        complexd t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (std::abs(term) <= ctl.rel_tol * std::abs(sum)) {
            if (++small_streak >= 3) return sum;
        } else {
            small_streak = 0;
        }
        term *= (a + double(k)) * (b + double(k)) * w / ((c + double(k)) * double(k + 1));
    }
    throw NonConvergence("gauss_2f1: max_terms reached");
}

/// Digamma at n + 1/2 (pass two_x = 2n+1) or at a positive integer m
/// (pass two_x = 2m), from the exact recurrences
/// psi(1) = -gamma, psi(1/2) = -gamma - 2 ln 2, psi(x+1) = psi(x) + 1/x.
inline double digamma_half_integer(int two_x) {
    if (two_x <= 0) throw DomainError("digamma: argument must be positive");
    if (two_x % 2 == 0) {
        double v = -euler_gamma;
        for (int j = 1; j < two_x / 2; ++j) v += 1.0 / j;
        return v;
    }
    double v = -euler_gamma - 2.0 * std::numbers::ln2;
    for (int j = 0; j < (two_x - 1) / 2; ++j) v += 1.0 / (j + 0.5);
    return v;
}

} // namespace npspec
