#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "npspec/series.hpp"

namespace npspec {

/// Associated Legendre functions of the first kind, complex degree lambda and
/// integer order n >= 0, through the ascending series at x = 1:
///
///   P_lambda^n(x) = (1-x^2)^{n/2} (-lambda)_n (lambda+1)_n
///                   sum_k (n-lambda)_k (n+lambda+1)_k / (k! (k+n)! 2^{n+k}) (1-x)^k,
///
/// valid for |1-x| < 2, together with its x-derivative. The series converges
/// like ((1-x)/2)^k, so reflex cones (x near -1) need many terms; Kahan
/// summation and a generous term cap keep double accuracy there.
///
/// The spectral-curve ratios need these functions for degrees i*xi with xi in
/// the hundreds, where the values overflow double. evaluate() therefore works
/// in ScaledComplex arithmetic, and returns the *reduced* function without the
/// Pochhammer prefactor: the prefactor is independent of x and cancels from
/// every ratio this library forms. For n = 0 the k >= 1 coefficients all carry
/// the factor -lambda(lambda+1), which vanishes at lambda = 0 (degree zero);
/// the derivative is returned deflated by deriv_scale = -lambda(lambda+1) so
/// that ratios stay finite on the whole L^2 line.
struct LegendreReduced {
    ScaledComplex value;        ///< (1-x^2)^{n/2} * series (no Pochhammer prefactor)
    ScaledComplex deriv;        ///< deflated derivative: d/dx value = deriv_scale * deriv
    complexd deriv_scale{1.0};  ///< -lambda(lambda+1) for n = 0, else 1
    double err_estimate = 0.0;  ///< last-term magnitude relative to the sum
};

namespace detail {

inline void kahan_add(complexd& sum, complexd& comp, complexd term) {
    complexd y = term - comp;
    complexd t = sum + y;
    comp = (t - sum) - y;
    sum = t;
}

} // namespace detail

inline LegendreReduced legendre_reduced(int n, complexd lambda, double x,
                                        const SeriesControl& ctl = {1e-17, 20000}) {
    if (n < 0) throw DomainError("legendre_reduced: order must be >= 0");
    if (!(std::abs(1.0 - x) < 2.0)) throw DomainError("legendre_reduced: need |1-x| < 2");
    const double u = 1.0 - x;

    LegendreReduced out;
    complexd s(0, 0), s_comp(0, 0);   // series sum
    complexd ds(0, 0), ds_comp(0, 0); // sum of k * a_k * u^{k-1}
    std::int64_t esh = 0;             // shared power-of-two offset of s, ds, term
    int small_streak = 0;
    bool converged = false;

    if (n == 0) {
        // S0 = 1 - lambda(lambda+1) T,  T = sum_{k>=1} c_k u^k,
        // c_1 = 1/2, c_{k+1} = c_k (k-lambda)(k+1+lambda) / (2 (k+1)^2).
        complexd term = 0.5 * u; // k = 1 term of T
        for (int k = 1; k < ctl.max_terms; ++k) {
            detail::kahan_add(s, s_comp, term);
            detail::kahan_add(ds, ds_comp, term * (double(k) / u));
            double ts = std::abs(term), ss = std::max(std::abs(s), std::scalbn(1.0, int(std::min<std::int64_t>(-esh, 300))));
            if (ts <= ctl.rel_tol * ss) {
                if (++small_streak >= 3) {
                    out.err_estimate = ts / ss;
                    converged = true;
                    break;
                }
            } else {
                small_streak = 0;
            }
            term *= (double(k) - lambda) * (double(k) + 1.0 + lambda) * u / (2.0 * (k + 1.0) * (k + 1.0));
            double mag = std::max(std::abs(s), std::abs(term));
            if (mag > 0x1p512) {
                s = complexd(std::scalbn(s.real(), -512), std::scalbn(s.imag(), -512));
                s_comp = complexd(std::scalbn(s_comp.real(), -512), std::scalbn(s_comp.imag(), -512));
                ds = complexd(std::scalbn(ds.real(), -512), std::scalbn(ds.imag(), -512));
                ds_comp = complexd(std::scalbn(ds_comp.real(), -512), std::scalbn(ds_comp.imag(), -512));
                term = complexd(std::scalbn(term.real(), -512), std::scalbn(term.imag(), -512));
                esh += 512;
            }
        }
        if (!converged) throw NonConvergence("legendre_reduced: series did not converge (n=0)");
        ScaledComplex T{s, esh};
        T.normalize();
        ScaledComplex Tx{ds, esh};
        Tx.normalize();
        complexd defl = -lambda * (lambda + 1.0);
        out.value = ScaledComplex{1.0, 0} + T * defl;
        out.deriv = -Tx; // d/dx = -d/du
        out.deriv_scale = defl;
        return out;
    }

    // n >= 1: S = sum_k a_k u^k, a_0 = 1/(n! 2^n), ratio
    // (n-lambda+k)(n+lambda+1+k) u / (2 (k+1)(k+n+1)).
    double a0 = 1.0;
    for (int j = 1; j <= n; ++j) a0 /= (2.0 * j);
    complexd term(a0, 0.0);
    for (int k = 0; k < ctl.max_terms; ++k) {
        detail::kahan_add(s, s_comp, term);
        if (k >= 1) detail::kahan_add(ds, ds_comp, term * (double(k) / u));
        double ts = std::abs(term), ss = std::abs(s);
        if (k > 2 && ts <= ctl.rel_tol * ss) {
            if (++small_streak >= 3) {
                out.err_estimate = ts / std::max(ss, 1e-300);
                converged = true;
                break;
            }
        } else {
            small_streak = 0;
        }
        term *= (double(n + k) - lambda) * (double(n + k) + 1.0 + lambda) * u /
                (2.0 * (k + 1.0) * (k + n + 1.0));
        double mag = std::max(std::abs(s), std::abs(term));
        if (mag > 0x1p512) {
            s = complexd(std::scalbn(s.real(), -512), std::scalbn(s.imag(), -512));
            s_comp = complexd(std::scalbn(s_comp.real(), -512), std::scalbn(s_comp.imag(), -512));
            ds = complexd(std::scalbn(ds.real(), -512), std::scalbn(ds.imag(), -512));
            ds_comp = complexd(std::scalbn(ds_comp.real(), -512), std::scalbn(ds_comp.imag(), -512));
            term = complexd(std::scalbn(term.real(), -512), std::scalbn(term.imag(), -512));
            esh += 512;
        }
    }
    if (!converged) throw NonConvergence("legendre_reduced: series did not converge");

    ScaledComplex S{s, esh};
    S.normalize();
    ScaledComplex Sx{ds, esh};
    Sx.normalize();
    const double om = 1.0 - x * x;
    const double pre = std::pow(om, 0.5 * n);
    const double dpre = -double(n) * x * std::pow(om, 0.5 * n - 1.0);
    out.value = S * complexd(pre, 0.0);
    out.deriv = S * complexd(dpre, 0.0) - Sx * complexd(pre, 0.0);
    out.deriv_scale = complexd(1.0, 0.0);
    return out;
}

/// P_lambda^n(x), the full function including the prefactor
/// (-lambda)_n (lambda+1)_n. Overflows for large |Im lambda|; the spectral
/// formulas avoid this by working with ratios of the reduced quantities.
inline complexd legendre_p(int n, complexd lambda, double x,
                           const SeriesControl& ctl = {1e-17, 20000}) {
    LegendreReduced r = legendre_reduced(n, lambda, x, ctl);
    complexd pref = pochhammer(-lambda, n) * pochhammer(lambda + 1.0, n);
    return (r.value * pref).to_complex();
}

/// d/dx P_lambda^n(x).
inline complexd legendre_p_deriv(int n, complexd lambda, double x,
                                 const SeriesControl& ctl = {1e-17, 20000}) {
    LegendreReduced r = legendre_reduced(n, lambda, x, ctl);
    complexd pref = pochhammer(-lambda, n) * pochhammer(lambda + 1.0, n);
    return (r.deriv * (pref * r.deriv_scale)).to_complex();
}

// ---------------------------------------------------------------------------
// Legendre functions of the second kind at half-integer degree,
//   Q_{n-1/2}(chi) = int_{-pi}^{pi} cos(n theta) / sqrt(8 (chi - cos theta)) dtheta,
// the building block of every modal kernel. Two series regimes plus the
// defining integral as independent oracle.
// ---------------------------------------------------------------------------

/// Regime switch: far series for chi >= 1 + delta_far, logarithmic expansion
/// below. The log expansion converges for chi < 3; the overlap window is used
/// by the tests to cross-validate the two representations.
inline constexpr double q_half_delta_far = 0.8;

/// Far-field series Q_{n-1/2}(chi) = sqrt(pi) Gamma(n+1/2)/Gamma(n+1)
///   2^{-n-1/2} chi^{-n-1/2} F(n/2+3/4, n/2+1/4; n+1; chi^{-2}),  chi > 1.
inline double q_half_far(int n, double chi, const SeriesControl& ctl = {1e-17, 20000}) {
    if (chi <= 1.0) throw DomainError("q_half_far: need chi > 1");
    double g = std::sqrt(std::numbers::pi); // Gamma(n+1/2)/Gamma(1/2) accumulates below
    double nfact = 1.0;
    for (int j = 0; j < n; ++j) {
        g *= (j + 0.5);
        nfact *= (j + 1.0);
    }
    const double pref = std::sqrt(std::numbers::pi) * g / nfact *
                        std::pow(2.0, -n - 0.5) * std::pow(chi, -n - 0.5);
    const double w = 1.0 / (chi * chi);
    double sum = 0.0, comp = 0.0, term = 1.0;
    int streak = 0;
    for (int k = 0; k < ctl.max_terms; ++k) {
        double y = term - comp, t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (k > 2 && std::abs(term) <= ctl.rel_tol * std::abs(sum) && ++streak >= 3)
            return pref * sum;
        if (!(std::abs(term) <= ctl.rel_tol * std::abs(sum))) streak = 0;
        term *= (0.5 * n + 0.75 + k) * (0.5 * n + 0.25 + k) * w / ((n + 1.0 + k) * (k + 1.0));
    }
    throw NonConvergence("q_half_far: max_terms reached");
}

/// Smooth/logarithmic decomposition near chi = 1:
///   Q_{n-1/2}(1 + d) = smooth + log_coef * log(d),   d = chi - 1 >= 0,
/// from the expansion
///   Q_{n-1/2}(chi) = (1/2 log((chi+1)/(chi-1)) - psi(n+1/2)) F(-n+1/2, n+1/2; 1; (1-chi)/2)
///                    + sum_k (-n+1/2)_k (n+1/2)_k psi(k+1) / (k!)^2 ((1-chi)/2)^k.
/// The printed form uses log(1+chi) - log(1-chi); for chi > 1 the real
/// continuation log((chi+1)/(chi-1)) is taken, which the integral oracle
/// confirms. Accepts d = 0 (diagonal limits of the kernel split).
struct QHalfSplit {
    double smooth;
    double log_coef;
};

inline QHalfSplit q_half_log_split(int n, double chi_m1,
                                   const SeriesControl& ctl = {1e-17, 20000}) {
    n = std::abs(n);
    if (chi_m1 < 0.0) throw DomainError("q_half_log_split: need chi >= 1");
    if (chi_m1 >= 2.0) throw NeighborhoodTooLarge("q_half_log_split: expansion needs chi < 3");
    const double u = -0.5 * chi_m1;
    double F = 0.0, Fc = 0.0, G = 0.0, Gc = 0.0;
    double term = 1.0, psi = -euler_gamma; // psi(k+1) starting at psi(1)
    int streak = 0;
    bool done = false;
    for (int k = 0; k < ctl.max_terms; ++k) {
        double y = term - Fc, t = F + y;
        Fc = (t - F) - y;
        F = t;
        double yg = term * psi - Gc, tg = G + yg;
        Gc = (tg - G) - yg;
        G = tg;
        double scale = std::max({std::abs(F), std::abs(G), 1.0});
        if (k > 2 && std::abs(term) * (1.0 + std::abs(psi)) <= ctl.rel_tol * scale && ++streak >= 3) {
            done = true;
            break;
        }
        if (!(std::abs(term) * (1.0 + std::abs(psi)) <= ctl.rel_tol * scale)) streak = 0;
        term *= (k + 0.5 - n) * (k + 0.5 + n) * u / ((k + 1.0) * (k + 1.0));
        psi += 1.0 / (k + 1.0);
    }
    if (!done) throw NonConvergence("q_half_log_split: max_terms reached");
    const double chi = 1.0 + chi_m1;
    return {(0.5 * std::log(chi + 1.0) - digamma_half_integer(2 * n + 1)) * F + G,
            -0.5 * F};
}

/// Regime selection: the log expansion's leading factor is P_{n-1/2}(chi),
/// which grows like (chi + sqrt(chi^2-1))^n, so for large n its cancellation
/// against the psi-series destroys double accuracy unless chi is close to 1.
/// The far series converges for every chi > 1 at a rate independent of n,
/// just more slowly near 1; it takes over beyond cosh(10/n).
inline double q_half_switch_point(int n) {
    return std::min(q_half_delta_far, std::cosh(10.0 / std::max(n, 1)) - 1.0);
}

/// Q_{n-1/2}(1 + chi_m1); preserves precision when chi - 1 is tiny.
inline double q_half_from_cm1(int n, double chi_m1, const SeriesControl& ctl = {1e-17, 20000}) {
    n = std::abs(n);
    if (!(chi_m1 > 0.0)) throw DomainError("q_half: need chi > 1");
    if (chi_m1 >= q_half_switch_point(n)) return q_half_far(n, 1.0 + chi_m1, ctl);
    QHalfSplit s = q_half_log_split(n, chi_m1, ctl);
    return s.smooth + s.log_coef * std::log(chi_m1);
}

/// Q_{n-1/2}(chi) for chi > 1, selecting the regime automatically.
inline double q_half(int n, double chi, const SeriesControl& ctl = {1e-17, 20000}) {
    if (!(chi > 1.0)) throw DomainError("q_half: need chi > 1");
    return q_half_from_cm1(n, chi - 1.0, ctl);
}

/// Defining integral, evaluated with the midpoint rule and interval doubling.
/// The integrand is smooth and 2pi-periodic, so the midpoint rule converges
/// geometrically; this routine is the module's independent oracle. Its
/// absolute noise floor in double precision is about 1e-15 times the n = 0
/// value at the same chi.
inline double q_half_integral(int n, double chi, double rel_tol = 1e-13) {
    n = std::abs(n);
    if (!(chi > 1.0)) throw DomainError("q_half_integral: need chi > 1");
    int N = std::max(32, 2 * n + 16);
    double prev = 0.0;
    bool have_prev = false;
    while (N <= (1 << 24)) {
        const double h = 2.0 * std::numbers::pi / N;
        double sum = 0.0, comp = 0.0;
        for (int j = 0; j < N; ++j) {
            double th = -std::numbers::pi + (j + 0.5) * h;
            double v = std::cos(n * th) / std::sqrt(8.0 * (chi - std::cos(th)));
            double y = v - comp, t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum *= h;
        if (have_prev && std::abs(sum - prev) <= rel_tol * std::max(std::abs(sum), 1e-300))
            return sum;
        prev = sum;
        have_prev = true;
        N *= 2;
    }
    return prev;
}

} // namespace npspec
