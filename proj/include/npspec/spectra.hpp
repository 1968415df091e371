#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include "npspec/kernels.hpp"
#include "npspec/legendre.hpp"
#include "npspec/quadrature.hpp"

namespace npspec {

// ---------------------------------------------------------------------------
// Closed-form spectral objects. For a cone of half-angle alpha and mode n the
// L^2 essential spectrum is traced by the closed curve
//
//   Pi_n(xi) = [P(c) P'(-c) - P(-c) P'(c)] / [P(-c) P'(c) + P(c) P'(-c)],
//
// with P = P^n_{i xi}, c = cos(alpha), P' the x-derivative; the energy-space
// essential spectrum is the interval swept by F_n(xi), the same ratio at
// degree i xi - 1/2. Both are ratios of products of Legendre functions whose
// magnitudes grow like exp(pi |xi|); ScaledComplex arithmetic keeps them exact.
// ---------------------------------------------------------------------------

namespace detail {

struct RatioParts {
    ScaledComplex num, den;
};

inline RatioParts curve_ratio_parts(int n, complexd lambda, double alpha) {
    const double c = std::cos(alpha);
    LegendreReduced pc = legendre_reduced(n, lambda, c);
    LegendreReduced pm = legendre_reduced(n, lambda, -c);
    // The Pochhammer prefactor and (for n = 0) the derivative deflation
    // -lambda(lambda+1) are common to both terms and cancel in the ratio.
    return {pc.value * pm.deriv - pm.value * pc.deriv,
            pm.value * pc.deriv + pc.value * pm.deriv};
}

} // namespace detail

/// Point of the L^2 essential-spectrum curve Pi_n at parameter xi.
inline complexd pi_point(double alpha, int n, double xi) {
    n = std::abs(n);
    detail::RatioParts r = detail::curve_ratio_parts(n, complexd(0.0, xi), alpha);
    if (std::abs(r.den.m) < 1e-300) throw DomainError("pi_point: degenerate denominator");
    return r.num.ratio(r.den);
}

/// Energy-space symbol F_n(xi); real by construction (degree i xi - 1/2 makes
/// every series coefficient positive). A non-real result signals a bug
/// upstream, so it is asserted rather than silently discarded.
inline double f_point(double alpha, int n, double xi) {
    n = std::abs(n);
    detail::RatioParts r = detail::curve_ratio_parts(n, complexd(-0.5, xi), alpha);
    if (std::abs(r.den.m) < 1e-300) throw DomainError("f_point: degenerate denominator");
    complexd v = r.num.ratio(r.den);
    if (std::abs(v.imag()) > 1e-8 * std::max(1e-30, std::abs(v.real())))
        throw NonRealValue("f_point: non-real value");
    return v.real();
}

/// The positive constant C_n(xi, alpha) relating the single-layer potential of
/// a generalized eigenfunction to its boundary trace,
///   C_n = -(2/sin a) P(c) P(-c) / [P(c) P'(-c) + P(-c) P'(c)],  degree i xi - 1/2.
inline double c_constant(double alpha, int n, double xi) {
    n = std::abs(n);
    const double c = std::cos(alpha);
    complexd lambda(-0.5, xi);
    LegendreReduced pc = legendre_reduced(n, lambda, c);
    LegendreReduced pm = legendre_reduced(n, lambda, -c);
    ScaledComplex num = pc.value * pm.value;
    ScaledComplex den = (pc.value * pm.deriv + pm.value * pc.deriv) * pc.deriv_scale;
    complexd v = num.ratio(den) * (-2.0 / std::sin(alpha));
    if (std::abs(v.imag()) > 1e-8 * std::abs(v.real()))
        throw NonRealValue("c_constant: non-real value");
    if (!(v.real() > 0.0)) throw DomainError("c_constant: non-positive value");
    return v.real();
}

/// Sampled essential-spectrum curve for one mode, ordered by xi, with both
/// tails extended until |value| < tail_tol. The curve closes through 0
/// (the value at xi = +-infinity).
struct SpectralCurve {
    int n = 0;
    double alpha = 0.0;
    std::vector<double> xi;
    std::vector<complexd> value;
    bool closed = false;

    double max_abs() const {
        double m = 0.0;
        for (auto& v : value) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Adaptive sampling of Pi_n: refine where the polygonal chord midpoint
/// deviates from the true midpoint value, extend tails until below tail_tol.
inline SpectralCurve sample_curve(double alpha, int n, double tail_tol = 1e-3,
                                  int max_points = 20000, double curve_tol = 2e-4) {
    n = std::abs(n);
    SpectralCurve c;
    c.n = n;
    c.alpha = alpha;

    double xi_max = 8.0;
    auto val = [&](double x) { return pi_point(alpha, n, x); };
    // extend until the tails are below tail_tol (conjugate symmetry: only
    // the positive tail needs probing)
    while (std::abs(val(xi_max)) >= tail_tol && xi_max < 1e7) xi_max *= 2.0;
    if (std::abs(val(xi_max)) >= tail_tol)
        throw BudgetExceeded("sample_curve: tail does not decay below tail_tol");

    // seed grid, uniform in asinh(xi) so the tails are coarser
    const int seed = 129;
    std::vector<std::pair<double, complexd>> pts;
    double smax = std::asinh(xi_max);
    for (int i = 0; i < seed; ++i) {
        double s = -smax + 2.0 * smax * i / (seed - 1);
        double x = std::sinh(s);
        pts.push_back({x, val(x)});
    }
    // chord-vs-midpoint refinement
    for (size_t i = 0; i + 1 < pts.size();) {
        if (int(pts.size()) >= max_points) throw BudgetExceeded("sample_curve: max_points");
        double xm = 0.5 * (pts[i].first + pts[i + 1].first);
        complexd vm = val(xm);
        complexd chord = 0.5 * (pts[i].second + pts[i + 1].second);
        double scale = std::max({std::abs(pts[i].second), std::abs(pts[i + 1].second), tail_tol});
        if (std::abs(vm - chord) > curve_tol * scale &&
            std::abs(pts[i].first - pts[i + 1].first) > 1e-9) {
            pts.insert(pts.begin() + i + 1, {xm, vm});
        } else {
            ++i;
        }
    }
    c.xi.reserve(pts.size());
    c.value.reserve(pts.size());
    for (auto& p : pts) {
        c.xi.push_back(p.first);
        c.value.push_back(p.second);
    }
    c.closed = true;
    return c;
}

/// Closed interval Sigma_n = [lo, hi] swept by F_n, with the extremizing xi
/// (reported for xi >= 0; F_n is even). The limit value 0 at xi = +-infinity
/// belongs to the closure.
struct EssentialInterval {
    int n = 0;
    double alpha = 0.0;
    double lo = 0.0, hi = 0.0;
    double xi_at_lo = 0.0, xi_at_hi = 0.0; // infinity encoded as xi_cut below
};

inline EssentialInterval essential_interval(double alpha, int n, double tol = 1e-10,
                                            double xi_cut = 50.0, int grid_points = 2001) {
    n = std::abs(n);
    EssentialInterval out;
    out.n = n;
    out.alpha = alpha;

    std::vector<double> xs(grid_points), fs(grid_points);
    for (int i = 0; i < grid_points; ++i) {
        xs[i] = xi_cut * i / double(grid_points - 1);
        fs[i] = f_point(alpha, n, xs[i]);
    }
    auto refine = [&](int i, bool maximize) {
        double a = xs[std::max(0, i - 1)], b = xs[std::min(grid_points - 1, i + 1)];
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
        double f1 = f_point(alpha, n, c1), f2 = f_point(alpha, n, c2);
        int guard = 0;
        while (b - a > tol && guard++ < 200) {
            bool takeLeft = maximize ? (f1 > f2) : (f1 < f2);
            if (takeLeft) {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - gr * (b - a);
                f1 = f_point(alpha, n, c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + gr * (b - a);
                f2 = f_point(alpha, n, c2);
            }
        }
        double xm = 0.5 * (a + b);
        return std::pair<double, double>(xm, f_point(alpha, n, xm));
    };

    // the tail limit 0 is always in the closure
    out.lo = 0.0;
    out.hi = 0.0;
    out.xi_at_lo = xi_cut;
    out.xi_at_hi = xi_cut;
    for (int i = 0; i < grid_points; ++i) {
        bool loc_max = (i == 0 || fs[i] >= fs[i - 1]) &&
                       (i == grid_points - 1 || fs[i] >= fs[i + 1]);
        bool loc_min = (i == 0 || fs[i] <= fs[i - 1]) &&
                       (i == grid_points - 1 || fs[i] <= fs[i + 1]);
        if (loc_max && fs[i] > out.hi) {
            auto [x, f] = refine(i, true);
            if (f > out.hi) {
                out.hi = f;
                out.xi_at_hi = x;
            }
        }
        if (loc_min && fs[i] < out.lo) {
            auto [x, f] = refine(i, false);
            if (f < out.lo) {
                out.lo = f;
                out.xi_at_lo = x;
            }
        }
    }
    return out;
}

/// All intervals Sigma_n for |n| <= n_max plus their merged union.
/// n_max < 0 selects automatic truncation: stop once the interval radius
/// drops below union_tol (the radii decay like 1/n).
struct EssentialSpectrumEnergy {
    std::vector<EssentialInterval> intervals;       // n = 0, 1, 2, ...
    std::vector<std::pair<double, double>> merged;  // disjoint union, ascending
};

inline EssentialSpectrumEnergy essential_spectrum_energy(double alpha, int n_max = -1,
                                                         double union_tol = 1e-2) {
    EssentialSpectrumEnergy out;
    int cap = (n_max >= 0) ? n_max : 128;
    for (int n = 0; n <= cap; ++n) {
        EssentialInterval iv = essential_interval(alpha, n);
        out.intervals.push_back(iv);
        if (n_max < 0 && n >= 1 && std::max(std::abs(iv.lo), std::abs(iv.hi)) < union_tol)
            break;
    }
    std::vector<std::pair<double, double>> ivs;
    for (auto& iv : out.intervals) ivs.push_back({iv.lo, iv.hi});
    std::sort(ivs.begin(), ivs.end());
    for (auto& iv : ivs) {
        if (!out.merged.empty() && iv.first <= out.merged.back().second)
            out.merged.back().second = std::max(out.merged.back().second, iv.second);
        else
            out.merged.push_back(iv);
    }
    return out;
}

/// Winding number of z with respect to a sampled curve, by summed argument
/// increments along the ordered samples, closing through 0 on both tails.
/// Segments whose turn exceeds pi/2 are refined by evaluating midpoints.
/// Throws OnCurve if z comes closer to the polyline than three times the
/// local sample spacing.
inline int winding_number(complexd z, const SpectralCurve& curve) {
    if (curve.value.empty()) throw DomainError("winding_number: empty curve");

    double total = 0.0;
    auto segment = [&](double xi_a, complexd a, double xi_b, complexd b, bool refinable,
                       auto&& self, int depth) -> void {
        complexd da = a - z, db = b - z;
        // distance from z to segment [a, b]
        complexd ab = b - a;
        double len2 = std::norm(ab);
        double dist;
        if (len2 == 0.0) {
            dist = std::abs(da);
        } else {
            double s = std::clamp(((z - a).real() * ab.real() + (z - a).imag() * ab.imag()) / len2,
                                  0.0, 1.0);
            dist = std::abs(z - (a + ab * s));
        }
        if (dist < 3.0 * std::sqrt(len2) && dist < 1e-3)
            throw OnCurve("winding_number: z within resolution of the curve");
        double dang = std::arg(db / da);
        if (std::abs(dang) > std::numbers::pi / 2 && refinable && depth < 40) {
            double xim = 0.5 * (xi_a + xi_b);
            complexd vm = pi_point(curve.alpha, curve.n, xim);
            self(xi_a, a, xim, vm, true, self, depth + 1);
            self(xim, vm, xi_b, b, true, self, depth + 1);
            return;
        }
        if (std::abs(dang) > std::numbers::pi / 2 && !refinable) {
            // closure segments join the decayed tails through 0; they cannot
            // be refined in xi but their endpoints are within tail_tol of 0
            if (std::abs(z) < 4.0 * std::max(std::abs(a), std::abs(b)))
                throw OnCurve("winding_number: z too close to the tail closure");
        }
        total += dang;
    };

    const size_t m = curve.value.size();
    segment(0, complexd(0, 0), curve.xi.front(), curve.value.front(), false, segment, 0);
    for (size_t i = 0; i + 1 < m; ++i)
        segment(curve.xi[i], curve.value[i], curve.xi[i + 1], curve.value[i + 1], true, segment, 0);
    segment(curve.xi.back(), curve.value.back(), 0, complexd(0, 0), false, segment, 0);

    // The index convention of the symbol calculus traverses the curve with
    // xi descending; relative to the ascending sweep above that reverses the
    // sign, making every winding nonpositive.
    return -int(std::lround(total / (2.0 * std::numbers::pi)));
}

/// Fredholm index of K^Gamma - z on L^2:
///   ind = W(z, Pi_0) + 2 sum_{n>=1} W(z, Pi_n),
/// truncated once max |Pi_n| (measured, decaying like 1/(n+1)) is safely
/// below |z|. Throws OnCurve when z lies on the essential spectrum.
inline int fredholm_index(double alpha, complexd z, double tol = 1e-3) {
    if (std::abs(z) <= tol) throw OnCurve("fredholm_index: z at the curve accumulation point 0");
    int index = 0;
    for (int n = 0; n <= 256; ++n) {
        SpectralCurve c = sample_curve(alpha, n, std::min(1e-3, 0.3 * std::abs(z)));
        if (c.max_abs() + tol < std::abs(z)) break; // this and all later curves wind 0
        int w = winding_number(z, c);
        index += (n == 0) ? w : 2 * w;
    }
    return index;
}

// ---------------------------------------------------------------------------
// Numerical Mellin transform of the cone kernel: the independent oracle tying
// the kernel formulas to the Legendre ratios,
//   sin(a) M[K_n^a(.,1)](zeta) = Pi-ratio at degree zeta-2,  0 < Re zeta < 3.
// Parity and homogeneity fold the transform onto (0, 1]:
//   M f(zeta) = int_0^1 (t^{zeta-1} + t^{2-zeta}) K_n(t,1) dt,
// integrated on dyadic panels toward 0 with a product-integration panel at
// the logarithmic endpoint singularity t = 1.
// ---------------------------------------------------------------------------

namespace detail {

/// integral over [a,b] of p(t) f(t), where f = smooth + log_coef log(1-t) and
/// the endpoint b = 1 carries the singularity.
template <class PowF, class SplitF>
complexd endpoint_log_panel(const PowF& p, const SplitF& fsplit, double a, int npts) {
    GaussRule rule(npts);
    std::vector<double> wlog = log_weights(rule, 1.0); // moments of log(1-x)
    const double h = (1.0 - a) / 2.0;
    complexd acc(0, 0);
    for (int j = 0; j < npts; ++j) {
        double t = a + (rule.x[j] + 1.0) * h;
        auto [sm, lc] = fsplit(t);
        complexd pw = p(t);
        // log(1-t) = log(h) + log(1-x)
        acc += pw * (sm + lc * std::log(h)) * rule.w[j] * h + pw * lc * wlog[j] * h;
    }
    return acc;
}

} // namespace detail

inline complexd mellin_symbol(double alpha, int n, complexd zeta,
                              double rel_tol = 1e-10) {
    n = std::abs(n);
    if (!(zeta.real() > 0.0 && zeta.real() < 3.0))
        throw DomainError("mellin_symbol: Re zeta must lie in (0, 3)");
    auto pw = [&](double t) -> complexd {
        return std::pow(t, zeta - 1.0) + std::pow(t, 2.0 - zeta);
    };
    const int npts = std::max(32, int(std::abs(zeta.imag()) / 4) + 24);
    // endpoint panel [0.6, 1] with the log split
    complexd total = detail::endpoint_log_panel(
        pw, [&](double t) { return cone_kernel_split(alpha, n, t); }, 0.6, npts);
    // dyadic panels [0.6 * 2^{-k-1}, 0.6 * 2^{-k}]
    GaussRule rule(npts);
    double hi = 0.6;
    for (int k = 0; k < 400; ++k) {
        double lo = hi / 2.0;
        complexd acc(0, 0);
        double magn = 0.0;
        for (int j = 0; j < npts; ++j) {
            double t = lo + (rule.x[j] + 1.0) * (hi - lo) / 2.0;
            complexd v = pw(t) * cone_kernel(alpha, n, t) * (rule.w[j] * (hi - lo) / 2.0);
            acc += v;
            magn += std::abs(v);
        }
        total += acc;
        // geometric decay of panel contributions justifies truncation
        if (magn < rel_tol * std::abs(total) && k > 4) break;
        hi = lo;
        if (k == 399) throw NonConvergence("mellin_symbol: tail truncation failed");
    }
    return std::sin(alpha) * total;
}

/// Numerical Mellin transform of w(t) = log|(1+t)/(1-t)| (the reference pair
/// with closed form (pi/zeta) tan(pi zeta / 2), -1 < Re zeta < 1), using the
/// same folded panel scheme; the w(1/t) = w(t) symmetry folds the transform
/// onto (0,1] with exponent pair (zeta-1, -zeta-1).
inline complexd mellin_log_ratio(complexd zeta, double rel_tol = 1e-12) {
    if (!(zeta.real() > -1.0 && zeta.real() < 1.0))
        throw DomainError("mellin_log_ratio: Re zeta must lie in (-1, 1)");
    auto pw = [&](double t) -> complexd {
        return std::pow(t, zeta - 1.0) + std::pow(t, -zeta - 1.0);
    };
    const int npts = std::max(32, int(std::abs(zeta.imag()) / 4) + 24);
    // w(t) = log(1+t) - log(1-t): smooth part log(1+t), log coefficient -1
    complexd total = detail::endpoint_log_panel(
        pw, [](double t) { return KernelSplit{std::log(1.0 + t), -1.0}; }, 0.6, npts);
    GaussRule rule(npts);
    double hi = 0.6;
    for (int k = 0; k < 600; ++k) {
        double lo = hi / 2.0;
        complexd acc(0, 0);
        double magn = 0.0;
        for (int j = 0; j < npts; ++j) {
            double t = lo + (rule.x[j] + 1.0) * (hi - lo) / 2.0;
            complexd v = pw(t) * std::log((1.0 + t) / (1.0 - t)) * (rule.w[j] * (hi - lo) / 2.0);
            acc += v;
            magn += std::abs(v);
        }
        total += acc;
        if (magn < rel_tol * std::abs(total) && k > 4) break;
        hi = lo;
    }
    return total;
}

} // namespace npspec
