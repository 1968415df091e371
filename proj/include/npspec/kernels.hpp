#pragma once

#include <cmath>
#include <numbers>

#include "npspec/geometry.hpp"
#include "npspec/legendre.hpp"

namespace npspec {

/// Modal kernels of the axisymmetric layer potentials. All kernels here are
/// azimuthal Fourier coefficients in the convention
///
///   k_n(t,t') = (1/2pi) int_0^{2pi} e^{-i n theta} K(t, theta, t', 0) dtheta,
///
/// which is the convention in which the modal operators act as
///   (K_n f)(t) = int_0^1 k_n(t,t') f(t') gamma1(t')|gamma'(t')| dt'
/// and in which sin(alpha) M[K_n(.,1)](zeta) equals the Legendre ratios of the
/// spectral formulas. Negative modes coincide with |n|.
///
/// Closed forms, with Q_v the half-integer Legendre function of the second
/// kind and chi = 1 + |gamma - gamma'|^2 / (2 gamma1 gamma1'):
///
///   s_n = Q_{n-1/2}(chi) / (pi sqrt(gamma1 gamma1'))
///   k_n = [ w1 (Q_{n-1/2} + R_n) - w2 R_n ] / (pi sqrt(gamma1 gamma1'))
///   R_n = (2n-1)/(chi+1) (chi Q_{n-1/2} - Q_{n-3/2})
///   w1  = gamma2'(t) / (2 gamma1(t) |gamma'(t)|)
///   w2  = |gamma - gamma'| K^planar(t,t')   (smooth across the diagonal)
///
/// Both kernels have a log|t - t'| diagonal singularity, split off exactly via
/// the logarithmic expansion of Q.

/// Value plus diagonal log coefficient: kernel(t,t') = smooth + log_coef * log|t-t'|.
struct KernelSplit {
    double smooth;
    double log_coef;
};

namespace detail {

inline double w1_factor(const Generatrix& g, double t) {
    double g1 = g.point(t).x;
    return g.deriv(t).z / (2.0 * g1 * g.deriv(t).norm());
}

/// c(t,t') = (chi - 1)/(t - t')^2, smooth and positive near the diagonal.
inline double chi_curvature(const Generatrix& g, double t, double tp, double chi_m1) {
    if (t == tp) {
        double g1 = g.point(t).x;
        return g.deriv(t).norm2() / (2.0 * g1 * g1);
    }
    return chi_m1 / ((t - tp) * (t - tp));
}

} // namespace detail

/// Single-layer modal kernel S_n(t,t').
inline double s_kernel(const Generatrix& g, int n, double t, double tp) {
    if (t == tp) throw DiagonalError("s_kernel: t == t'");
    double g1 = g.point(t).x, g1p = g.point(tp).x;
    return q_half_from_cm1(std::abs(n), chi_minus_one(g, t, tp)) /
           (std::numbers::pi * std::sqrt(g1 * g1p));
}

/// Diagonal split of S_n near t' = t (including t' = t itself).
inline KernelSplit s_kernel_split(const Generatrix& g, int n, double t, double tp) {
    n = std::abs(n);
    double g1 = g.point(t).x, g1p = g.point(tp).x;
    double cm1 = (t == tp) ? 0.0 : chi_minus_one(g, t, tp);
    if (cm1 >= 1.2)
        throw NeighborhoodTooLarge("s_kernel_split: chi leaves the log regime");
    QHalfSplit q = q_half_log_split(n, cm1);
    double logc = std::log(detail::chi_curvature(g, t, tp, cm1));
    double pref = 1.0 / (std::numbers::pi * std::sqrt(g1 * g1p));
    // log(chi-1) = 2 log|t-t'| + log c
    return {pref * (q.smooth + q.log_coef * logc), pref * 2.0 * q.log_coef};
}

/// Double-layer modal kernel K_n(t,t').
inline double k_kernel(const Generatrix& g, int n, double t, double tp) {
    if (t == tp) throw DiagonalError("k_kernel: t == t'");
    n = std::abs(n);
    double cm1 = chi_minus_one(g, t, tp);
    double g1 = g.point(t).x, g1p = g.point(tp).x;
    double pref = 1.0 / (std::numbers::pi * std::sqrt(g1 * g1p));
    double w1 = detail::w1_factor(g, t);
    double w2 = scaled_planar_kernel(g, t, tp);
    double Qn = q_half_from_cm1(n, cm1);
    double Qm = q_half_from_cm1(std::abs(n - 1), cm1);
    double R = (2.0 * n - 1.0) / (cm1 + 2.0) * ((1.0 + cm1) * Qn - Qm);
    return pref * (w1 * (Qn + R) - w2 * R);
}

/// Diagonal split of K_n near t' = t: k_n = smooth + log_coef log|t-t'|, both
/// factors smooth on a neighbourhood small enough that chi stays in the log
/// regime (graded meshes guarantee chi - 1 <~ 0.6 on the blocks that use it).
inline KernelSplit k_kernel_split(const Generatrix& g, int n, double t, double tp) {
    n = std::abs(n);
    double g1 = g.point(t).x, g1p = g.point(tp).x;
    double cm1 = (t == tp) ? 0.0 : chi_minus_one(g, t, tp);
    if (cm1 >= 1.2)
        throw NeighborhoodTooLarge("k_kernel_split: chi leaves the log regime");
    QHalfSplit qn = q_half_log_split(n, cm1);
    QHalfSplit qm = q_half_log_split(std::abs(n - 1), cm1);
    double logc = std::log(detail::chi_curvature(g, t, tp, cm1));
    double An = qn.smooth + qn.log_coef * logc, Bn = 2.0 * qn.log_coef;
    double Am = qm.smooth + qm.log_coef * logc, Bm = 2.0 * qm.log_coef;
    double chi_v = 1.0 + cm1;
    double fac = (2.0 * n - 1.0) / (chi_v + 1.0);
    double AR = fac * (chi_v * An - Am), BR = fac * (chi_v * Bn - Bm);
    double w1 = detail::w1_factor(g, t);
    double w2 = scaled_planar_kernel(g, t, tp);
    double pref = 1.0 / (std::numbers::pi * std::sqrt(g1 * g1p));
    return {pref * (w1 * (An + AR) - w2 * AR), pref * (w1 * (Bn + BR) - w2 * BR)};
}

/// Kernel K_n^alpha(t, 1) of the infinite straight cone,
///   (1/(2 pi tan(a) sin(a))) [(2n chi + 1) Q_{n-1/2} - (2n-1) Q_{n-3/2}] / (t^{3/2}(chi+1)),
/// chi = 1 + (t-1)^2/(2 sin^2(a) t). Homogeneity gives the two-argument kernel
/// as K_n^alpha(t,t') = (1/t'^2) K_n^alpha(t/t', 1).
inline double cone_kernel(double alpha, int n, double t) {
    if (!(t > 0.0)) throw DomainError("cone_kernel: need t > 0");
    if (t == 1.0) throw DiagonalError("cone_kernel: t == 1");
    n = std::abs(n);
    double sa = std::sin(alpha);
    double cm1 = (t - 1.0) * (t - 1.0) / (2.0 * sa * sa * t);
    double c = 1.0 + cm1;
    double Qn = q_half_from_cm1(n, cm1), Qm = q_half_from_cm1(std::abs(n - 1), cm1);
    return ((2.0 * n * c + 1.0) * Qn - (2.0 * n - 1.0) * Qm) /
           (std::pow(t, 1.5) * (c + 1.0)) / (2.0 * std::numbers::pi * std::tan(alpha) * sa);
}

/// Split of the cone kernel at its log singularity t = 1:
/// cone_kernel = smooth + log_coef * log|t-1|.
inline KernelSplit cone_kernel_split(double alpha, int n, double t) {
    n = std::abs(n);
    double sa = std::sin(alpha);
    double cm1 = (t - 1.0) * (t - 1.0) / (2.0 * sa * sa * t);
    if (cm1 >= 1.2) throw NeighborhoodTooLarge("cone_kernel_split: chi leaves the log regime");
    // chi - 1 = (t-1)^2 c(t), c = 1/(2 sin^2(a) t): log(chi-1) = 2 log|t-1| - log(2 sin^2(a) t)
    double logc = -std::log(2.0 * sa * sa * t);
    QHalfSplit qn = q_half_log_split(n, cm1);
    QHalfSplit qm = q_half_log_split(std::abs(n - 1), cm1);
    double An = qn.smooth + qn.log_coef * logc, Bn = 2.0 * qn.log_coef;
    double Am = qm.smooth + qm.log_coef * logc, Bm = 2.0 * qm.log_coef;
    double chi_v = 1.0 + cm1;
    double pref = 1.0 / (std::pow(t, 1.5) * (chi_v + 1.0) * 2.0 * std::numbers::pi * std::tan(alpha) * sa);
    return {pref * ((2.0 * n * chi_v + 1.0) * An - (2.0 * n - 1.0) * Am),
            pref * ((2.0 * n * chi_v + 1.0) * Bn - (2.0 * n - 1.0) * Bm)};
}


/// Fused evaluation of both modal kernels at one (t, t') pair: the single-layer
/// kernel reuses the Q_{n-1/2} value and chi of the double-layer one, which
/// matters in matrix assembly where these dominate the cost.
struct ModalKernelPair {
    double k, s;
};

struct ModalKernelPairSplit {
    KernelSplit k, s;
};

/// Per-target geometry reused across a whole matrix row.
struct TargetGeom {
    double t, g1, w1;
    const Generatrix* gen;

    TargetGeom(const Generatrix& g, double ti) : t(ti), gen(&g) {
        g1 = g.point(ti).x;
        w1 = detail::w1_factor(g, ti);
    }
};

inline ModalKernelPair modal_kernel_pair(const TargetGeom& tg, int n, double tp) {
    const Generatrix& g = *tg.gen;
    double g1p = g.point(tp).x;
    double cm1 = chi_minus_one(g, tg.t, tp);
    double pref = 1.0 / (std::numbers::pi * std::sqrt(tg.g1 * g1p));
    double Qn = q_half_from_cm1(n, cm1);
    double Qm = q_half_from_cm1(std::abs(n - 1), cm1);
    double R = (2.0 * n - 1.0) / (cm1 + 2.0) * ((1.0 + cm1) * Qn - Qm);
    double w2 = scaled_planar_kernel(g, tg.t, tp);
    return {pref * (tg.w1 * (Qn + R) - w2 * R), pref * Qn};
}

inline ModalKernelPairSplit modal_kernel_pair_split(const TargetGeom& tg, int n, double tp) {
    const Generatrix& g = *tg.gen;
    double g1p = g.point(tp).x;
    double cm1 = (tg.t == tp) ? 0.0 : chi_minus_one(g, tg.t, tp);
    if (cm1 >= 1.2)
        throw NeighborhoodTooLarge("modal_kernel_pair_split: chi leaves the log regime");
    QHalfSplit qn = q_half_log_split(n, cm1);
    QHalfSplit qm = q_half_log_split(std::abs(n - 1), cm1);
    double logc = std::log(detail::chi_curvature(g, tg.t, tp, cm1));
    double An = qn.smooth + qn.log_coef * logc, Bn = 2.0 * qn.log_coef;
    double Am = qm.smooth + qm.log_coef * logc, Bm = 2.0 * qm.log_coef;
    double chi_v = 1.0 + cm1;
    double fac = (2.0 * n - 1.0) / (chi_v + 1.0);
    double AR = fac * (chi_v * An - Am), BR = fac * (chi_v * Bn - Bm);
    double w2 = scaled_planar_kernel(g, tg.t, tp);
    double pref = 1.0 / (std::numbers::pi * std::sqrt(tg.g1 * g1p));
    ModalKernelPairSplit out;
    out.k = {pref * (tg.w1 * (An + AR) - w2 * AR), pref * (tg.w1 * (Bn + BR) - w2 * BR)};
    out.s = {pref * (An + 0.0) - pref * (An - An), pref * Bn}; // s = pref*(An) + pref*Bn log
    out.s = {pref * An, pref * Bn};
    return out;
}

/// Kernel of the similarity-transformed operator K~_n = U K_n U^{-1},
/// U f(t) = t f(t); same spectrum, better-behaved densities near the tip.
inline double transformed_kernel(const Generatrix& g, int n, double t, double tp) {
    return t * k_kernel(g, n, t, tp) / tp;
}

/// Diagonal log split of K_n around a fixed interior t0, for callers that
/// want the decomposition itself: k_n(t0 + s, t0) = A(s) + B(s) log|s|.
struct LogSplitAt {
    double t0;
    const Generatrix* gen;
    int mode;
    KernelSplit at(double t) const { return k_kernel_split(*gen, mode, t, t0); }
};

inline LogSplitAt log_split(const Generatrix& g, int n, double t0) {
    if (!(t0 > 0.0 && t0 < 1.0)) throw DomainError("log_split: t0 must be interior");
    return {t0, &g, n};
}

} // namespace npspec
