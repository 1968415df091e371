#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "npspec/errors.hpp"
#include "npspec/quadrature.hpp"

namespace npspec {

struct Vec2 {
    double x = 0.0, z = 0.0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, z + o.z}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, z - o.z}; }
    Vec2 operator*(double s) const { return {x * s, z * s}; }
    double dot(Vec2 o) const { return x * o.x + z * o.z; }
    double norm2() const { return x * x + z * z; }
    double norm() const { return std::sqrt(norm2()); }
};

/// Profile curve gamma(t) = (gamma1, gamma2), t in [0, 1], generating a closed
/// surface of revolution around the z-axis with a conical point at t = 0 of
/// half-opening angle alpha. gamma1 > 0 on (0, 1); gamma(1) sits on the axis.
class Generatrix {
public:
    using Fn = std::function<Vec2(double)>;

    Generatrix(Fn f, Fn df, Fn d2f, double alpha, std::string key, bool closed = true)
        : f_(std::move(f)), df_(std::move(df)), d2f_(std::move(d2f)), alpha_(alpha),
          key_(std::move(key)), closed_(closed) {
        if (closed_) validate();
    }

    Vec2 point(double t) const { return f_(t); }
    Vec2 deriv(double t) const { return df_(t); }
    Vec2 deriv2(double t) const { return d2f_(t); }
    double alpha() const { return alpha_; }
    bool closed() const { return closed_; }

    /// |gamma'(0)|; the hypotheses normalize this to 1 but the reference
    /// experiment curve has pi/2. All spectral quantities are invariant under
    /// reparametrization, so it is recorded rather than enforced.
    double tip_speed() const { return df_(0.0).norm(); }

    /// Identifier for matrix caches: geometry family plus parameters.
    const std::string& cache_key() const { return key_; }

private:
    void validate() const {
        Vec2 p0 = f_(0.0);
        if (p0.norm() > 1e-12) throw DomainError("generatrix: gamma(0) != 0");
        Vec2 p1 = f_(1.0);
        if (std::abs(p1.x) > 1e-12 || p1.z <= 0.0)
            throw DomainError("generatrix: gamma(1) must lie on the positive axis");
        for (double t : {0.1, 0.3, 0.5, 0.7, 0.9})
            if (f_(t).x <= 0.0) throw DomainError("generatrix: gamma1 must be positive inside (0,1)");
        Vec2 d0 = df_(0.0);
        double ang = std::atan2(d0.x, d0.z); // angle with the z-axis
        if (std::abs(ang - alpha_) > 1e-3)
            throw DomainError("generatrix: tangent at the tip does not match alpha");
    }

    Fn f_, df_, d2f_;
    double alpha_;
    std::string key_;
    bool closed_;
};

/// The reference experiment family
///   gamma(t) = sin(pi t / 2) (sin((1-t) alpha), cos((1-t) alpha)),
/// a drop-shaped surface with cone half-angle alpha at the origin.
inline Generatrix paper_curve(double alpha) {
    if (!(alpha > 0.0 && alpha < std::numbers::pi) || alpha == std::numbers::pi / 2)
        throw DomainError("paper_curve: need alpha in (0,pi) \\ {pi/2}; use sphere_curve for pi/2");
    const double p = std::numbers::pi / 2;
    auto f = [alpha, p](double t) -> Vec2 {
        double s = std::sin(p * t);
        return {s * std::sin((1 - t) * alpha), s * std::cos((1 - t) * alpha)};
    };
    auto df = [alpha, p](double t) -> Vec2 {
        double s = std::sin(p * t), c = std::cos(p * t);
        double sa = std::sin((1 - t) * alpha), ca = std::cos((1 - t) * alpha);
        return {p * c * sa - alpha * s * ca, p * c * ca + alpha * s * sa};
    };
    auto d2f = [alpha, p](double t) -> Vec2 {
        double s = std::sin(p * t), c = std::cos(p * t);
        double sa = std::sin((1 - t) * alpha), ca = std::cos((1 - t) * alpha);
        double q = p * p + alpha * alpha;
        return {-q * s * sa - 2 * p * alpha * c * ca, -q * s * ca + 2 * p * alpha * c * sa};
    };
    return {f, df, d2f, alpha, "paper_curve:" + std::to_string(alpha)};
}

/// alpha = pi/2 member of the family: a sphere of radius 1/2 centred at
/// (0, 1/2). Smooth everywhere; the exact-eigenvalue oracle geometry.
inline Generatrix sphere_curve() {
    const double pi = std::numbers::pi;
    auto f = [pi](double t) -> Vec2 { return {0.5 * std::sin(pi * t), 0.5 * (1 - std::cos(pi * t))}; };
    auto df = [pi](double t) -> Vec2 { return {0.5 * pi * std::cos(pi * t), 0.5 * pi * std::sin(pi * t)}; };
    auto d2f = [pi](double t) -> Vec2 {
        return {-0.5 * pi * pi * std::sin(pi * t), 0.5 * pi * pi * std::cos(pi * t)};
    };
    return {f, df, d2f, pi / 2, "sphere_curve"};
}

/// Straight cone gamma(t) = t (sin alpha, cos alpha). Not a closed surface;
/// used as the homogeneous model in kernel tests and the Mellin transform.
inline Generatrix straight_cone(double alpha) {
    double sa = std::sin(alpha), ca = std::cos(alpha);
    return {[sa, ca](double t) -> Vec2 { return {sa * t, ca * t}; },
            [sa, ca](double) -> Vec2 { return {sa, ca}; },
            [](double) -> Vec2 { return {0.0, 0.0}; },
            alpha, "straight_cone:" + std::to_string(alpha), /*closed=*/false};
}

/// Outward normal of the surface restricted to the theta = 0 half-plane:
/// (nu_rho, nu_z) = (gamma2', -gamma1') / |gamma'|. The sign is fixed by the
/// straight-cone normal (cos alpha, -sin alpha).
inline Vec2 outward_normal_profile(const Generatrix& g, double t) {
    if (!(t > 0.0 && t < 1.0) && g.closed())
        throw DomainError("outward_normal_profile: t must be in (0,1)");
    Vec2 d = g.deriv(t);
    double n = d.norm();
    return {d.z / n, -d.x / n};
}

/// Surface element density: d sigma = gamma1 |gamma'| dt dtheta.
inline double surface_element(const Generatrix& g, double t) {
    return g.point(t).x * g.deriv(t).norm();
}

namespace detail {

inline const GaussRule& gauss12() {
    static const GaussRule r(12);
    return r;
}

/// (gamma(t) - gamma(tp)) / (t - tp) as an integral of gamma', avoiding the
/// cancellation of subtracting nearby points deep in a graded mesh.
inline Vec2 mean_deriv(const Generatrix& g, double t, double tp) {
    const GaussRule& r = gauss12();
    double mid = 0.5 * (t + tp), hl = 0.5 * (t - tp);
    Vec2 e{0, 0};
    for (size_t i = 0; i < r.x.size(); ++i) e = e + g.deriv(mid + r.x[i] * hl) * (0.5 * r.w[i]);
    return e;
}

/// <gamma(t)-gamma(tp), nu(t)> / (t-tp)^2 through the integral form of the
/// Taylor remainder; finite at tp = t with value -<gamma'', nu>/2.
inline double curvature_numer(const Generatrix& g, double t, double tp, Vec2 nu) {
    const GaussRule& r = gauss12();
    double v = 0.0;
    for (size_t i = 0; i < r.x.size(); ++i) {
        double s = 0.5 * (r.x[i] + 1.0);
        v += 0.5 * r.w[i] * (1.0 - s) * g.deriv2(t + s * (tp - t)).dot(nu);
    }
    return -v;
}

inline bool use_safe_diff(double t, double tp) {
    return std::abs(t - tp) < 0.25 * std::max({std::abs(t), std::abs(tp), 1e-3});
}

} // namespace detail

/// chi(t,t') = 1 + |gamma(t)-gamma(t')|^2 / (2 gamma1(t) gamma1(t')), the
/// argument of every Q_{n-1/2}; >= 1 with equality only on the diagonal.
/// chi_minus_one avoids forming chi-1 by subtraction near the diagonal.
inline double chi_minus_one(const Generatrix& g, double t, double tp) {
    double g1 = g.point(t).x, g1p = g.point(tp).x;
    if (g1 <= 0.0 || g1p <= 0.0) throw DomainError("chi: gamma1 must be positive");
    if (detail::use_safe_diff(t, tp)) {
        Vec2 e = detail::mean_deriv(g, t, tp);
        return (t - tp) * (t - tp) * e.norm2() / (2.0 * g1 * g1p);
    }
    Vec2 d = g.point(t) - g.point(tp);
    return d.norm2() / (2.0 * g1 * g1p);
}

inline double chi(const Generatrix& g, double t, double tp) {
    return 1.0 + chi_minus_one(g, t, tp);
}

/// The planar restriction K^Gamma(t,0,t',0) = <r - r', nu_r> / |r' - r|^3 of
/// the double-layer kernel, with both points in the theta = 0 half-plane.
inline double planar_kernel(const Generatrix& g, double t, double tp) {
    if (t == tp) throw DiagonalError("planar_kernel: t == t'");
    Vec2 nu = outward_normal_profile(g, t);
    Vec2 d = g.point(t) - g.point(tp);
    return d.dot(nu) / std::pow(d.norm(), 3);
}

/// |gamma(t)-gamma(t')| * planar_kernel = <gamma-gamma', nu(t)> / |gamma-gamma'|^2,
/// smooth across the diagonal; limit -<gamma''(t), nu(t)> / (2 |gamma'(t)|^2).
inline double scaled_planar_kernel(const Generatrix& g, double t, double tp) {
    Vec2 nu = outward_normal_profile(g, t);
    if (detail::use_safe_diff(t, tp)) {
        Vec2 e = detail::mean_deriv(g, t, tp);
        return detail::curvature_numer(g, t, tp, nu) / e.norm2();
    }
    Vec2 d = g.point(t) - g.point(tp);
    return d.dot(nu) / d.norm2();
}

/// Enclosed volume via the surface-of-revolution divergence formula
/// V = pi int_0^1 gamma1(t)^2 gamma2'(t) dt.
inline double volume(const Generatrix& g) {
    double v = std::numbers::pi *
               integrate_adaptive([&g](double t) {
                   double g1 = g.point(t).x;
                   return g1 * g1 * g.deriv(t).z;
               }, 0.0, 1.0, 1e-13, 1e-15);
    if (v <= 0.0) throw DomainError("volume: nonpositive (mis-oriented generatrix?)");
    return v;
}

/// Generatrix from sampled profile data by natural cubic spline interpolation
/// (the only supported interpolation order is 3). Samples must start at the
/// conical point (0,0) and end on the axis.
inline Generatrix generatrix_from_samples(const std::vector<double>& ts,
                                          const std::vector<double>& g1s,
                                          const std::vector<double>& g2s,
                                          double alpha, int order = 3,
                                          std::string key = "profile") {
    if (order != 3) throw ConfigError("profile interpolation: only order 3 (cubic) is supported");
    size_t n = ts.size();
    if (n < 4 || g1s.size() != n || g2s.size() != n)
        throw ConfigError("profile interpolation: need >= 4 samples of equal length");
    for (size_t i = 1; i < n; ++i)
        if (!(ts[i] > ts[i - 1])) throw ConfigError("profile interpolation: t must be increasing");

    // natural cubic spline second derivatives
    auto spline_m = [n](const std::vector<double>& xs, const std::vector<double>& ys) {
        std::vector<double> m(n, 0.0), u(n, 0.0), l(n, 1.0);
        std::vector<double> z(n, 0.0);
        for (size_t i = 1; i + 1 < n; ++i) {
            double hi = xs[i] - xs[i - 1], hi1 = xs[i + 1] - xs[i];
            double li = 2.0 * (xs[i + 1] - xs[i - 1]) - hi * u[i - 1];
            u[i] = hi1 / li;
            double a = 6.0 * ((ys[i + 1] - ys[i]) / hi1 - (ys[i] - ys[i - 1]) / hi);
            z[i] = (a - hi * z[i - 1]) / li;
            l[i] = li;
        }
        for (size_t i = n - 1; i-- > 0;) m[i] = z[i] - u[i] * m[i + 1];
        return m;
    };
    auto m1 = spline_m(ts, g1s), m2 = spline_m(ts, g2s);

    struct Spline {
        std::vector<double> x, y, m;
        double eval(double t, int d) const {
            size_t n = x.size();
            size_t i = 1;
            while (i + 1 < n && t > x[i]) ++i;
            double h = x[i] - x[i - 1];
            double A = (x[i] - t) / h, B = (t - x[i - 1]) / h;
            if (d == 0)
                return A * y[i - 1] + B * y[i] +
                       ((A * A * A - A) * m[i - 1] + (B * B * B - B) * m[i]) * h * h / 6.0;
            if (d == 1)
                return (y[i] - y[i - 1]) / h -
                       (3 * A * A - 1) / 6.0 * h * m[i - 1] + (3 * B * B - 1) / 6.0 * h * m[i];
            return A * m[i - 1] + B * m[i];
        }
    };
    auto s1 = std::make_shared<Spline>(Spline{ts, g1s, m1});
    auto s2 = std::make_shared<Spline>(Spline{ts, g2s, m2});
    return {[s1, s2](double t) -> Vec2 { return {s1->eval(t, 0), s2->eval(t, 0)}; },
            [s1, s2](double t) -> Vec2 { return {s1->eval(t, 1), s2->eval(t, 1)}; },
            [s1, s2](double t) -> Vec2 { return {s1->eval(t, 2), s2->eval(t, 2)}; },
            alpha, std::move(key)};
}

} // namespace npspec
