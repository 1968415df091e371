#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "npspec/errors.hpp"

namespace npspec {

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// three-term recurrence. Accurate to machine precision for the orders used
/// here (16..64).
struct GaussRule {
    std::vector<double> x, w;

    explicit GaussRule(int npts) : x(npts), w(npts) {
        const int n = npts;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double xi = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double p1 = 0.0, dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                p1 = 1.0;
                double p2 = 0.0;
                for (int k = 0; k < n; ++k) {
                    double p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * k + 1.0) * xi * p2 - k * p3) / (k + 1.0);
                }
                dp = n * (xi * p1 - p2) / (xi * xi - 1.0);
                double dx = p1 / dp;
                xi -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            x[i] = -xi;
            x[n - 1 - i] = xi;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
        }
    }
};

/// Legendre polynomial values P_0..P_mmax at x.
inline std::vector<double> legendre_p_row(int m_max, double x) {
    std::vector<double> P(m_max + 1);
    P[0] = 1.0;
    if (m_max >= 1) P[1] = x;
    for (int k = 1; k < m_max; ++k)
        P[k + 1] = ((2.0 * k + 1.0) * x * P[k] - k * P[k - 1]) / (k + 1.0);
    return P;
}

/// Legendre functions of the second kind Q_0..Q_mmax at x0: Ferrers inside
/// (-1, 1), the standard branch outside. Upward recurrence is used where both
/// solutions stay comparable; outside that window the minimal solution Q is
/// recovered by downward (Miller) recurrence normalized against Q_0.
inline std::vector<double> legendre_q_row(int m_max, double x0) {
    if (x0 < -1.0) {
        std::vector<double> Q = legendre_q_row(m_max, -x0);
        for (int k = 0; k <= m_max; ++k)
            if (k % 2 == 0) Q[k] = -Q[k];
        return Q;
    }
    std::vector<double> Q(m_max + 1);
    if (x0 == 1.0) throw DomainError("legendre_q_row: x0 == 1");
    if (std::abs(x0) < 1.0) {
        Q[0] = 0.5 * std::log((1.0 + x0) / (1.0 - x0));
        if (m_max >= 1) Q[1] = x0 * Q[0] - 1.0;
        for (int k = 1; k < m_max; ++k)
            Q[k + 1] = ((2.0 * k + 1.0) * x0 * Q[k] - k * Q[k - 1]) / (k + 1.0);
        return Q;
    }
    const double rho = x0 + std::sqrt(x0 * x0 - 1.0);
    if (2.0 * m_max * std::log(rho) < 12.0 * std::numbers::ln10) {
        Q[0] = 0.5 * std::log((x0 + 1.0) / (x0 - 1.0));
        if (m_max >= 1) Q[1] = x0 * Q[0] - 1.0;
        for (int k = 1; k < m_max; ++k)
            Q[k + 1] = ((2.0 * k + 1.0) * x0 * Q[k] - k * Q[k - 1]) / (k + 1.0);
        return Q;
    }
    const int extra = std::max(20, int(std::ceil(36.0 / std::log(rho))));
    const int k_top = m_max + extra;
    double qp1 = 0.0, q = 1.0; // unnormalized minimal solution, from above
    std::vector<double> raw(m_max + 1);
    for (int k = k_top; k >= 1; --k) {
        double qm1 = ((2.0 * k + 1.0) * x0 * q - (k + 1.0) * qp1) / double(k);
        qp1 = q;
        q = qm1;
        if (k - 1 <= m_max) raw[k - 1] = q;
        if (std::abs(q) > 1e280) { // rescale to avoid overflow of the recursion
            double s = 1e-280;
            qp1 *= s;
            q *= s;
            for (int j = std::max(0, k - 1); j <= m_max; ++j) raw[j] *= s;
        }
    }
    const double Q0 = 0.5 * std::log((x0 + 1.0) / (x0 - 1.0));
    const double scale = Q0 / raw[0];
    for (int k = 0; k <= m_max; ++k) Q[k] = raw[k] * scale;
    return Q;
}

/// Product-integration weights for a logarithmic factor: returns W such that
///   sum_q W[q] g(x[q])  ~=  int_{-1}^{1} g(x) log|x - x0| dx
/// exactly when g is a polynomial of degree < rule.x.size(). The target x0 may
/// lie inside [-1,1] (self panel) or outside (neighbouring panel). Uses the
/// Legendre moments q_m = int P_m(x) log|x-x0| dx, which reduce to Q-functions
/// after integration by parts.
inline std::vector<double> log_weights(const GaussRule& rule, double x0) {
    const int N = int(rule.x.size());
    std::vector<double> q(N);
    q[0] = -2.0;
    if (x0 != 1.0) q[0] += (1.0 - x0) * std::log(std::abs(1.0 - x0));
    if (x0 != -1.0) q[0] += (1.0 + x0) * std::log(std::abs(1.0 + x0));
    if (x0 == 1.0 || x0 == -1.0) {
        // endpoint moments: int P_m(x) log(1 -+ x) dx = 2 log 2 - 2 (m = 0),
        // -2 (+-1)^m / (m (m+1)) otherwise
        q[0] = 2.0 * std::numbers::ln2 - 2.0;
        for (int m = 1; m < N; ++m) {
            q[m] = -2.0 / (double(m) * (m + 1.0));
            if (x0 == -1.0 && m % 2 == 1) q[m] = -q[m];
        }
    } else {
        std::vector<double> Q = legendre_q_row(N, x0);
        for (int m = 1; m < N; ++m) q[m] = 2.0 * (Q[m + 1] - Q[m - 1]) / (2.0 * m + 1.0);
    }
    std::vector<double> W(N, 0.0);
    for (int j = 0; j < N; ++j) {
        std::vector<double> P = legendre_p_row(N - 1, rule.x[j]);
        double s = 0.0;
        for (int m = 0; m < N; ++m) s += (2.0 * m + 1.0) / 2.0 * P[m] * q[m];
        W[j] = rule.w[j] * s;
    }
    return W;
}

/// Adaptive Gauss-Kronrod 15(7) on [a, b].
namespace detail {
inline const double gk15_xgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline const double gk15_wgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline const double gk15_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
inline void gk15(const F& f, double a, double b, double& val, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(c);
    double resg = fc * gk15_wg[3];
    double resk = fc * gk15_wgk[7];
    for (int j = 0; j < 7; ++j) {
        double fv1 = f(c - h * gk15_xgk[j]);
        double fv2 = f(c + h * gk15_xgk[j]);
        resk += gk15_wgk[j] * (fv1 + fv2);
        if (j % 2 == 1) resg += gk15_wg[j / 2] * (fv1 + fv2);
    }
    val = resk * h;
    err = std::abs((resk - resg) * h);
}
} // namespace detail

template <class F>
inline double integrate_adaptive(const F& f, double a, double b,
                                 double rel_tol = 1e-12, double abs_tol = 1e-15,
                                 int max_intervals = 4000) {
    struct Seg {
        double a, b, val, err;
    };
    std::vector<Seg> segs;
    double v, e;
    detail::gk15(f, a, b, v, e);
    segs.push_back({a, b, v, e});
    double total = v, toterr = e;
    int iter = 0;
    while (toterr > std::max(abs_tol, rel_tol * std::abs(total)) && iter++ < max_intervals) {
        size_t worst = 0;
        for (size_t i = 1; i < segs.size(); ++i)
            if (segs[i].err > segs[worst].err) worst = i;
        Seg s = segs[worst];
        double m = 0.5 * (s.a + s.b);
        Seg l{s.a, m, 0, 0}, r{m, s.b, 0, 0};
        detail::gk15(f, l.a, l.b, l.val, l.err);
        detail::gk15(f, r.a, r.b, r.val, r.err);
        segs[worst] = l;
        segs.push_back(r);
        total += l.val + r.val - s.val;
        toterr += l.err + r.err - s.err;
    }
    return total;
}

/// Fourier coefficient (1/2pi) int_{-pi}^{pi} e^{-i n theta} f(theta) dtheta of
/// a smooth 2pi-periodic real function, by midpoint-rule doubling (spectral
/// accuracy). Returns the cosine half for even integrands.
template <class F>
inline double periodic_cos_coefficient(const F& f, int n, double rel_tol = 1e-12) {
    int N = std::max(64, 4 * std::abs(n) + 16);
    double prev = 0.0;
    bool have = false;
    while (N <= (1 << 22)) {
        const double h = 2.0 * std::numbers::pi / N;
        double sum = 0.0, comp = 0.0;
        for (int j = 0; j < N; ++j) {
            double th = -std::numbers::pi + (j + 0.5) * h;
            double v = std::cos(n * th) * f(th);
            double y = v - comp, t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum *= h / (2.0 * std::numbers::pi);
        if (have && std::abs(sum - prev) <= rel_tol * std::max(std::abs(sum), 1e-290))
            return sum;
        prev = sum;
        have = true;
        N *= 2;
    }
    return prev;
}

} // namespace npspec
