#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <cstring>
#include <limits>
#include <optional>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <memory>
#include <thread>
#include <vector>

#include "npspec/kernels.hpp"
#include "npspec/quadrature.hpp"

namespace npspec {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Composite quadrature layout: base_order Gauss-Legendre points per block,
/// blocks_per_panel blocks tiling each panel.
struct QuadratureRule {
    int base_order = 16;
    int blocks_per_panel = 2;

    int nodes_per_panel() const { return base_order * blocks_per_panel; }

    void validate() const {
        if (base_order != 16 && base_order != 32)
            throw InvalidMeshSpec("quadrature rule: base order must be 16 or 32");
        if (blocks_per_panel < 1 || nodes_per_panel() > 1024)
            throw InvalidMeshSpec("quadrature rule: nodes per panel out of range");
    }
};

/// Panel mesh on (t_min, 1]: uniform coarse panels, the panel adjacent to the
/// conical point split dyadically `levels` times (and the sliver [0, t_min]
/// dropped -- the density there is unresolved by construction), plus a milder
/// dyadic grading toward the smooth axis point t = 1 where the modal kernels
/// have axis-induced log(gamma1) behaviour that plain polynomial interpolation
/// cannot absorb.
struct PanelMesh {
    struct Block {
        double a, b;
        int offset; // index of the block's first node
    };

    int coarse_count = 16;
    int levels = 40;
    int axis_levels = 16;
    QuadratureRule rule;

    std::vector<double> breakpoints;
    std::vector<Block> blocks;
    std::vector<double> t, w; // nodes and parametric Gauss weights

    double t_min() const { return breakpoints.front(); }
    int size() const { return int(t.size()); }
};

inline PanelMesh build_mesh(int coarse_count, int levels, int nodes_per_panel,
                            int base_order = 0, int axis_levels = -1) {
    if (coarse_count < 4) throw InvalidMeshSpec("build_mesh: coarse_count must be >= 4");
    if (levels < 0 || levels > 200) throw InvalidMeshSpec("build_mesh: levels must be in [0, 200]");
    PanelMesh m;
    m.coarse_count = coarse_count;
    m.levels = levels;
    m.axis_levels = (axis_levels >= 0) ? axis_levels : std::clamp(levels, 8, 20);
    if (base_order == 0) base_order = (nodes_per_panel % 32 == 0) ? 32 : 16;
    m.rule.base_order = base_order;
    m.rule.blocks_per_panel = nodes_per_panel / base_order;
    if (m.rule.nodes_per_panel() != nodes_per_panel)
        throw InvalidMeshSpec("build_mesh: nodes_per_panel must be a multiple of the base order");
    m.rule.validate();

    std::vector<double> bps;
    double w0 = 1.0 / coarse_count;
    for (int k = levels; k >= 1; --k) bps.push_back(w0 * std::ldexp(1.0, -k));
    for (int i = 1; i <= coarse_count; ++i) bps.push_back(w0 * i);
    // grading toward t = 1 splits the last panel
    {
        std::vector<double> axis;
        double lo = 1.0 - w0;
        double hi = 1.0;
        for (int k = 0; k < m.axis_levels; ++k) {
            double mid = hi - (hi - lo) / 2.0;
            axis.push_back(mid);
            lo = mid;
        }
        bps.insert(bps.end(), axis.begin(), axis.end());
        std::sort(bps.begin(), bps.end());
        // drop the axis sliver [1 - w0 2^{-L1}, 1] like the tip sliver
        if (m.axis_levels > 0) bps.pop_back();
    }
    m.breakpoints = bps;

    GaussRule gr(base_order);
    for (size_t p = 0; p + 1 < bps.size(); ++p) {
        double a = bps[p], b = bps[p + 1];
        for (int ib = 0; ib < m.rule.blocks_per_panel; ++ib) {
            double aa = a + (b - a) * ib / m.rule.blocks_per_panel;
            double bb = a + (b - a) * (ib + 1) / m.rule.blocks_per_panel;
            m.blocks.push_back({aa, bb, int(m.t.size())});
            for (int j = 0; j < base_order; ++j) {
                m.t.push_back(aa + (gr.x[j] + 1.0) * (bb - aa) / 2.0);
                m.w.push_back(gr.w[j] * (bb - aa) / 2.0);
            }
        }
    }
    return m;
}

/// Assembled Nystrom matrices of one azimuthal mode. K is the matrix of the
/// similarity-transformed kernel t k_n(t,t')/t' (same spectrum as K_n, better
/// tip stability); S is the single-layer matrix. Both act on node vectors via
/// (K f)_i = sum_j K(i,j) f_j, with the surface element and quadrature weight
/// folded into the matrix.
struct DiscreteModalOperator {
    int mode = 0;
    PanelMesh mesh;
    std::optional<Generatrix> gen;
    VectorXd t;      // nodes
    VectorXd w;      // parametric Gauss weights
    VectorXd sigma;  // surface element gamma1 |gamma'| at the nodes
    MatrixXd K;      // transformed double-layer Nystrom matrix
    MatrixXd S;      // single-layer Nystrom matrix (untransformed)

    int size() const { return int(t.size()); }

    /// node weights of the full-surface measure d sigma = 2 pi sigma dt
    double surface_weight(int i) const { return 2.0 * std::numbers::pi * w[i] * sigma[i]; }
};

namespace detail {

template <class Body>
void parallel_rows(int n, const Body& body) {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    unsigned nthreads = std::min<unsigned>(hw, 16);
    if (n < 64 || nthreads == 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> ts;
    int chunk = (n + int(nthreads) - 1) / int(nthreads);
    for (unsigned k = 0; k < nthreads; ++k) {
        int lo = int(k) * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        ts.emplace_back([=, &body] { body(lo, hi); });
    }
    for (auto& th : ts) th.join();
}

} // namespace detail

/// Assemble the modal operator matrices for mode n on the given mesh.
/// Off-block entries use plain composite Gauss-Legendre. Entries whose target
/// lies within half a block width of the source block are corrected by
/// product integration against exact log moments. Because chi - 1 scales like
/// (dt / t)^2 / sin^2(alpha) near the tip, a corrected block is subdivided
/// until every log-corrected subsegment stays inside the logarithmic regime
/// of Q_{n-1/2}; density values on subsegment nodes are obtained by
/// barycentric interpolation from the block's own nodes.
namespace detail {

/// barycentric weights of the Gauss nodes (normalized)
inline std::vector<double> bary_weights(const std::vector<double>& x) {
    const int n = int(x.size());
    std::vector<double> lam(n, 1.0);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k)
            if (k != j) lam[j] /= (x[j] - x[k]);
    }
    double scale = 0.0;
    for (double v : lam) scale = std::max(scale, std::abs(v));
    for (double& v : lam) v /= scale;
    return lam;
}

/// row of Lagrange basis values l_j(y) at a point y (in block coordinates)
inline void bary_row(const std::vector<double>& x, const std::vector<double>& lam, double y,
                     std::vector<double>& out) {
    const int n = int(x.size());
    out.assign(n, 0.0);
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
        double d = y - x[j];
        if (d == 0.0) {
            out.assign(n, 0.0);
            out[j] = 1.0;
            return;
        }
        double c = lam[j] / d;
        out[j] = c;
        denom += c;
    }
    for (double& v : out) v /= denom;
}

} // namespace detail

namespace detail {

/// Fill rows [row_lo, row_hi) of the untransformed Nystrom matrices K and S
/// for the given target/source node layout. Shared by the global assembler
/// and the RCIP window assembler.
inline void fill_modal_rows(const Generatrix& gen, int n,
                            const std::vector<PanelMesh::Block>& blocks,
                            const std::vector<double>& tnodes,
                            const std::vector<double>& wnodes,
                            const std::vector<double>& sigma,
                            const GaussRule& base,
                            const std::vector<double>& bweights,
                            int row_lo, int row_hi, MatrixXd& K, MatrixXd& S) {
    const int nb = int(base.x.size());
    std::vector<double> lrow;
    for (int i = row_lo; i < row_hi; ++i) {
        const double ti = tnodes[i];
        TargetGeom tg(gen, ti);
        for (const auto& blk : blocks) {
            const double wdt = blk.b - blk.a;
            double dist = 0.0;
            if (ti < blk.a) dist = blk.a - ti;
            else if (ti > blk.b) dist = ti - blk.b;
            if (dist >= 0.5 * wdt) {
                for (int jj = 0; jj < nb; ++jj) {
                    int j = blk.offset + jj;
                    ModalKernelPair kp = modal_kernel_pair(tg, n, tnodes[j]);
                    K(i, j) = kp.k * wnodes[j] * sigma[j];
                    S(i, j) = kp.s * wnodes[j] * sigma[j];
                }
                continue;
            }
            // near block: subdivide until log-corrected subsegments keep
            // chi - 1 <= 0.5 (each halving quarters chi - 1)
            int m = 1;
            while (m < 64) {
                double ws = wdt / m, worst = 0.0;
                for (int sSeg = 0; sSeg < m; ++sSeg) {
                    double c0 = blk.a + sSeg * ws, c1 = c0 + ws;
                    double d = (ti < c0) ? c0 - ti : (ti > c1 ? ti - c1 : 0.0);
                    if (d >= 0.5 * ws) continue;
                    double far_end = (std::abs(c0 - ti) > std::abs(c1 - ti)) ? c0 : c1;
                    if (far_end != ti)
                        worst = std::max(worst, chi_minus_one(gen, ti, far_end));
                }
                if (worst <= 0.5) break;
                m *= 2;
            }
            double ws = wdt / m;
            for (int jj = 0; jj < nb; ++jj) {
                K(i, blk.offset + jj) = 0.0;
                S(i, blk.offset + jj) = 0.0;
            }
            for (int sSeg = 0; sSeg < m; ++sSeg) {
                double c0 = blk.a + sSeg * ws, c1 = c0 + ws;
                double d = (ti < c0) ? c0 - ti : (ti > c1 ? ti - c1 : 0.0);
                bool neari = d < 0.5 * ws;
                std::vector<double> wlog;
                double logh = 0.0;
                if (neari) {
                    double x0 = (2.0 * ti - (c0 + c1)) / ws;
                    wlog = log_weights(base, x0);
                    logh = std::log(ws / 2.0);
                }
                for (int q = 0; q < nb; ++q) {
                    double y = c0 + (base.x[q] + 1.0) * ws / 2.0;
                    double gw = base.w[q] * ws / 2.0;
                    double sig = surface_element(gen, y);
                    double kk, ssv;
                    if (neari) {
                        ModalKernelPairSplit ks = modal_kernel_pair_split(tg, n, y);
                        double lw = wlog[q] * ws / 2.0 + logh * gw;
                        kk = ks.k.smooth * gw + ks.k.log_coef * lw;
                        ssv = ks.s.smooth * gw + ks.s.log_coef * lw;
                    } else {
                        ModalKernelPair kp = modal_kernel_pair(tg, n, y);
                        kk = kp.k * gw;
                        ssv = kp.s * gw;
                    }
                    // spread onto the block nodes through the Lagrange basis
                    double yloc = (2.0 * y - (blk.a + blk.b)) / wdt;
                    detail::bary_row(base.x, bweights, yloc, lrow);
                    for (int jj = 0; jj < nb; ++jj) {
                        K(i, blk.offset + jj) += kk * sig * lrow[jj];
                        S(i, blk.offset + jj) += ssv * sig * lrow[jj];
                    }
                }
            }
        }
    }
}

} // namespace detail

inline DiscreteModalOperator assemble(const Generatrix& gen, int n, const PanelMesh& mesh) {
    n = std::abs(n);
    DiscreteModalOperator op;
    op.mode = n;
    op.mesh = mesh;
    op.gen = gen;
    const int N = mesh.size();
    op.t = Eigen::Map<const VectorXd>(mesh.t.data(), N);
    op.w = Eigen::Map<const VectorXd>(mesh.w.data(), N);
    op.sigma.resize(N);
    for (int i = 0; i < N; ++i) op.sigma[i] = surface_element(gen, mesh.t[i]);
    op.K.resize(N, N);
    op.S.resize(N, N);

    GaussRule base(mesh.rule.base_order);
    const std::vector<double> bweights = detail::bary_weights(base.x);
    std::vector<double> sig(op.sigma.data(), op.sigma.data() + N);

    detail::parallel_rows(N, [&](int row_lo, int row_hi) {
        detail::fill_modal_rows(gen, n, mesh.blocks, mesh.t, mesh.w, sig, base, bweights,
                                row_lo, row_hi, op.K, op.S);
    });
    // similarity transform: K~(i,j) = (ti/tj) K(i,j)
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) op.K(i, j) *= mesh.t[i] / mesh.t[j];
    if (!op.K.allFinite() || !op.S.allFinite())
        throw Error("assemble: non-finite matrix entries");
    return op;
}

/// Node values of a layer density solving (K_n - z) rho = g, with the
/// backward-error residual of the solved system.
struct DensitySolution {
    VectorXcd rho;
    complexd z;
    double residual = 0.0;
};

/// Dense direct solve of (K_n - z) rho = g with one step of iterative
/// refinement. g and rho are in the physical (untransformed) density
/// convention; the transform is applied and undone internally. An optional
/// warm start seeds the refinement. Throws NearSingular when the LU factors
/// signal condition beyond 1/(100 eps).
inline DensitySolution solve_resolvent(const DiscreteModalOperator& op, complexd z,
                                       const VectorXcd& g,
                                       const VectorXcd* warm_start = nullptr) {
    const int N = op.size();
    if (g.size() != N) throw DomainError("solve_resolvent: dimension mismatch");
    MatrixXcd A = op.K.cast<complexd>();
    A.diagonal().array() -= z;
    Eigen::PartialPivLU<MatrixXcd> lu(A);
    // condition estimate: ||A||_1 times an inverse-power estimate of ||A^{-1}||
    double anorm = A.cwiseAbs().colwise().sum().maxCoeff();
    VectorXcd pv = VectorXcd::Ones(N).cwiseQuotient(
        VectorXcd::LinSpaced(N, 1.0, 2.0)); // deterministic non-degenerate seed
    double inv_norm = 0.0;
    for (int it = 0; it < 3; ++it) {
        pv = lu.solve(pv);
        inv_norm = pv.norm();
        pv /= inv_norm;
    }
    if (anorm * inv_norm > 1.0 / (100.0 * std::numeric_limits<double>::epsilon()))
        throw NearSingular("solve_resolvent: matrix numerically singular (z near spectrum)");

    VectorXcd gt = g.cwiseProduct(op.t.cast<complexd>());
    VectorXcd xt;
    if (warm_start && warm_start->size() == N)
        xt = warm_start->cwiseProduct(op.t.cast<complexd>());
    else
        xt = lu.solve(gt);
    // one refinement step (two when warm started)
    for (int it = 0; it < (warm_start ? 2 : 1); ++it) {
        VectorXcd r = gt - A * xt;
        xt += lu.solve(r);
    }
    DensitySolution out;
    out.z = z;
    out.rho = xt.cwiseQuotient(op.t.cast<complexd>());
    out.residual = (gt - A * xt).norm() / std::max(gt.norm(), 1e-300);
    return out;
}

/// Eigen-decomposition data for one discrete eigenvalue: right and left
/// eigenvectors in the physical density convention, biorthonormalized so that
/// <phi_i, psi_k> = delta_ik in the profile L^2 pairing sum w sigma phi psi.
struct DiscreteEigenpair {
    complexd value;
    VectorXcd right; // phi: eigenfunction of K_n
    VectorXcd left;  // psi: eigenfunction of the adjoint
};

/// The `count` largest-modulus eigenvalues of the discrete modal operator
/// with biorthogonal left/right eigenvectors. The left set is the inverse
/// transpose of the right eigenvector matrix, which pairs left and right
/// vectors exactly even for clustered eigenvalues.
inline std::vector<DiscreteEigenpair> eig_discrete(const DiscreteModalOperator& op, int count) {
    const int N = op.size();
    if (count > N) throw DomainError("eig_discrete: count exceeds matrix dimension");
    Eigen::EigenSolver<MatrixXd> er(op.K);
    if (er.info() != Eigen::Success) throw Error("eig_discrete: eigensolver failed");

    VectorXcd lam = er.eigenvalues();
    MatrixXcd V = er.eigenvectors();
    MatrixXcd L = V.inverse().transpose(); // columns biorthogonal to V: L^T V = I

    std::vector<int> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(lam[a]) > std::abs(lam[b]); });

    std::vector<DiscreteEigenpair> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        int i = order[k];
        DiscreteEigenpair p;
        p.value = lam[i];
        // undo the similarity transform (phi = r/t) and move the left vector
        // from the algebraic dual to the sigma-weighted functional convention
        VectorXcd phi = V.col(i).cwiseQuotient(op.t.cast<complexd>());
        VectorXcd psi = L.col(i).cwiseProduct(op.t.cast<complexd>());
        for (int j = 0; j < N; ++j) psi[j] /= (op.w[j] * op.sigma[j]);
        complexd pairing = 0.0;
        for (int j = 0; j < N; ++j) pairing += op.w[j] * op.sigma[j] * phi[j] * psi[j];
        if (std::abs(pairing) < 1e-300) throw Error("eig_discrete: degenerate pairing");
        p.right = phi;
        p.left = psi / pairing;
        out.push_back(std::move(p));
    }
    return out;
}

/// Full-surface L^2(Gamma) pairing of two modal node vectors:
/// sum_i 2 pi w_i sigma_i f_i conj(g_i) (the 2 pi is the azimuthal measure).
inline complexd weighted_inner_product(const DiscreteModalOperator& op, const VectorXcd& f,
                                       const VectorXcd& g) {
    if (f.size() != op.size() || g.size() != op.size())
        throw DomainError("weighted_inner_product: dimension mismatch");
    complexd acc = 0.0;
    for (int i = 0; i < op.size(); ++i)
        acc += op.surface_weight(i) * f[i] * std::conj(g[i]);
    return acc;
}

// ---------------------------------------------------------------------------
// Binary cache of assembled matrices. Little-endian doubles, fixed header.
// ---------------------------------------------------------------------------

inline std::string operator_cache_name(const Generatrix& gen, int n, const PanelMesh& mesh) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, size_t sz) {
        const unsigned char* c = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < sz; ++i) h = (h ^ c[i]) * 1099511628211ull;
    };
    mix(gen.cache_key().data(), gen.cache_key().size());
    mix(&n, sizeof n);
    mix(&mesh.coarse_count, sizeof mesh.coarse_count);
    mix(&mesh.levels, sizeof mesh.levels);
    mix(&mesh.axis_levels, sizeof mesh.axis_levels);
    mix(&mesh.rule.base_order, sizeof mesh.rule.base_order);
    mix(&mesh.rule.blocks_per_panel, sizeof mesh.rule.blocks_per_panel);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("npspec_op_") + buf + ".bin";
}

namespace detail {
inline void put_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint64_t get_u64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}
inline void put_f64_le(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64_le(os, v);
}
inline double get_f64_le(std::istream& is) {
    std::uint64_t v = get_u64_le(is);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}
} // namespace detail

inline void save_operator(const DiscreteModalOperator& op, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("save_operator: cannot open " + path);
    os.write("NPSPECB1", 8);
    detail::put_u64_le(os, std::uint64_t(op.mode));
    detail::put_u64_le(os, std::uint64_t(op.size()));
    const int N = op.size();
    for (int i = 0; i < N; ++i) detail::put_f64_le(os, op.t[i]);
    for (int i = 0; i < N; ++i) detail::put_f64_le(os, op.w[i]);
    for (int i = 0; i < N; ++i) detail::put_f64_le(os, op.sigma[i]);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) detail::put_f64_le(os, op.K(i, j));
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) detail::put_f64_le(os, op.S(i, j));
}

/// Load matrices saved by save_operator into an operator shell (mesh metadata
/// is not round-tripped; nodes, weights and matrices are).
inline bool load_operator(DiscreteModalOperator& op, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    char magic[8];
    is.read(magic, 8);
    if (std::string(magic, 8) != "NPSPECB1") return false;
    op.mode = int(detail::get_u64_le(is));
    int N = int(detail::get_u64_le(is));
    op.t.resize(N);
    op.w.resize(N);
    op.sigma.resize(N);
    for (int i = 0; i < N; ++i) op.t[i] = detail::get_f64_le(is);
    for (int i = 0; i < N; ++i) op.w[i] = detail::get_f64_le(is);
    for (int i = 0; i < N; ++i) op.sigma[i] = detail::get_f64_le(is);
    op.K.resize(N, N);
    op.S.resize(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) op.K(i, j) = detail::get_f64_le(is);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) op.S(i, j) = detail::get_f64_le(is);
    return bool(is);
}

} // namespace npspec
