#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <optional>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "npspec/solver.hpp"

namespace npspec {

/// Recursively compressed inverse preconditioning for the conical tip.
///
/// The global mesh stays coarse; the dyadic refinement toward t = 0 is
/// replaced by a 2m x 2m compressed resolvent R acting on the two coarse
/// panels nearest the tip (the "footprint" [0, 2 w0]). R is built by a level
/// recursion over windows
///
///     b(s) = { [0, s/2], [s/2, s], [s, 2s] },   s = w0, w0/2, w0/4, ...
///
/// in which the inner two panels carry the already-compressed tail and the
/// outer panel is explicit. One level step is a Schur complement followed by
/// a polynomial prolongation/weighted restriction between the level's grids.
/// Below geo_levels the generatrix is replaced by its tangent cone, the
/// window matrices become exactly level-independent (the transformed kernel
/// is scale-invariant on dyadic panels), and the recursion becomes a fixed
/// point R = Phi(R). Phi's Frechet derivative is E -> L E R~, so Newton steps
/// reduce to small Stein equations; warm starts along a y-homotopy keep the
/// iteration on the limiting-absorption branch as Im z -> 0^-. The fixed
/// point realizes the infinitely refined mesh, which is what makes spectral
/// limits like y = -1e-11 meaningful inside the continuous spectrum.
class RcipCompressor {
public:
    RcipCompressor(const Generatrix& gen, int mode, double w0, int base_order = 32,
                   int geo_levels = 16)
        : gen_(gen), mode_(std::abs(mode)), w0_(w0), m_(base_order), geo_(geo_levels),
          rule_(base_order) {
        build_reference();
        // window matrices for the geometry-dependent levels (z-free)
        for (int j = 1; j <= geo_; ++j) {
            double s = w0_ * std::ldexp(1.0, -(j - 1));
            Ab_geo_.push_back(window_matrix(gen_, s));
            // weights of the level's inner a(s/2) grid and outer panel, for
            // the weighted restriction at this level
            PWt_geo_.push_back(weighted_restriction(gen_, s));
        }
        // scale-invariant deep window from the tangent cone (any scale works;
        // pick one deep enough that chi-based switches behave as in use)
        Generatrix cone = straight_cone(gen_.alpha());
        double s_ref = w0_ * std::ldexp(1.0, -geo_);
        Ab_cone_ = window_matrix(cone, s_ref);
        PWt_cone_ = weighted_restriction(cone, s_ref);
        Pin_ = prolongation();
    }

    int mode() const { return mode_; }
    int block_size() const { return m_; }
    double footprint_width() const { return 2.0 * w0_; }

    /// Nodes of the footprint grid a(w0) = {[0, w0], [w0, 2 w0]} (2m of them).
    std::vector<double> footprint_nodes() const {
        std::vector<double> t(2 * m_);
        for (int q = 0; q < m_; ++q) {
            t[q] = (rule_.x[q] + 1.0) * w0_ / 2.0;
            t[m_ + q] = w0_ + (rule_.x[q] + 1.0) * w0_ / 2.0;
        }
        return t;
    }
    std::vector<double> footprint_weights() const {
        std::vector<double> w(2 * m_);
        for (int q = 0; q < m_; ++q) w[q] = w[m_ + q] = rule_.w[q] * w0_ / 2.0;
        return w;
    }

    /// Compressed resolvent at shift z on the footprint grid, transformed
    /// variables. warm (optional) seeds the deep fixed point.
    MatrixXcd compress(complexd z, const MatrixXcd* warm = nullptr) const {
        MatrixXcd X = deep_fixed_point(z, warm);
        deep_cache_ = X;
        // run up through the geometry-dependent levels
        for (int j = geo_; j >= 1; --j) X = level_step(Ab_geo_[j - 1], PWt_geo_[j - 1], X, z);
        return X;
    }

    /// Truncated-tail variant: exactly nsub dyadic levels below the footprint
    /// and nothing deeper (mirrors a plain graded mesh with the tip sliver
    /// dropped). Used by the equivalence contract against the direct solver.
    MatrixXcd compress_truncated(complexd z, int nsub) const {
        Generatrix cone = straight_cone(gen_.alpha());
        MatrixXcd X;
        {
            // base: only the outer panel of the level-(nsub+1) window exists;
            // use the true curve while the truncation is shallower than the
            // cone-replacement depth
            double s = w0_ * std::ldexp(1.0, -nsub);
            MatrixXcd Ab = window_matrix(nsub + 1 > geo_ ? cone : gen_, s).cast<complexd>();
            MatrixXcd App = Ab.block(2 * m_, 2 * m_, m_, m_);
            App.diagonal().array() -= z;
            X = MatrixXcd::Zero(2 * m_, 2 * m_);
            X.block(m_, m_, m_, m_) = App.inverse();
        }
        for (int j = nsub; j >= 1; --j) {
            double s = w0_ * std::ldexp(1.0, -(j - 1));
            if (j > geo_)
                X = level_step(Ab_cone_, PWt_cone_, X, z);
            else
                X = level_step(window_matrix(gen_, s), PWt_geo_[j - 1], X, z);
        }
        return X;
    }

    /// Unroll the compressed solution back onto the fine dyadic panels.
    /// Given the footprint incoming field f (2m, transformed variables),
    /// returns (t, rho~) values on panels [s_j, 2 s_j], j = 1..depth.
    struct FineDensity {
        std::vector<double> t;
        VectorXcd rho_t; // transformed density t * rho
    };
    FineDensity unroll(complexd z, const VectorXcd& f_top, int depth, bool truncated = false,
                       const MatrixXcd* warm = nullptr) const {
        if (depth <= geo_) throw DomainError("rcip unroll: depth must exceed geo_levels");
        Generatrix cone = straight_cone(gen_.alpha());
        // child compressed objects per level
        std::vector<MatrixXcd> Xs(depth + 1);
        if (truncated) {
            // child below the deepest unrolled level: one further window with
            // only its outer panel present (mirrors the dropped tip sliver)
            double s = w0_ * std::ldexp(1.0, -depth);
            MatrixXcd Ab = window_matrix(depth + 1 > geo_ ? cone : gen_, s).cast<complexd>();
            MatrixXcd App = Ab.block(2 * m_, 2 * m_, m_, m_);
            App.diagonal().array() -= z;
            Xs[depth] = MatrixXcd::Zero(2 * m_, 2 * m_);
            Xs[depth].block(m_, m_, m_, m_) = App.inverse();
        } else {
            Xs[depth] = warm ? *warm : deep_fixed_point(z, nullptr);
        }
        for (int j = depth - 1; j >= 1; --j) {
            double s = w0_ * std::ldexp(1.0, -j); // child of level j sits at s_j/2
            if (j + 1 > geo_)
                Xs[j] = level_step(Ab_cone_, PWt_cone_, Xs[j + 1], z);
            else
                Xs[j] = level_step(window_matrix(gen_, s), PWt_geo_[j], Xs[j + 1], z);
        }
        FineDensity out;
        VectorXcd f = f_top;
        for (int j = 1; j <= depth; ++j) {
            double s = w0_ * std::ldexp(1.0, -(j - 1));
            const Generatrix& g = (j > geo_) ? cone : gen_;
            MatrixXcd Ab = ((j > geo_) ? Ab_cone_ : window_matrix(g, s)).cast<complexd>();
            MatrixXcd Aoo = Ab.block(2 * m_, 2 * m_, m_, m_);
            Aoo.diagonal().array() -= z;
            MatrixXcd Aio = Ab.block(0, 2 * m_, 2 * m_, m_);
            MatrixXcd Aoi = Ab.block(2 * m_, 0, m_, 2 * m_);
            const MatrixXcd& X = Xs[j];
            VectorXcd fb = Pin_.cast<complexd>() * f.head(m_); // inner a(s/2) data
            VectorXcd fO = f.tail(m_);
            MatrixXcd S = (Aoo - Aoi * X * Aio).inverse();
            VectorXcd rhoO = S * (fO - Aoi * (X * fb));
            for (int q = 0; q < m_; ++q) out.t.push_back(s + (rule_.x[q] + 1.0) * s / 2.0);
            out.rho_t.conservativeResize(out.rho_t.size() + m_);
            out.rho_t.tail(m_) = rhoO;
            f = fb - Aio * rhoO; // incoming field of the child level
        }
        return out;
    }

    /// last converged deep fixed point (for warm starting the next z)
    const MatrixXcd& last_deep() const { return deep_cache_; }

    /// One scale-invariant deep level step (exposed for fixed-point tests).
    MatrixXcd step_cone(const MatrixXcd& X, complexd z) const {
        return level_step(Ab_cone_, PWt_cone_, X, z);
    }

private:
    void build_reference() {}

    /// 3m x 3m transformed-kernel matrix of the window b(s) (no z shift).
    MatrixXd window_matrix(const Generatrix& g, double s) const {
        std::vector<PanelMesh::Block> blocks = {
            {0.0, s / 2.0, 0}, {s / 2.0, s, m_}, {s, 2.0 * s, 2 * m_}};
        std::vector<double> t(3 * m_), w(3 * m_), sig(3 * m_);
        for (int b = 0; b < 3; ++b)
            for (int q = 0; q < m_; ++q) {
                double a = blocks[b].a, bb = blocks[b].b;
                t[b * m_ + q] = a + (rule_.x[q] + 1.0) * (bb - a) / 2.0;
                w[b * m_ + q] = rule_.w[q] * (bb - a) / 2.0;
                sig[b * m_ + q] = surface_element(g, t[b * m_ + q]);
            }
        MatrixXd K = MatrixXd::Zero(3 * m_, 3 * m_), S = MatrixXd::Zero(3 * m_, 3 * m_);
        std::vector<double> bweights = detail::bary_weights(rule_.x);
        // the inner-inner block is replaced by the compressed resolvent in the
        // recursion and must not be assembled (it touches the tip singularity)
        std::vector<PanelMesh::Block> outer_only = {blocks[2]};
        detail::fill_modal_rows(g, mode_, outer_only, t, w, sig, rule_, bweights, 0, 2 * m_, K, S);
        detail::fill_modal_rows(g, mode_, blocks, t, w, sig, rule_, bweights, 2 * m_, 3 * m_, K, S);
        for (int i = 0; i < 3 * m_; ++i)
            for (int j = 0; j < 3 * m_; ++j) K(i, j) *= t[i] / t[j];
        return K;
    }

    /// m -> 2m prolongation: polynomial on the parent inner panel [0, s]
    /// evaluated at the child a(s/2) nodes (scale-free).
    MatrixXd prolongation() const {
        MatrixXd P(2 * m_, m_);
        std::vector<double> lam = detail::bary_weights(rule_.x);
        std::vector<double> row;
        for (int half = 0; half < 2; ++half)
            for (int q = 0; q < m_; ++q) {
                // child node in parent-panel coordinates [-1, 1]
                double u = 0.5 * (rule_.x[q] + 1.0) * 0.5 + 0.5 * half; // in [0,1]
                double x = 2.0 * u - 1.0;
                detail::bary_row(rule_.x, lam, x, row);
                for (int j = 0; j < m_; ++j) P(half * m_ + q, j) = row[j];
            }
        return P;
    }

    /// 2m x m weighted restriction PW^T at scale s: quadrature-preserving map
    /// from a(s/2)-grid densities to the parent inner panel. The weight is
    /// w sigma / t, the natural measure of the transformed problem: the
    /// transformed kernel column (t0/t') k(t0, t') has a genuine 1/t' pole at
    /// the tip (<r, nu> != 0 for a curved generatrix), but t' times it is
    /// analytic, so preservation in the sigma/t weight makes every compressed
    /// quadrature pair a polynomial-approximable function with the density.
    MatrixXd weighted_restriction(const Generatrix& g, double s) const {
        std::vector<double> tp(m_), wp(m_), tc(2 * m_), wc(2 * m_);
        for (int q = 0; q < m_; ++q) {
            tp[q] = (rule_.x[q] + 1.0) * s / 2.0;
            wp[q] = rule_.w[q] * s / 2.0;
            tc[q] = (rule_.x[q] + 1.0) * s / 4.0;
            wc[q] = rule_.w[q] * s / 4.0;
            tc[m_ + q] = s / 2.0 + (rule_.x[q] + 1.0) * s / 4.0;
            wc[m_ + q] = rule_.w[q] * s / 4.0;
        }
        MatrixXd P = prolongation();
        MatrixXd W(m_, 2 * m_);
        for (int i = 0; i < m_; ++i) {
            double di = wp[i] * surface_element(g, tp[i]) / tp[i];
            for (int j = 0; j < 2 * m_; ++j)
                W(i, j) = P(j, i) * wc[j] * (surface_element(g, tc[j]) / tc[j]) / di;
        }
        return W;
    }

    /// One recursion step: window matrix Ab (3m, z-free), weighted restriction
    /// PW for this level, child compressed resolvent X -> parent R.
    MatrixXcd level_step(const MatrixXd& Ab, const MatrixXd& PW, const MatrixXcd& X,
                         complexd z) const {
        const int m = m_;
        MatrixXcd Aio = Ab.block(0, 2 * m, 2 * m, m).cast<complexd>();
        MatrixXcd Aoi = Ab.block(2 * m, 0, m, 2 * m).cast<complexd>();
        MatrixXcd Aoo = Ab.block(2 * m, 2 * m, m, m).cast<complexd>();
        Aoo.diagonal().array() -= z;
        MatrixXcd XA = X * Aio;                       // 2m x m
        MatrixXcd S = (Aoo - Aoi * XA).inverse();     // m x m
        MatrixXcd PWc = PW.cast<complexd>();          // m x 2m
        MatrixXcd Pc = Pin_.cast<complexd>();         // 2m x m
        MatrixXcd R(2 * m, 2 * m);
        MatrixXcd XP = X * Pc;                        // 2m x m
        R.topLeftCorner(m, m) = PWc * (XP + XA * (S * (Aoi * XP)));
        R.topRightCorner(m, m) = -PWc * (XA * S);
        R.bottomLeftCorner(m, m) = -S * (Aoi * XP);
        R.bottomRightCorner(m, m) = S;
        return R;
    }

    /// Fixed point of the scale-invariant deep level map, by plain iteration
    /// with Newton (Stein-equation) acceleration. The Frechet derivative of
    /// the step at X is E -> L E Rt with
    ///   L = PW * Y_{:,I},  Rt = Y_{I,:} * [P; 0],  Y = window resolvent,
    /// obtained from the same Schur blocks as the step itself.
    MatrixXcd deep_fixed_point(complexd z, const MatrixXcd* warm) const {
        const int m = m_;
        MatrixXcd X;
        if (warm && warm->rows() == 2 * m) {
            X = *warm;
        } else {
            // start from a shallow truncation
            MatrixXcd Aoo = Ab_cone_.block(2 * m, 2 * m, m, m).cast<complexd>();
            Aoo.diagonal().array() -= z;
            X = MatrixXcd::Zero(2 * m, 2 * m);
            X.block(m, m, m, m) = Aoo.inverse();
        }
        double last = 1e300;
        for (int it = 0; it < 400; ++it) {
            MatrixXcd Xn = level_step(Ab_cone_, PWt_cone_, X, z);
            double diff = (Xn - X).norm() / std::max(1.0, Xn.norm());
            X = Xn;
            if (diff < 1e-14) return X;
            // once the plain iteration stalls or crawls, switch to Newton
            if (it >= 24 && diff > 0.5 * last) break;
            last = diff;
        }
        return deep_newton(z, X);
    }

    MatrixXcd deep_newton(complexd z, MatrixXcd X) const {
        const int m = m_;
        MatrixXcd Aio = Ab_cone_.block(0, 2 * m, 2 * m, m).cast<complexd>();
        MatrixXcd Aoi = Ab_cone_.block(2 * m, 0, m, 2 * m).cast<complexd>();
        MatrixXcd AooZ = Ab_cone_.block(2 * m, 2 * m, m, m).cast<complexd>();
        AooZ.diagonal().array() -= z;
        MatrixXcd PWc = PWt_cone_.cast<complexd>();
        MatrixXcd Pc = Pin_.cast<complexd>();
        double res0 = 1e300;
        MatrixXcd best = X;
        for (int it = 0; it < 60; ++it) {
            MatrixXcd S = (AooZ - Aoi * (X * Aio)).inverse();
            // Y blocks of [[X^{-1}, Aio],[Aoi, AooZ]]^{-1} needed for L and Rt:
            // Y_II = X + X Aio S Aoi X, Y_IO = -X Aio S, Y_OI = -S Aoi X
            MatrixXcd XAio = X * Aio;
            MatrixXcd YII = X + XAio * (S * (Aoi * X));
            MatrixXcd YOI = -S * (Aoi * X);
            MatrixXcd Phi(2 * m, 2 * m);
            Phi.topLeftCorner(m, m) = PWc * (YII * Pc);
            Phi.topRightCorner(m, m) = PWc * (-XAio * S);
            Phi.bottomLeftCorner(m, m) = YOI * Pc;
            Phi.bottomRightCorner(m, m) = S;
            MatrixXcd C = Phi - X;
            double res = C.norm() / std::max(1.0, X.norm());
            if (std::getenv("NPSPEC_RCIP_VERBOSE"))
                std::fprintf(stderr, "  newton it=%d res=%.3e\n", it, res);
            if (res < 1e-14) return X;
            if (res < res0) {
                res0 = res;
                best = X;
            } else if (res > 10.0 * res0 || it >= 59) {
                // stalled: the best iterate is the answer if it is converged
                if (res0 < 1e-11) return best;
                throw NonConvergence("rcip: deep fixed point did not converge");
            }
            // dPhi(E) = L E Rt with L = [PW Y_II; Y_OI] X^{-1}? use the exact
            // sandwich: dPhi(E) = (J_W Y_{:,I} X^{-1}) E (X^{-1} Y_{I,:} J_I).
            // With the Schur blocks, Y_{:,I} X^{-1} = [I + XAio S Aoi; -S Aoi]
            // and X^{-1} Y_{I,:} J_I = [Pc + Aio S Aoi X Pc ... ] reduces to
            // (I + Aio S Aoi X) Pc horizontally stacked with -Aio S:
            MatrixXcd Lfull(2 * m, 2 * m);
            Lfull.topRows(m) = PWc * (MatrixXcd::Identity(2 * m, 2 * m) + XAio * (S * Aoi));
            Lfull.bottomRows(m) = -S * Aoi;
            MatrixXcd Rfull(2 * m, 2 * m);
            Rfull.leftCols(m) = (MatrixXcd::Identity(2 * m, 2 * m) + Aio * (S * (Aoi * X))) * Pc;
            Rfull.rightCols(m) = -Aio * S;
            // solve the Stein equation E - Lfull E Rfull = C stably via
            // complex Schur forms (Bartels-Stewart)
            Eigen::ComplexSchur<MatrixXcd> sl(Lfull), sr(Rfull);
            const MatrixXcd &TL = sl.matrixT(), &TR = sr.matrixT();
            const MatrixXcd &QL = sl.matrixU(), &QR = sr.matrixU();
            MatrixXcd Ct = QL.adjoint() * C * QR;
            const int n2 = 2 * m;
            MatrixXcd Et = MatrixXcd::Zero(n2, n2);
            for (int a = n2 - 1; a >= 0; --a) {
                for (int b = 0; b < n2; ++b) {
                    complexd acc = Ct(a, b);
                    // (TL Et TR)_{ab} over already-solved entries
                    for (int k = a; k < n2; ++k) {
                        if (std::abs(TL(a, k)) == 0.0) continue;
                        complexd inner = 0.0;
                        for (int l = 0; l <= b; ++l) {
                            if (k == a && l == b) continue;
                            inner += Et(k, l) * TR(l, b);
                        }
                        acc += TL(a, k) * inner;
                    }
                    Et(a, b) = acc / (1.0 - TL(a, a) * TR(b, b));
                }
            }
            X = X + QL * Et * QR.adjoint();
        }
        throw NonConvergence("rcip: Newton on the deep fixed point stalled");
    }

    Generatrix gen_;
    int mode_;
    double w0_;
    int m_;
    int geo_;
    GaussRule rule_;
    std::vector<MatrixXd> Ab_geo_;
    std::vector<MatrixXd> PWt_geo_;
    MatrixXd Ab_cone_;
    MatrixXd PWt_cone_;
    MatrixXd Pin_;
    mutable MatrixXcd deep_cache_;
};


/// Coarse global system with the tip refinement replaced by the compressed
/// resolvent. Outside the footprint the grid and matrices coincide with the
/// plain coarse assembly; the footprint rows obey rho^ = R (g^ - A_fo rho_o).
/// All z-free blocks are assembled once, so sweeps over z cost one small LU
/// plus the fixed-point update each.
class RcipOperator {
public:
    RcipOperator(const Generatrix& gen, int mode, int coarse_count = 16,
                 int base_order = 32, int axis_levels = 16, int geo_levels = 30)
        : gen_(gen), mode_(std::abs(mode)), m_(base_order),
          comp_(gen, mode, 1.0 / coarse_count, base_order, geo_levels) {
        const double w0 = 1.0 / coarse_count;
        // panel layout: footprint [0,w0], [w0,2w0], then coarse panels with
        // dyadic grading toward the smooth axis point t = 1
        std::vector<double> bps;
        for (int i = 0; i <= coarse_count; ++i) bps.push_back(w0 * i);
        {
            std::vector<double> axis;
            double lo = 1.0 - w0, hi = 1.0;
            for (int k = 0; k < axis_levels; ++k) {
                double mid = hi - (hi - lo) / 2.0;
                axis.push_back(mid);
                lo = mid;
            }
            bps.insert(bps.end(), axis.begin(), axis.end());
            std::sort(bps.begin(), bps.end());
            if (axis_levels > 0) bps.pop_back(); // drop the axis sliver
        }
        GaussRule gr(base_order);
        for (size_t p = 0; p + 1 < bps.size(); ++p) {
            blocks_.push_back({bps[p], bps[p + 1], int(t_.size())});
            for (int q = 0; q < base_order; ++q) {
                t_.push_back(bps[p] + (gr.x[q] + 1.0) * (bps[p + 1] - bps[p]) / 2.0);
                w_.push_back(gr.w[q] * (bps[p + 1] - bps[p]) / 2.0);
            }
        }
        const int N = int(t_.size());
        sigma_.resize(N);
        for (int i = 0; i < N; ++i) sigma_[i] = surface_element(gen_, t_[i]);
        nf_ = 2 * m_;

        // assemble: outer rows over all blocks, footprint rows over outer blocks
        K_ = MatrixXd::Zero(N, N);
        MatrixXd Sdummy = MatrixXd::Zero(N, N);
        std::vector<double> bw = detail::bary_weights(gr.x);
        std::vector<PanelMesh::Block> outer_blocks(blocks_.begin() + 2, blocks_.end());
        detail::parallel_rows(N, [&](int lo, int hi) {
            // footprint rows only need outer-source couplings
            int flo = std::min(hi, std::max(lo, 0));
            (void)flo;
            for (int i = lo; i < hi; ++i) {
                if (i < nf_)
                    detail::fill_modal_rows(gen_, mode_, outer_blocks, t_, w_, sigma_, gr, bw,
                                            i, i + 1, K_, Sdummy);
                else
                    detail::fill_modal_rows(gen_, mode_, blocks_, t_, w_, sigma_, gr, bw,
                                            i, i + 1, K_, Sdummy);
            }
        });
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                if (i >= nf_ || j >= nf_) K_(i, j) *= t_[i] / t_[j];
        if (!K_.allFinite()) throw Error("rcip assembly: non-finite entries");
    }

    int size() const { return int(t_.size()); }
    int footprint_size() const { return nf_; }
    int mode() const { return mode_; }
    const Generatrix& generatrix() const { return gen_; }
    const std::vector<double>& nodes() const { return t_; }
    double node(int i) const { return t_[i]; }
    double weight(int i) const { return w_[i]; }
    double sigma(int i) const { return sigma_[i]; }
    const RcipCompressor& compressor() const { return comp_; }

    /// Solve (K_n - z) rho = g for the physical density g given at all grid
    /// nodes. The returned vector holds the compressed density on the
    /// footprint nodes and the actual density outside; both integrate
    /// correctly against smooth functions with the grid weights.
    VectorXcd solve(complexd z, const VectorXcd& g, int truncate_nsub = -1) const {
        return factorize(z, truncate_nsub).solve(g);
    }


    /// Factorized solve handle for many right-hand sides at one z: holds the
    /// compressed resolvent and the outer Schur LU.
    struct Factorization {
        MatrixXcd R;
        MatrixXcd Aof, Afo;
        Eigen::PartialPivLU<MatrixXcd> lu;
        const RcipOperator* op = nullptr;

        VectorXcd solve(const VectorXcd& g) const {
            const int N = op->size(), nf = op->footprint_size(), no = N - nf;
            VectorXcd gt(N);
            for (int i = 0; i < N; ++i) gt[i] = op->node(i) * g[i];
            VectorXcd rhs = gt.tail(no) - Aof * (R * gt.head(nf));
            VectorXcd rho_o = lu.solve(rhs);
            VectorXcd rho_f = R * (gt.head(nf) - Afo * rho_o);
            VectorXcd out(N);
            out.head(nf) = rho_f;
            out.tail(no) = rho_o;
            for (int i = 0; i < N; ++i) out[i] /= op->node(i);
            return out;
        }
    };

    Factorization factorize(complexd z, int truncate_nsub = -1) const {
        const int N = size(), no = N - nf_;
        Factorization f;
        f.op = this;
        if (truncate_nsub > 0) {
            f.R = comp_.compress_truncated(z, truncate_nsub);
        } else {
            f.R = comp_.compress(z, warm_ok_ ? &warm_ : nullptr);
            warm_ = comp_.last_deep();
            warm_ok_ = true;
        }
        f.Aof = K_.block(nf_, 0, no, nf_).cast<complexd>();
        f.Afo = K_.block(0, nf_, nf_, no).cast<complexd>();
        MatrixXcd Aoo = K_.block(nf_, nf_, no, no).cast<complexd>();
        Aoo.diagonal().array() -= z;
        f.lu.compute(Aoo - f.Aof * (f.R * f.Afo));
        return f;
    }

    void reset_warm_start() const { warm_ok_ = false; }

private:
    Generatrix gen_;
    int mode_;
    int m_;
    int nf_ = 0;
    RcipCompressor comp_;
    std::vector<PanelMesh::Block> blocks_;
    std::vector<double> t_, w_, sigma_;
    MatrixXd K_;
    mutable MatrixXcd warm_;
    mutable bool warm_ok_ = false;
};

} // namespace npspec
