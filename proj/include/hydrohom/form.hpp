////////////////////////////////////////////////////////////////////////////////
// form.hpp
////////////////////////////////////////////////////////////////////////////////
// Matrix-free evaluation of the dissipation form on currents J = c + curl(f):
//
//   a(J, Jt) = <J w^T, Jt w^T> + eps^2 [ <eta grad(J u^T), grad(Jt u^T)>
//                                      + <zeta div(J u^T), div(Jt u^T)> ]
//
// (eps = 1 for the unscaled form). The velocity term is evaluated in two
// pieces: the constant background c contributes c (grad u)^T through the
// stored coefficient gradients, while the fluctuation curl(f) u^T is
// differentiated with the grid operators. Splitting this way keeps the
// integrand of a subdomain problem nodewise identical to the integrand of an
// enclosing problem (restriction changes no coefficient values and no
// fluctuation stencils once potentials vanish on enough boundary layers),
// which the stochastic subadditivity checks rely on.
//
// normal_apply realizes the gradient of f -> a(c + curl f, c + curl f)/2 in
// the quadrature-weighted inner product on stream-function planes; it is
// self-adjoint positive semidefinite by construction and is what the CG
// solver iterates on.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_FORM_HPP
#define HYDROHOM_FORM_HPP

#include <optional>

#include "hydrohom/coefficients.hpp"

namespace hydrohom {

struct FormOptions {
    double epsilon = 1.0;
    int theta_samples = 256;
    double osc_threshold = 1e-12; // oscillation at or below this flags a seminorm
    bool allow_seminorm = false;
    bool dealias = false;         // 3/2-rule quadrature, periodic grids only
};

// Analytic description of a medium: enough to build coefficient sets on any
// grid, including x/eps-resampled copies for the rescaled form.
struct MediumSpec {
    int m = 2;
    std::vector<AnalyticScalar> a_entries;
    std::vector<AnalyticScalar> b_entries;
    AnalyticScalar eta = analytic_constant(0.1);
    AnalyticScalar zeta = analytic_constant(0.0);
    double condition_cap = 1e8;
    std::function<void(const Grid&, double eps)> precheck; // optional validation

    CoefficientSet build(const Grid& g, double eps = 1.0) const {
        if (precheck) precheck(g, eps);
        if (eps == 1.0)
            return make_coefficients(g, m, a_entries, b_entries, eta, zeta, condition_cap);
        std::vector<AnalyticScalar> ar, br;
        for (const auto& e : a_entries) ar.push_back(analytic_rescale(e, eps));
        for (const auto& e : b_entries) br.push_back(analytic_rescale(e, eps));
        return make_coefficients(g, m, ar, br, analytic_rescale(eta, eps),
                                 analytic_rescale(zeta, eps), condition_cap);
    }
};

inline MediumSpec dirac_medium(const AnalyticScalar& gamma, const DiracParams& p = {}) {
    MediumSpec spec;
    spec.m = 2;
    const double sq = std::sqrt(p.sigma_q);
    spec.a_entries = {analytic_constant(-sq), analytic_scale(gamma, sq)};
    spec.b_entries = {compose_map(gamma, p.n), compose_map(gamma, p.s)};
    spec.eta = analytic_constant(p.eta);
    spec.zeta = analytic_constant(p.zeta);
    spec.condition_cap = p.condition_cap;
    spec.precheck = [gamma, p](const Grid& g, double eps) {
        AnalyticScalar gm = (eps == 1.0) ? gamma : analytic_rescale(gamma, eps);
        FieldArray gs = sample(g, gm);
        double worst = std::numeric_limits<double>::infinity();
        for (double v : gs.plane(0)) worst = std::min(worst, v * p.n.f(v) + p.s.f(v));
        if (!(worst >= p.c0))
            throw DegenerateThermodynamics("gamma*n + s fell below the configured floor", worst);
    };
    return spec;
}

inline MediumSpec scalar_medium(const AnalyticScalar& n, double eta, double zeta,
                                double n_floor = 0.5) {
    MediumSpec spec;
    spec.m = 1;
    spec.b_entries = {n};
    spec.eta = analytic_constant(eta);
    spec.zeta = analytic_constant(zeta);
    spec.precheck = [n, n_floor](const Grid& g, double eps) {
        AnalyticScalar nn = (eps == 1.0) ? n : analytic_rescale(n, eps);
        FieldArray ns = sample(g, nn);
        double worst = std::numeric_limits<double>::infinity();
        for (double v : ns.plane(0)) worst = std::min(worst, std::abs(v));
        if (!(worst >= n_floor))
            throw DegenerateThermodynamics("|n| fell below the configured floor", worst);
    };
    return spec;
}

struct FormContext {
    CoefficientSet coeffs; // sampled on the solve grid (x/eps samples for eps < 1)
    double epsilon = 1.0;
    OscillationReport osc;
    bool degenerate = false;
    bool allow_seminorm = false;
    bool dealias = false;
    std::vector<double> wq; // quadrature weights on the solve grid

    // 3/2-rule data (periodic only): coefficients and weights on the refined
    // quadrature grid.
    std::shared_ptr<CoefficientSet> fine;
    std::vector<double> wq_fine;

    const Grid& grid() const { return coeffs.grid; }
    int m() const { return coeffs.m; }

    const CoefficientSet& qcoeffs() const { return dealias ? *fine : coeffs; }
    const Grid& qgrid() const { return dealias ? fine->grid : coeffs.grid; }
    const std::vector<double>& qweights() const { return dealias ? wq_fine : wq; }

    void require_solvable() const {
        if (degenerate && !allow_seminorm)
            throw DegenerateForm(
                "zero-oscillation medium: the form is a seminorm (pass allow_seminorm to "
                "override)");
    }
};

namespace detail {
inline Grid refined_grid(const Grid& g) {
    // 3/2-rule quadrature grid (rounded up to even)
    auto up = [](int n) {
        int r = (3 * n) / 2;
        return r + (r % 2);
    };
    return Grid(g.dim, {up(g.n[0]), g.dim == 2 ? up(g.n[1]) : 1}, g.bc, g.length, g.origin);
}
} // namespace detail

inline FormContext make_form_context(const MediumSpec& spec, const Grid& grid,
                                     const FormOptions& opt = {}) {
    if (opt.epsilon != 1.0) {
        const double inv = 1.0 / opt.epsilon;
        if (std::abs(inv - std::round(inv)) > 1e-9)
            throw NonIntegerScale("1/epsilon must be an integer so the unit cell tiles the domain");
    }
    FormContext ctx;
    ctx.coeffs = spec.build(grid, opt.epsilon);
    ctx.epsilon = opt.epsilon;
    ctx.osc = oscillation(ctx.coeffs, opt.theta_samples, opt.epsilon);
    ctx.degenerate = !(ctx.osc.value > opt.osc_threshold);
    ctx.allow_seminorm = opt.allow_seminorm;
    ctx.wq = quadrature_weights(grid);
    if (opt.dealias) {
        if (!grid.spectral()) throw Error("the 3/2-rule option needs a periodic grid");
        ctx.dealias = true;
        ctx.fine = std::make_shared<CoefficientSet>(
            spec.build(detail::refined_grid(grid), opt.epsilon));
        ctx.wq_fine = quadrature_weights(ctx.fine->grid);
    }
    return ctx;
}

inline FormContext make_form_context(const CoefficientSet& coeffs, const FormOptions& opt = {}) {
    if (opt.epsilon != 1.0 || opt.dealias)
        throw Error("rescaled or dealiased contexts need an analytic MediumSpec");
    FormContext ctx;
    ctx.coeffs = coeffs;
    ctx.osc = oscillation(coeffs, opt.theta_samples);
    ctx.degenerate = !(ctx.osc.value > opt.osc_threshold);
    ctx.allow_seminorm = opt.allow_seminorm;
    ctx.wq = quadrature_weights(coeffs.grid);
    return ctx;
}

////////////////////////////////////////////////////////////////////////////////
// Spectral interpolation between the solve grid and the 3/2 quadrature grid.
// Coarse Nyquist content is filtered (it is exactly the part aliasing
// corrupts), which keeps interp/restrict an exact Euclidean-adjoint pair.
////////////////////////////////////////////////////////////////////////////////
namespace detail {

inline bool interior_mode(int k, int nc) {
    const int s = (k <= nc / 2) ? k : k - nc;
    return std::abs(s) < nc / 2;
}

inline void interp_plane(const Grid& gc, const Grid& gf, std::span<const double> in,
                         std::span<double> out) {
    fft::Spectrum sc = fft::forward(gc, in);
    fft::Spectrum sf;
    sf.n0 = (gf.dim == 2) ? gf.n[0] : 1;
    sf.n1 = (gf.dim == 2) ? gf.n[1] : gf.n[0];
    sf.c.assign(static_cast<std::size_t>(sf.n0) * (sf.n1 / 2 + 1), {0.0, 0.0});
    const double scale = (static_cast<double>(sf.n0) * sf.n1) / (static_cast<double>(sc.n0) * sc.n1);
    for (int k0 = 0; k0 < sc.n0; ++k0) {
        if (sc.n0 > 1 && !interior_mode(k0, sc.n0)) continue;
        const int f0 = (k0 <= sc.n0 / 2) ? k0 : sf.n0 - (sc.n0 - k0);
        for (int k1 = 0; k1 < sc.cols(); ++k1) {
            if (!interior_mode(k1, sc.n1)) continue;
            sf.at(f0, k1) = scale * sc.at(k0, k1);
        }
    }
    fft::inverse(sf, out);
}

inline void restrict_plane(const Grid& gc, const Grid& gf, std::span<const double> in,
                           std::span<double> out) {
    fft::Spectrum sfine = fft::forward(gf, in);
    fft::Spectrum sc;
    sc.n0 = (gc.dim == 2) ? gc.n[0] : 1;
    sc.n1 = (gc.dim == 2) ? gc.n[1] : gc.n[0];
    sc.c.assign(static_cast<std::size_t>(sc.n0) * (sc.n1 / 2 + 1), {0.0, 0.0});
    for (int k0 = 0; k0 < sc.n0; ++k0) {
        if (sc.n0 > 1 && !interior_mode(k0, sc.n0)) continue;
        const int f0 = (k0 <= sc.n0 / 2) ? k0 : sfine.n0 - (sc.n0 - k0);
        for (int k1 = 0; k1 < sc.cols(); ++k1) {
            if (!interior_mode(k1, sc.n1)) continue;
            sc.at(k0, k1) = sfine.at(f0, k1);
        }
    }
    fft::inverse(sc, out);
}

inline FieldArray interp_to(const Grid& gf, const FieldArray& coarse) {
    FieldArray out(gf, coarse.comps);
    for (int c = 0; c < coarse.comps; ++c)
        interp_plane(coarse.grid, gf, coarse.plane(c), out.plane(c));
    return out;
}

inline FieldArray restrict_to(const Grid& gc, const FieldArray& fine) {
    FieldArray out(gc, fine.comps);
    for (int c = 0; c < fine.comps; ++c) restrict_plane(gc, fine.grid, fine.plane(c), out.plane(c));
    return out;
}

} // namespace detail

////////////////////////////////////////////////////////////////////////////////
// Trial pieces
////////////////////////////////////////////////////////////////////////////////

// Work data for one trial current c + curl(f), evaluated on the quadrature
// grid: the fluctuation current, the velocity fluctuation vf = Jf u^T, its
// gradient and divergence.
struct TrialPieces {
    Eigen::MatrixXd c; // D x m background
    FieldArray Jf;     // D*m planes (quadrature grid)
    FieldArray vf;     // D planes
    FieldArray Gf;     // D*D planes, plane(p*D + l) = d_p (vf)_l
    FieldArray df;     // 1 plane
    bool has_fluct = false;
};

namespace detail {

// Compute vf = Jf u^T and its grid derivatives from an assembled fluctuation
// current on the quadrature grid.
inline void finish_velocity(const FormContext& ctx, TrialPieces& tp) {
    const Grid& qg = ctx.qgrid();
    const CoefficientSet& qc = ctx.qcoeffs();
    const int D = qg.dim, m = ctx.m();
    const std::size_t N = qg.npoints();
    tp.vf = FieldArray(qg, D);
    for (int l = 0; l < D; ++l) {
        auto v = tp.vf.plane(l);
        for (int k = 0; k < m; ++k) {
            auto jp = tp.Jf.plane(k * D + l);
            auto up = qc.u.plane(k);
            for (std::size_t x = 0; x < N; ++x) v[x] += jp[x] * up[x];
        }
    }
    tp.Gf = FieldArray(qg, D * D);
    for (int l = 0; l < D; ++l) {
        FieldArray gl = gradient(qg, tp.vf.plane(l));
        for (int p = 0; p < D; ++p)
            std::copy(gl.plane(p).begin(), gl.plane(p).end(), tp.Gf.plane(p * D + l).begin());
    }
    tp.df = divergence(qg, tp.vf);
}

} // namespace detail

inline TrialPieces make_pieces(const FormContext& ctx, const Eigen::MatrixXd& c,
                               const FieldArray* f) {
    const Grid& g = ctx.grid();
    const int D = g.dim, m = ctx.m();
    if (c.rows() != D || c.cols() != m) throw DimensionMismatch("background must be D x m");

    TrialPieces tp;
    tp.c = c;
    if (f && f->comps > 0 && g.dim == 2) {
        if (f->comps != m) throw DimensionMismatch("potential has wrong component count");
        FieldArray Jc = curl_apply(g, *f, m);
        tp.Jf = ctx.dealias ? detail::interp_to(ctx.qgrid(), Jc) : std::move(Jc);
        tp.has_fluct = true;
    } else {
        tp.Jf = FieldArray(ctx.qgrid(), D * m);
        tp.has_fluct = false;
    }
    detail::finish_velocity(ctx, tp);
    return tp;
}

// Trial from an explicit current: the stored mean is the background, the
// remainder is the fluctuation.
inline TrialPieces make_pieces(const FormContext& ctx, const CurrentField& cf) {
    const Grid& g = ctx.grid();
    const int D = g.dim;
    TrialPieces tp;
    tp.c = cf.mean_part;
    FieldArray fluct = cf.values;
    for (int k = 0; k < cf.m; ++k)
        for (int l = 0; l < D; ++l) {
            auto p = fluct.plane(k * D + l);
            for (double& v : p) v -= cf.mean_part(l, k);
        }
    tp.Jf = ctx.dealias ? detail::interp_to(ctx.qgrid(), fluct) : std::move(fluct);
    tp.has_fluct = true;
    detail::finish_velocity(ctx, tp);
    return tp;
}

// Full velocity-gradient at one node: background c (grad u)^T plus the
// fluctuation stencil value.
inline void total_grad_at(const FormContext& ctx, const TrialPieces& tp, std::size_t x,
                          Eigen::Matrix2d& G, double& d) {
    const CoefficientSet& qc = ctx.qcoeffs();
    const int D = ctx.grid().dim, m = ctx.m();
    G.setZero();
    d = 0.0;
    for (int p = 0; p < D; ++p)
        for (int l = 0; l < D; ++l) {
            double v = tp.Gf.at(p * D + l, x);
            for (int k = 0; k < m; ++k) v += tp.c(l, k) * qc.grad_u.at(p * m + k, x);
            G(p, l) = v;
        }
    d = tp.df.at(0, x);
    for (int l = 0; l < D; ++l)
        for (int k = 0; k < m; ++k) d += tp.c(l, k) * qc.grad_u.at(l * m + k, x);
}

// a(A, B) for two assembled trials.
inline double apply_form_pieces(const FormContext& ctx, const TrialPieces& A,
                                const TrialPieces& B) {
    const Grid& qg = ctx.qgrid();
    const CoefficientSet& qc = ctx.qcoeffs();
    const auto& wq = ctx.qweights();
    const int D = qg.dim, m = ctx.m();
    const double eps2 = ctx.epsilon * ctx.epsilon;
    const std::size_t N = qg.npoints();

    double acc = 0.0;
    Eigen::Matrix2d GA, GB, eta;
    double dA, dB;
    for (std::size_t x = 0; x < N; ++x) {
        double node = 0.0;
        // w-term: (J w^T : Jt w^T)
        for (int r = 0; r < m - 1; ++r)
            for (int l = 0; l < D; ++l) {
                double ja = 0.0, jb = 0.0;
                for (int k = 0; k < m; ++k) {
                    const double wv = qc.w.at(r * m + k, x);
                    ja += (A.c(l, k) + A.Jf.at(k * D + l, x)) * wv;
                    jb += (B.c(l, k) + B.Jf.at(k * D + l, x)) * wv;
                }
                node += ja * jb;
            }
        // u-term
        total_grad_at(ctx, A, x, GA, dA);
        total_grad_at(ctx, B, x, GB, dB);
        double uterm = 0.0;
        for (int p = 0; p < D; ++p)
            for (int q = 0; q < D; ++q) {
                const double e = qc.eta.at(p * D + q, x);
                if (e == 0.0) continue;
                for (int l = 0; l < D; ++l) uterm += GA(p, l) * e * GB(q, l);
            }
        uterm += qc.zeta.at(0, x) * dA * dB;
        node += eps2 * uterm;
        acc += wq[x] * node;
    }
    return acc;
}

// Public entry point on currents.
inline double apply_form(const FormContext& ctx, const CurrentField& J, const CurrentField& Jt) {
    const Grid& g = ctx.grid();
    if (!J.grid.same_layout(g) || !Jt.grid.same_layout(g))
        throw DimensionMismatch("currents live on a different grid than the context");
    if (J.m != ctx.m() || Jt.m != ctx.m()) throw DimensionMismatch("current column count");
    TrialPieces A = make_pieces(ctx, J), B = make_pieces(ctx, Jt);
    return apply_form_pieces(ctx, A, B);
}

// Energy a(c + curl f, c + curl f); f may be null.
inline double form_energy(const FormContext& ctx, const Eigen::MatrixXd& c, const FieldArray* f) {
    TrialPieces tp = make_pieces(ctx, c, f);
    return apply_form_pieces(ctx, tp, tp);
}

////////////////////////////////////////////////////////////////////////////////
// Normal operator on stream-function planes
////////////////////////////////////////////////////////////////////////////////

// Gradient of (1/2) a(c + curl f, c + curl f) with respect to f, in the
// quadrature-weighted inner product: Pt A (c + curl f) with P = curl.
// Self-adjoint PSD in f for fixed c = 0.
inline FieldArray normal_apply(const FormContext& ctx, const FieldArray& f,
                               const Eigen::MatrixXd& c) {
    const Grid& g = ctx.grid();
    const Grid& qg = ctx.qgrid();
    const CoefficientSet& qc = ctx.qcoeffs();
    const auto& wq = ctx.qweights();
    const int D = g.dim, m = ctx.m();
    const double eps2 = ctx.epsilon * ctx.epsilon;
    const std::size_t N = qg.npoints();

    if (g.dim == 1) return FieldArray(g, 0); // no degrees of freedom

    TrialPieces tp = make_pieces(ctx, c, &f);

    // Y = H [ (J w^T) w + z u ] with z from the adjoint of the S chain
    FieldArray Y(qg, D * m);
    Eigen::Matrix2d G;
    double d;

    // w-term contribution
    for (std::size_t x = 0; x < N; ++x) {
        for (int r = 0; r < m - 1; ++r)
            for (int l = 0; l < D; ++l) {
                double jw = 0.0;
                for (int k = 0; k < m; ++k)
                    jw += (tp.c(l, k) + tp.Jf.at(k * D + l, x)) * qc.w.at(r * m + k, x);
                jw *= wq[x];
                for (int k = 0; k < m; ++k) Y.at(k * D + l, x) += jw * qc.w.at(r * m + k, x);
            }
    }

    // u-term: weighted eta G and zeta d, pulled back through the stencils
    FieldArray etaG(qg, D * D), zd(qg, 1);
    for (std::size_t x = 0; x < N; ++x) {
        total_grad_at(ctx, tp, x, G, d);
        for (int p = 0; p < D; ++p)
            for (int l = 0; l < D; ++l) {
                double v = 0.0;
                for (int q = 0; q < D; ++q) v += qc.eta.at(p * D + q, x) * G(q, l);
                etaG.at(p * D + l, x) = wq[x] * eps2 * v;
            }
        zd.at(0, x) = wq[x] * eps2 * qc.zeta.at(0, x) * d;
    }
    // z_l = sum_p Dp^T (eta G)_{p l} + D_l^T (zeta d)
    FieldArray z(qg, D);
    std::vector<double> tmp(N);
    for (int l = 0; l < D; ++l) {
        auto zl = z.plane(l);
        for (int p = 0; p < D; ++p) {
            deriv_transpose(qg, etaG.plane(p * D + l), tmp, p);
            for (std::size_t x = 0; x < N; ++x) zl[x] += tmp[x];
        }
        deriv_transpose(qg, zd.plane(0), tmp, l);
        for (std::size_t x = 0; x < N; ++x) zl[x] += tmp[x];
    }
    for (int k = 0; k < m; ++k) {
        auto up = qc.u.plane(k);
        for (int l = 0; l < D; ++l) {
            auto yp = Y.plane(k * D + l);
            auto zl = z.plane(l);
            for (std::size_t x = 0; x < N; ++x) yp[x] += zl[x] * up[x];
        }
    }

    FieldArray Yc = ctx.dealias ? detail::restrict_to(g, Y) : std::move(Y);
    FieldArray e = curl_transpose(g, Yc, m);

    // back to the weighted inner product on the solve grid
    const auto& wg = ctx.wq;
    for (int k = 0; k < m; ++k) {
        auto p = e.plane(k);
        for (std::size_t x = 0; x < p.size(); ++x) p[x] /= wg[x];
    }
    apply_mask(g, e);
    return e;
}

////////////////////////////////////////////////////////////////////////////////
// Stability constant
////////////////////////////////////////////////////////////////////////////////

struct StabilityEstimate {
    double c_hat = 0.0;
    CurrentField worst;
    std::vector<double> ratios;
};

// C_hat = max over random admissible currents of O <|J|^2> / a(J, J). The
// trial set mixes pure constants, pure fluctuations and combinations; the
// fluctuations come from low-order Fourier potentials so the same functions
// are comparable across grid resolutions.
inline StabilityEstimate estimate_stability_constant(const FormContext& ctx, int samples,
                                                     std::uint64_t seed = 2024) {
    if (ctx.degenerate)
        throw DegenerateForm("stability constant undefined for zero-oscillation media");
    if (samples < 32) throw Error("stability estimation needs at least 32 samples");
    const Grid& g = ctx.grid();
    const int D = g.dim, m = ctx.m();

    StabilityEstimate est;
    est.ratios.reserve(samples);
    for (int s = 0; s < samples; ++s) {
        RngStream rng(hash_combine(seed, s));
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(D, m);
        PotentialField f(g, m);
        const int kind = s % 3; // 0: constant only, 1: fluctuation only, 2: both
        if (kind != 1)
            for (int l = 0; l < D; ++l)
                for (int k = 0; k < m; ++k) c(l, k) = rng.sym();
        if (kind != 0 && g.dim == 2) {
            for (int k = 0; k < m; ++k) {
                AnalyticScalar fs = random_fourier(hash_combine(seed, 1000 + s * m + k), 3, 1.0);
                FieldArray v = sample(g, fs);
                std::copy(v.plane(0).begin(), v.plane(0).end(), f.f.plane(k).begin());
            }
            apply_mask(g, f.f);
        }
        CurrentField J = potential_to_current(f, c);
        const double j2 = inner_product(J.values, J.values);
        const double energy = apply_form(ctx, J, J);
        if (energy <= 0.0 || j2 == 0.0) continue;
        const double ratio = ctx.osc.value * j2 / energy;
        est.ratios.push_back(ratio);
        if (ratio > est.c_hat) {
            est.c_hat = ratio;
            est.worst = J;
        }
    }
    return est;
}

} // namespace hydrohom

#endif
