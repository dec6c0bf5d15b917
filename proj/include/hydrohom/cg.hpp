////////////////////////////////////////////////////////////////////////////////
// cg.hpp
////////////////////////////////////////////////////////////////////////////////
// Preconditioned conjugate gradients on stream-function planes (or on the
// extended (constant, planes) vectors of the prescribed-profile problem).
//
// The preconditioner inverts the constant-coefficient symbol of the normal
// operator mode by mode:
//
//   S(kappa) = |sigma|^2 Wbar + eps^2 etabar |sigma|^4 Ubar,
//
// with Wbar, Ubar the mean w^T w and u^T u matrices and sigma the per-axis
// derivative symbol (exact wavenumbers on spectral grids, circulant
// sin(kappa h)/h for the centered stencils of the FD grids). On a
// homogeneous periodic medium this is the exact inverse, so CG converges in
// one step; elsewhere it removes the mesh-dependent part of the condition
// number. Null modes of the curl (the mean of each stream function, plus
// Nyquist content on spectral grids) are projected out.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_CG_HPP
#define HYDROHOM_CG_HPP

#include "hydrohom/form.hpp"

namespace hydrohom {

struct CgOptions {
    double tol = 1e-10;
    double max_iter_factor = 50.0; // max iterations = factor * sqrt(#dof)
    bool precondition = true;
};

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = true;
};

class SymbolPreconditioner {
  public:
    SymbolPreconditioner() = default;

    SymbolPreconditioner(const FormContext& ctx) : grid_(ctx.grid()), m_(ctx.m()) {
        const Grid& g = grid_;
        if (g.dim == 1) return;
        const CoefficientSet& cs = ctx.coeffs;
        const int m = m_;
        const auto& wq = ctx.wq;

        Eigen::MatrixXd W2 = Eigen::MatrixXd::Zero(m, m), U2 = Eigen::MatrixXd::Zero(m, m);
        double etam = 0.0, vol = 0.0;
        for (std::size_t x = 0; x < g.npoints(); ++x) {
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k) {
                    double wv = 0.0;
                    for (int r = 0; r < m - 1; ++r)
                        wv += cs.w.at(r * m + j, x) * cs.w.at(r * m + k, x);
                    W2(j, k) += wq[x] * wv;
                    U2(j, k) += wq[x] * cs.u.at(j, x) * cs.u.at(k, x);
                }
            double tr = 0.0;
            for (int p = 0; p < g.dim; ++p) tr += cs.eta.at(p * g.dim + p, x);
            etam += wq[x] * tr / g.dim;
            vol += wq[x];
        }
        W2 /= vol;
        U2 /= vol;
        etam /= vol;

        const int n0 = g.n[0], n1 = g.n[1];
        const int cols = n1 / 2 + 1;
        inv_.resize(static_cast<std::size_t>(n0) * cols * m * m, 0.0);
        const double eps2 = ctx.epsilon * ctx.epsilon;

        // circulant symbol of the derivative along each axis
        auto sigma = [&](int k, int n, int axis) {
            if (g.spectral()) return fft::wavenumber(k, n, g.length[axis]);
            const double h = g.spacing(axis);
            return std::sin(2.0 * M_PI * k / n) / h;
        };
        // ridge for near-null modes on FD grids: symbol of the lowest mode
        const double s0 = sigma(1, n0, 0), s1v = sigma(1, n1, 1);
        const double ridge = std::min(s0 * s0, s1v * s1v);

        Eigen::MatrixXd S(m, m);
        for (int k0 = 0; k0 < n0; ++k0)
            for (int k1 = 0; k1 < cols; ++k1) {
                const double sa = sigma(k0, n0, 0), sb = sigma(k1, n1, 1);
                double s2 = sa * sa + sb * sb;
                if (s2 <= 1e-14) {
                    if (g.spectral()) continue; // projected out (stored zero)
                    s2 = ridge;
                }
                S = s2 * W2 + eps2 * etam * s2 * s2 * U2;
                Eigen::MatrixXd Sinv = S.inverse();
                double* dst = inv_.data() + (static_cast<std::size_t>(k0) * cols + k1) * m * m;
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) dst[i * m + j] = Sinv(i, j);
            }
        wq_ = ctx.wq;
        const double h = g.cell_volume();
        for (double& v : inv_) v /= h; // undo the weight scale in the flat interior
        active_ = true;
    }

    bool active() const { return active_; }

    // z = C(H r): folding the quadrature weights in keeps the map
    // self-adjoint in the weighted inner product CG iterates with (the
    // circulant C alone is only Euclidean-symmetric, which the trapezoid
    // boundary weights of the FD grids would break).
    FieldArray apply(const FieldArray& r) const {
        if (!active_) return r;
        const Grid& g = grid_;
        const int m = m_;
        FieldArray hr = r;
        for (int k = 0; k < m; ++k) {
            auto p = hr.plane(k);
            for (std::size_t x = 0; x < p.size(); ++x) p[x] *= wq_[x];
        }
        std::vector<fft::Spectrum> spec(m);
        for (int k = 0; k < m; ++k) spec[k] = fft::forward(g, hr.plane(k));
        const int cols = spec[0].cols();
        std::vector<std::complex<double>> in(m), out(m);
        for (int k0 = 0; k0 < spec[0].n0; ++k0)
            for (int k1 = 0; k1 < cols; ++k1) {
                const double* Sinv =
                    inv_.data() + (static_cast<std::size_t>(k0) * cols + k1) * m * m;
                for (int i = 0; i < m; ++i) in[i] = spec[i].at(k0, k1);
                for (int i = 0; i < m; ++i) {
                    std::complex<double> acc = 0.0;
                    for (int j = 0; j < m; ++j) acc += Sinv[i * m + j] * in[j];
                    out[i] = acc;
                }
                for (int i = 0; i < m; ++i) spec[i].at(k0, k1) = out[i];
            }
        FieldArray z(g, m);
        for (int k = 0; k < m; ++k) fft::inverse(spec[k], z.plane(k));
        apply_mask(g, z);
        return z;
    }

  private:
    Grid grid_;
    int m_ = 0;
    std::vector<double> inv_;
    std::vector<double> wq_;
    bool active_ = false;
};

// Generic preconditioned CG. Vec needs +=, *=, axpy and a zero-initialized
// copy of the rhs shape; Apply/Prec/Dot close over the operator data.
template <class Vec, class Apply, class Prec, class Dot>
CgResult cg_solve(Apply&& A, Prec&& M, Dot&& dot, const Vec& rhs, Vec& x, int max_iterations,
                  double tol, const FormContext* ctx_for_errors = nullptr) {
    CgResult res;
    const double rhs2 = dot(rhs, rhs);
    if (rhs2 == 0.0) return res; // x stays zero

    Vec r = rhs;
    Vec z = M(r);
    Vec p = z;
    double rz = dot(r, z);
    double rel = 1.0;
    for (int it = 1; it <= max_iterations; ++it) {
        Vec Ap = A(p);
        const double pAp = dot(p, Ap);
        if (!(pAp > 0.0)) {
            if (ctx_for_errors && ctx_for_errors->degenerate)
                throw DegenerateForm("CG hit the null space of a seminorm problem");
            throw NoConvergence("CG breakdown: operator not positive on the Krylov space", it,
                                rel);
        }
        const double alpha = rz / pAp;
        x.axpy(alpha, p);
        r.axpy(-alpha, Ap);
        rel = std::sqrt(dot(r, r) / rhs2);
        res.iterations = it;
        res.relative_residual = rel;
        if (rel <= tol) return res;
        z = M(r);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        p *= beta;
        p += z;
    }
    res.converged = false;
    return res;
}

} // namespace hydrohom

#endif
