////////////////////////////////////////////////////////////////////////////////
// ops.hpp
////////////////////////////////////////////////////////////////////////////////
// Discrete differential operators and the divergence-free current
// representation.
//
// Periodic grids differentiate spectrally (exact for resolved modes, Nyquist
// derivative zeroed). Dirichlet/natural grids use the second-order
// summation-by-parts pair: centered differences inside, one-sided stencils at
// the boundary, together with the trapezoid weights of grid.hpp. With these
// choices <D f, g>_H + <f, D g>_H equals the boundary flux exactly, so
// discrete integration by parts holds without remainder for fields vanishing
// at the boundary.
//
// Currents are represented as J = curl(f) + c: one stream function per
// current column in D = 2 (J_k = (-d2 f_k, d1 f_k) + c_k), and J = c in
// D = 1 where the antisymmetric potential is empty. Because the per-axis
// difference operators commute, the discrete divergence of curl(f) vanishes
// identically on both grid families.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_OPS_HPP
#define HYDROHOM_OPS_HPP

#include <Eigen/Dense>

#include "hydrohom/fft.hpp"
#include "hydrohom/field.hpp"

namespace hydrohom {

// Nodes within this many layers of a Dirichlet boundary are clamped to zero.
// Three layers make the current and the velocity fluctuation vanish on the
// two outermost layers, which is what lets energies of zero-glued potentials
// tile exactly across subdomain interfaces in the subadditivity runs.
inline constexpr int kDirichletClampLayers = 3;

namespace detail {

// SBP(2,1) first derivative along a line of length n, spacing h.
inline void sbp_line(const double* x, double* y, int n, std::ptrdiff_t stride, double h) {
    const double inv = 1.0 / h, half = 0.5 / h;
    y[0] = (x[stride] - x[0]) * inv;
    for (int j = 1; j < n - 1; ++j)
        y[j * stride] = (x[(j + 1) * stride] - x[(j - 1) * stride]) * half;
    y[(n - 1) * stride] = (x[(n - 1) * stride] - x[(n - 2) * stride]) * inv;
}

// Euclidean transpose of sbp_line (scatter form).
inline void sbp_line_transpose(const double* x, double* y, int n, std::ptrdiff_t stride, double h) {
    const double inv = 1.0 / h, half = 0.5 / h;
    for (int j = 0; j < n; ++j) y[j * stride] = 0.0;
    y[0] += -inv * x[0];
    y[stride] += inv * x[0];
    for (int j = 1; j < n - 1; ++j) {
        y[(j - 1) * stride] += -half * x[j * stride];
        y[(j + 1) * stride] += half * x[j * stride];
    }
    y[(n - 2) * stride] += -inv * x[(n - 1) * stride];
    y[(n - 1) * stride] += inv * x[(n - 1) * stride];
}

inline void fd_deriv(const Grid& g, std::span<const double> in, std::span<double> out,
                     int axis, bool transpose) {
    const double h = g.spacing(axis);
    if (g.dim == 1) {
        (transpose ? sbp_line_transpose : sbp_line)(in.data(), out.data(), g.n[0], 1, h);
        return;
    }
    if (axis == 0) {
        for (int i1 = 0; i1 < g.n[1]; ++i1)
            (transpose ? sbp_line_transpose : sbp_line)(in.data() + i1, out.data() + i1, g.n[0],
                                                        g.n[1], h);
    } else {
        for (int i0 = 0; i0 < g.n[0]; ++i0)
            (transpose ? sbp_line_transpose : sbp_line)(in.data() + std::size_t(i0) * g.n[1],
                                                        out.data() + std::size_t(i0) * g.n[1],
                                                        g.n[1], 1, h);
    }
}

inline void spectral_deriv(const Grid& g, std::span<const double> in, std::span<double> out,
                           int axis) {
    fft::Spectrum s = fft::forward(g, in);
    const int rows = s.n0, cols = s.cols();
    for (int k0 = 0; k0 < rows; ++k0) {
        for (int k1 = 0; k1 < cols; ++k1) {
            double kap;
            if (g.dim == 1)
                kap = fft::wavenumber(k1, s.n1, g.length[0]);
            else
                kap = (axis == 0) ? fft::wavenumber(k0, s.n0, g.length[0])
                                  : fft::wavenumber(k1, s.n1, g.length[1]);
            s.at(k0, k1) *= std::complex<double>(0.0, kap);
        }
    }
    fft::inverse(s, out);
}

} // namespace detail

// d/dx_axis. On periodic grids the Euclidean transpose of the derivative is
// its negative (real skew circulant); on FD grids it is the explicit SBP
// transpose.
inline void deriv(const Grid& g, std::span<const double> in, std::span<double> out, int axis) {
    if (axis < 0 || axis >= g.dim) throw DimensionMismatch("derivative axis out of range");
    if (g.spectral())
        detail::spectral_deriv(g, in, out, axis);
    else
        detail::fd_deriv(g, in, out, axis, false);
}

inline void deriv_transpose(const Grid& g, std::span<const double> in, std::span<double> out,
                            int axis) {
    if (axis < 0 || axis >= g.dim) throw DimensionMismatch("derivative axis out of range");
    if (g.spectral()) {
        detail::spectral_deriv(g, in, out, axis);
        for (double& v : out) v = -v;
    } else {
        detail::fd_deriv(g, in, out, axis, true);
    }
}

// Gradient of a scalar plane: D output planes, layout (axis).
inline FieldArray gradient(const Grid& g, std::span<const double> plane) {
    FieldArray out(g, g.dim);
    for (int ax = 0; ax < g.dim; ++ax) deriv(g, plane, out.plane(ax), ax);
    return out;
}

// Divergence of a D-component vector field.
inline FieldArray divergence(const Grid& g, const FieldArray& vec) {
    if (vec.comps != g.dim) throw DimensionMismatch("divergence expects D components");
    FieldArray out(g, 1);
    std::vector<double> tmp(g.npoints());
    for (int ax = 0; ax < g.dim; ++ax) {
        deriv(g, vec.plane(ax), tmp, ax);
        auto o = out.plane(0);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += tmp[i];
    }
    return out;
}

////////////////////////////////////////////////////////////////////////////////
// Potentials and currents
////////////////////////////////////////////////////////////////////////////////

struct PotentialField {
    Grid grid;
    int m = 0;
    FieldArray f; // m stream-function planes in D = 2; zero planes in D = 1

    PotentialField() = default;
    PotentialField(const Grid& g, int m_) : grid(g), m(m_), f(g, g.dim == 2 ? m_ : 0) {}
};

struct CurrentField {
    Grid grid;
    int m = 0;
    FieldArray values;          // D*m planes, plane(k*D + l)
    Eigen::MatrixXd mean_part;  // D x m constant part c

    CurrentField() = default;
    CurrentField(const Grid& g, int m_)
        : grid(g), m(m_), values(g, g.dim * m_), mean_part(Eigen::MatrixXd::Zero(g.dim, m_)) {}
};

// True where the node is free under the Dirichlet clamp.
inline bool dirichlet_free(const Grid& g, int i0, int i1) {
    const int L = kDirichletClampLayers;
    if (i0 < L || i0 >= g.n[0] - L) return false;
    if (g.dim == 2 && (i1 < L || i1 >= g.n[1] - L)) return false;
    return true;
}

inline void apply_dirichlet_mask(const Grid& g, std::span<double> plane) {
    if (g.dim == 1) {
        for (int i = 0; i < g.n[0]; ++i)
            if (!dirichlet_free(g, i, 0)) plane[g.index(i)] = 0.0;
    } else {
        for (int i0 = 0; i0 < g.n[0]; ++i0)
            for (int i1 = 0; i1 < g.n[1]; ++i1)
                if (!dirichlet_free(g, i0, i1)) plane[g.index(i0, i1)] = 0.0;
    }
}

inline void apply_mask(const Grid& g, FieldArray& f) {
    if (g.bc != Bc::dirichlet) return;
    for (int c = 0; c < f.comps; ++c) apply_dirichlet_mask(g, f.plane(c));
}

// curl(f): m stream planes -> D*m current planes. D = 1 yields zero.
inline FieldArray curl_apply(const Grid& g, const FieldArray& f, int m) {
    FieldArray out(g, g.dim * m);
    if (g.dim == 1) return out;
    if (f.comps != m) throw DimensionMismatch("potential has wrong component count");
    std::vector<double> tmp(g.npoints());
    for (int k = 0; k < m; ++k) {
        deriv(g, f.plane(k), tmp, 1); // J_x = -d2 f
        auto jx = out.plane(k * 2 + 0);
        for (std::size_t i = 0; i < tmp.size(); ++i) jx[i] = -tmp[i];
        deriv(g, f.plane(k), out.plane(k * 2 + 1), 0); // J_y = d1 f
    }
    return out;
}

// Euclidean transpose of curl_apply: D*m current planes -> m stream planes.
inline FieldArray curl_transpose(const Grid& g, const FieldArray& y, int m) {
    FieldArray out(g, g.dim == 2 ? m : 0);
    if (g.dim == 1) return out;
    if (y.comps != 2 * m) throw DimensionMismatch("current has wrong component count");
    std::vector<double> tmp(g.npoints());
    for (int k = 0; k < m; ++k) {
        deriv_transpose(g, y.plane(k * 2 + 0), tmp, 1);
        auto o = out.plane(k);
        for (std::size_t i = 0; i < tmp.size(); ++i) o[i] = -tmp[i];
        deriv_transpose(g, y.plane(k * 2 + 1), tmp, 0);
        for (std::size_t i = 0; i < tmp.size(); ++i) o[i] += tmp[i];
    }
    return out;
}

// J = curl(f) + c. The mean of curl(f) vanishes on periodic grids and on
// Dirichlet-clamped potentials, so the spatial mean of J is c there.
inline CurrentField potential_to_current(const PotentialField& f, const Eigen::MatrixXd& c) {
    const Grid& g = f.grid;
    if (c.rows() != g.dim || c.cols() != f.m)
        throw DimensionMismatch("constant part must be D x m");
    CurrentField out(g, f.m);
    out.mean_part = c;
    if (g.dim == 2) out.values = curl_apply(g, f.f, f.m);
    for (int k = 0; k < f.m; ++k)
        for (int l = 0; l < g.dim; ++l) {
            auto p = out.values.plane(k * g.dim + l);
            const double add = c(l, k);
            for (double& v : p) v += add;
        }
    return out;
}

} // namespace hydrohom

#endif
