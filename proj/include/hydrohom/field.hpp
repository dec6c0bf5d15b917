////////////////////////////////////////////////////////////////////////////////
// field.hpp
////////////////////////////////////////////////////////////////////////////////
// Nodal field storage. A FieldArray holds `comps` scalar planes over one grid
// (plane-major layout, so each component is contiguous for the transforms).
// Tensor-valued fields fix a flattening convention once and for all:
//
//   currents J (D x m):      plane(k*D + l)  for column k, spatial index l
//   gradients  (D x m):      plane(p*m + j)  for axis p, component j
//   matrices a, w ((m-1)xm): plane(r*m + j)  row-major
//   eta (D x D):             plane(p*D + q)
//
// The inner product <F, G> is the plain quadrature integral over the domain
// of the pointwise Frobenius product Tr(F^T G); nothing here divides by |X|.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_FIELD_HPP
#define HYDROHOM_FIELD_HPP

#include <cmath>
#include <span>
#include <vector>

#include "hydrohom/grid.hpp"

namespace hydrohom {

struct FieldArray {
    Grid grid;
    int comps = 0;
    std::vector<double> data;

    FieldArray() = default;
    FieldArray(const Grid& g, int comps_)
        : grid(g), comps(comps_), data(static_cast<std::size_t>(comps_) * g.npoints(), 0.0) {}

    std::size_t npoints() const { return grid.npoints(); }

    std::span<double> plane(int c) {
        return std::span<double>(data.data() + static_cast<std::size_t>(c) * npoints(), npoints());
    }
    std::span<const double> plane(int c) const {
        return std::span<const double>(data.data() + static_cast<std::size_t>(c) * npoints(), npoints());
    }

    double& at(int c, std::size_t node) { return data[static_cast<std::size_t>(c) * npoints() + node]; }
    double at(int c, std::size_t node) const { return data[static_cast<std::size_t>(c) * npoints() + node]; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    FieldArray& operator+=(const FieldArray& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }
    FieldArray& operator-=(const FieldArray& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
        return *this;
    }
    FieldArray& operator*=(double s) {
        for (double& v : data) v *= s;
        return *this;
    }
    void axpy(double alpha, const FieldArray& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += alpha * o.data[i];
    }

    void require_same_shape(const FieldArray& o) const {
        if (comps != o.comps || !grid.same_layout(o.grid))
            throw DimensionMismatch("field shapes do not match");
    }
};

// Quadrature weights as a flat per-node array (uniform on periodic grids).
inline std::vector<double> quadrature_weights(const Grid& g) {
    std::vector<double> wq(g.npoints());
    if (g.dim == 1) {
        for (int i = 0; i < g.n[0]; ++i) wq[g.index(i)] = g.weight1d(0, i);
    } else {
        for (int i0 = 0; i0 < g.n[0]; ++i0)
            for (int i1 = 0; i1 < g.n[1]; ++i1) wq[g.index(i0, i1)] = g.weight(i0, i1);
    }
    return wq;
}

// <F, G> = sum over nodes of weight * Tr(F^T G).
inline double inner_product(const FieldArray& f, const FieldArray& g) {
    f.require_same_shape(g);
    const auto wq = quadrature_weights(f.grid);
    double acc = 0.0;
    for (int c = 0; c < f.comps; ++c) {
        auto a = f.plane(c);
        auto b = g.plane(c);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += wq[i] * a[i] * b[i];
        acc += s;
    }
    return acc;
}

inline double norm(const FieldArray& f) { return std::sqrt(inner_product(f, f)); }

// Max norm over all planes and nodes.
inline double max_abs(const FieldArray& f) {
    double m = 0.0;
    for (double v : f.data) m = std::max(m, std::abs(v));
    return m;
}

inline double mean_of_plane(const FieldArray& f, int c) {
    const auto wq = quadrature_weights(f.grid);
    auto a = f.plane(c);
    double s = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += wq[i] * a[i];
        wsum += wq[i];
    }
    return s / wsum;
}

} // namespace hydrohom

#endif
