////////////////////////////////////////////////////////////////////////////////
// grid.hpp
////////////////////////////////////////////////////////////////////////////////
// Structured node grids on rectangles [o1, o1+L1] x [o2, o2+L2] in D = 1, 2.
//
// Periodic grids carry n equispaced nodes per axis (spacing L/n, no duplicate
// endpoint) and the midpoint quadrature rule, which is exact for resolved
// trigonometric polynomials. Dirichlet and natural grids include both
// endpoints (spacing L/(n-1)) and use the trapezoid rule; the half weights at
// the boundary are what makes the summation-by-parts identities of the
// difference operators exact.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_GRID_HPP
#define HYDROHOM_GRID_HPP

#include <array>
#include <cstddef>
#include <string>

#include "hydrohom/errors.hpp"

namespace hydrohom {

enum class Bc { periodic, dirichlet, natural };

inline const char* to_string(Bc bc) {
    switch (bc) {
        case Bc::periodic: return "periodic";
        case Bc::dirichlet: return "dirichlet";
        case Bc::natural: return "natural";
    }
    return "?";
}

struct Grid {
    int dim = 2;
    std::array<int, 2> n{4, 4};
    std::array<double, 2> length{1.0, 1.0};
    std::array<double, 2> origin{0.0, 0.0};
    Bc bc = Bc::periodic;

    Grid() = default;
    Grid(int dim_, std::array<int, 2> n_, Bc bc_,
         std::array<double, 2> length_ = {1.0, 1.0},
         std::array<double, 2> origin_ = {0.0, 0.0})
        : dim(dim_), n(n_), length(length_), origin(origin_), bc(bc_) {
        if (dim != 1 && dim != 2)
            throw DimensionMismatch("grid dimension must be 1 or 2");
        if (dim == 1) {
            n[1] = 1;
            length[1] = 1.0;
        }
        for (int ax = 0; ax < dim; ++ax) {
            if (n[ax] < 4)
                throw DimensionMismatch("grid needs at least 4 points per axis");
            if (bc == Bc::periodic && n[ax] % 2 != 0)
                throw DimensionMismatch("periodic spectral grids need an even point count");
            if (!(length[ax] > 0.0))
                throw DimensionMismatch("grid edge lengths must be positive");
        }
    }

    bool spectral() const { return bc == Bc::periodic; }

    std::size_t npoints() const {
        return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(dim == 2 ? n[1] : 1);
    }

    double spacing(int axis) const {
        return spectral() ? length[axis] / n[axis] : length[axis] / (n[axis] - 1);
    }

    // Product of per-axis spacings; equals volume()/npoints() on periodic grids.
    double cell_volume() const {
        double h = spacing(0);
        if (dim == 2) h *= spacing(1);
        return h;
    }

    double volume() const { return dim == 2 ? length[0] * length[1] : length[0]; }

    std::size_t index(int i0, int i1 = 0) const {
        return static_cast<std::size_t>(i0) * (dim == 2 ? n[1] : 1) + i1;
    }

    double coord(int axis, int i) const { return origin[axis] + spacing(axis) * i; }

    // 1D quadrature weight along one axis (midpoint or trapezoid).
    double weight1d(int axis, int i) const {
        double h = spacing(axis);
        if (spectral()) return h;
        return (i == 0 || i == n[axis] - 1) ? 0.5 * h : h;
    }

    double weight(int i0, int i1 = 0) const {
        double wq = weight1d(0, i0);
        if (dim == 2) wq *= weight1d(1, i1);
        return wq;
    }

    bool same_layout(const Grid& o) const {
        return dim == o.dim && n == o.n && length == o.length && bc == o.bc;
    }

    std::string describe() const {
        std::string s = std::to_string(dim) + "d " + std::to_string(n[0]);
        if (dim == 2) s += "x" + std::to_string(n[1]);
        s += " ";
        s += to_string(bc);
        return s;
    }
};

} // namespace hydrohom

#endif
