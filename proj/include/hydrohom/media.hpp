////////////////////////////////////////////////////////////////////////////////
// media.hpp
////////////////////////////////////////////////////////////////////////////////
// Scalar coefficient profiles with exact gradients. Everything downstream
// (dual bases, oscillation, quadratic forms) consumes pointwise values plus
// first derivatives; supplying the derivative analytically keeps coefficient
// data independent of any particular grid, which is what makes restriction to
// subdomains and x/eps rescaling exact operations.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_MEDIA_HPP
#define HYDROHOM_MEDIA_HPP

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "hydrohom/field.hpp"
#include "hydrohom/rng.hpp"

namespace hydrohom {

struct AnalyticScalar {
    std::function<double(double, double)> value;
    std::function<std::array<double, 2>(double, double)> grad;
};

inline AnalyticScalar analytic_constant(double v) {
    return {[v](double, double) { return v; },
            [](double, double) { return std::array<double, 2>{0.0, 0.0}; }};
}

// amplitude * sin(2*pi*(k . x) + phase)
inline AnalyticScalar analytic_sin(double k1, double k2, double phase = 0.0,
                                   double amplitude = 1.0) {
    return {[=](double x1, double x2) {
                return amplitude * std::sin(2.0 * M_PI * (k1 * x1 + k2 * x2) + phase);
            },
            [=](double x1, double x2) {
                const double c =
                    amplitude * 2.0 * M_PI * std::cos(2.0 * M_PI * (k1 * x1 + k2 * x2) + phase);
                return std::array<double, 2>{c * k1, c * k2};
            }};
}

inline AnalyticScalar analytic_sum(std::vector<AnalyticScalar> terms) {
    auto p = std::make_shared<std::vector<AnalyticScalar>>(std::move(terms));
    return {[p](double x1, double x2) {
                double s = 0.0;
                for (const auto& t : *p) s += t.value(x1, x2);
                return s;
            },
            [p](double x1, double x2) {
                std::array<double, 2> g{0.0, 0.0};
                for (const auto& t : *p) {
                    auto tg = t.grad(x1, x2);
                    g[0] += tg[0];
                    g[1] += tg[1];
                }
                return g;
            }};
}

inline AnalyticScalar analytic_scale(const AnalyticScalar& f, double s) {
    return {[f, s](double x1, double x2) { return s * f.value(x1, x2); },
            [f, s](double x1, double x2) {
                auto g = f.grad(x1, x2);
                return std::array<double, 2>{s * g[0], s * g[1]};
            }};
}

inline AnalyticScalar analytic_shift(const AnalyticScalar& f, double c) {
    return {[f, c](double x1, double x2) { return c + f.value(x1, x2); }, f.grad};
}

// f(x/eps) with the chain-rule gradient (1/eps) grad f(x/eps).
inline AnalyticScalar analytic_rescale(const AnalyticScalar& f, double eps) {
    return {[f, eps](double x1, double x2) { return f.value(x1 / eps, x2 / eps); },
            [f, eps](double x1, double x2) {
                auto g = f.grad(x1 / eps, x2 / eps);
                return std::array<double, 2>{g[0] / eps, g[1] / eps};
            }};
}

////////////////////////////////////////////////////////////////////////////////
// Stationary random media
////////////////////////////////////////////////////////////////////////////////

// One i.i.d. uniform value per integer lattice cell, spread by a compactly
// supported C^2 bump of radius `radius` centered at the cell midpoint. The
// per-cell values come from a counter generator keyed on (seed, cell index),
// so the field is a pure function of position: restriction to a subdomain,
// evaluation on any grid, and integer-shift stationarity are exact. With
// `wrap_cells > 0` the lattice is folded periodically (period wrap_cells per
// axis) so the field lives on a torus.
struct RandomStationaryField {
    std::uint64_t seed = 1;
    double radius = 1.0;    // in (0, 1]
    double amplitude = 1.0;
    int dim = 2;
    int wrap_cells = 0;

    static double bump(double t) {
        const double s = 1.0 - t * t;
        return (s > 0.0) ? s * s * s : 0.0;
    }
    static double bump_deriv(double t) {
        const double s = 1.0 - t * t;
        return (s > 0.0) ? -6.0 * t * s * s : 0.0;
    }

    double cell_value(long z1, long z2) const {
        if (wrap_cells > 0) {
            auto fold = [this](long z) {
                long r = z % wrap_cells;
                return r < 0 ? r + wrap_cells : r;
            };
            z1 = fold(z1);
            z2 = (dim == 2) ? fold(z2) : 0;
        }
        const std::uint64_t key =
            hash_combine(static_cast<std::uint64_t>(z1) * 0x9e3779b97f4a7c15ULL + 0x1234,
                         static_cast<std::uint64_t>(z2));
        return uniform_sym(seed, key);
    }

    // value plus gradient in one pass over the contributing cells
    void eval(double x1, double x2, double& val, double& g1, double& g2) const {
        val = g1 = g2 = 0.0;
        const long c1lo = static_cast<long>(std::floor(x1 - 0.5 - radius));
        const long c1hi = static_cast<long>(std::floor(x1 - 0.5 + radius)) + 1;
        const long c2lo = dim == 2 ? static_cast<long>(std::floor(x2 - 0.5 - radius)) : 0;
        const long c2hi = dim == 2 ? static_cast<long>(std::floor(x2 - 0.5 + radius)) + 1 : 0;
        for (long z1 = c1lo; z1 <= c1hi; ++z1) {
            const double t1 = (x1 - (z1 + 0.5)) / radius;
            const double b1 = bump(t1), d1 = bump_deriv(t1) / radius;
            for (long z2 = c2lo; z2 <= c2hi; ++z2) {
                double b2 = 1.0, d2 = 0.0;
                if (dim == 2) {
                    const double t2 = (x2 - (z2 + 0.5)) / radius;
                    b2 = bump(t2);
                    d2 = bump_deriv(t2) / radius;
                }
                const double xi = cell_value(z1, z2);
                val += xi * b1 * b2;
                g1 += xi * d1 * b2;
                if (dim == 2) g2 += xi * b1 * d2;
            }
        }
        val *= amplitude;
        g1 *= amplitude;
        g2 *= amplitude;
    }

    double value(double x1, double x2) const {
        double v, g1, g2;
        eval(x1, x2, v, g1, g2);
        return v;
    }

    std::array<double, 2> gradient(double x1, double x2) const {
        double v, g1, g2;
        eval(x1, x2, v, g1, g2);
        return {g1, g2};
    }

    AnalyticScalar as_analytic() const {
        RandomStationaryField self = *this;
        return {[self](double x1, double x2) { return self.value(x1, x2); },
                [self](double x1, double x2) { return self.gradient(x1, x2); }};
    }
};

// Low-order random Fourier series: smooth, zero-mean, grid independent.
// Used for reproducible random trial fields in property tests and stability
// sampling.
inline AnalyticScalar random_fourier(std::uint64_t seed, int mode_cap, double amplitude,
                                     int dim = 2) {
    struct Term {
        double k1, k2, amp, phase;
    };
    auto terms = std::make_shared<std::vector<Term>>();
    std::uint64_t ctr = 0;
    for (int k1 = -mode_cap; k1 <= mode_cap; ++k1) {
        for (int k2 = (dim == 2 ? -mode_cap : 0); k2 <= (dim == 2 ? mode_cap : 0); ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            if (k1 * k1 + k2 * k2 > mode_cap * mode_cap) continue;
            const double a = uniform_sym(seed, ctr++);
            const double ph = 2.0 * M_PI * uniform01(seed, ctr++);
            terms->push_back({double(k1), double(k2), a * amplitude / (1.0 + k1 * k1 + k2 * k2),
                              ph});
        }
    }
    return {[terms](double x1, double x2) {
                double s = 0.0;
                for (const auto& t : *terms)
                    s += t.amp * std::cos(2.0 * M_PI * (t.k1 * x1 + t.k2 * x2) + t.phase);
                return s;
            },
            [terms](double x1, double x2) {
                std::array<double, 2> g{0.0, 0.0};
                for (const auto& t : *terms) {
                    const double d = -t.amp * 2.0 * M_PI *
                                     std::sin(2.0 * M_PI * (t.k1 * x1 + t.k2 * x2) + t.phase);
                    g[0] += d * t.k1;
                    g[1] += d * t.k2;
                }
                return g;
            }};
}

// Sample a profile (and optionally its gradient) on grid nodes.
inline FieldArray sample(const Grid& g, const AnalyticScalar& f) {
    FieldArray out(g, 1);
    auto p = out.plane(0);
    if (g.dim == 1) {
        for (int i = 0; i < g.n[0]; ++i) p[g.index(i)] = f.value(g.coord(0, i), 0.0);
    } else {
        for (int i0 = 0; i0 < g.n[0]; ++i0)
            for (int i1 = 0; i1 < g.n[1]; ++i1)
                p[g.index(i0, i1)] = f.value(g.coord(0, i0), g.coord(1, i1));
    }
    return out;
}

inline FieldArray sample_gradient(const Grid& g, const AnalyticScalar& f) {
    FieldArray out(g, g.dim);
    if (g.dim == 1) {
        for (int i = 0; i < g.n[0]; ++i) out.at(0, g.index(i)) = f.grad(g.coord(0, i), 0.0)[0];
    } else {
        for (int i0 = 0; i0 < g.n[0]; ++i0)
            for (int i1 = 0; i1 < g.n[1]; ++i1) {
                auto gr = f.grad(g.coord(0, i0), g.coord(1, i1));
                out.at(0, g.index(i0, i1)) = gr[0];
                out.at(1, g.index(i0, i1)) = gr[1];
            }
    }
    return out;
}

} // namespace hydrohom

#endif
