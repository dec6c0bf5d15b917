////////////////////////////////////////////////////////////////////////////////
// coefficients.hpp
////////////////////////////////////////////////////////////////////////////////
// Pointwise PDE coefficients: the (m-1) x m matrix a, the covector b, the
// viscosity pair (eta, zeta), and the dual (reciprocal) rows (u, w) defined by
//
//   w a^T = I_{m-1},  w b^T = 0,  u a^T = 0,  u b^T = 1,
//
// i.e. [w; u] = (M^T)^{-1} for the stacked matrix M = [a; b]. Gradients of b
// and u are stored alongside the values; when the profiles are analytic the
// gradients are exact via
//
//   d(M^{-T}) = -M^{-T} dM^T M^{-T},
//
// and otherwise they fall back to grid differentiation (spectral on periodic
// grids, centered/one-sided differences on the others).
//
// The oscillation measure is
//
//   O = min over unit directions theta of max_j integral (theta . grad b_j)^2,
//
// evaluated through the per-component D x D moment matrices
// Q_j = integral grad b_j grad b_j^T, which makes the theta sweep exact and
// cheap.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_COEFFICIENTS_HPP
#define HYDROHOM_COEFFICIENTS_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "hydrohom/media.hpp"
#include "hydrohom/ops.hpp"

namespace hydrohom {

struct CoefficientSet {
    Grid grid;
    int m = 0;
    FieldArray a;       // (m-1)*m planes, plane(r*m + j)
    FieldArray b;       // m planes
    FieldArray u;       // m planes
    FieldArray w;       // (m-1)*m planes
    FieldArray grad_b;  // D*m planes, plane(p*m + j)
    FieldArray grad_u;  // D*m planes
    FieldArray eta;     // D*D planes, plane(p*D + q), symmetric positive definite
    FieldArray zeta;    // 1 plane, nonnegative
    double eta_min = 0.0;
    double max_stack_condition = 0.0;
    bool analytic_grads = false;

    Eigen::MatrixXd a_at(std::size_t node) const {
        Eigen::MatrixXd A(m - 1, m);
        for (int r = 0; r < m - 1; ++r)
            for (int j = 0; j < m; ++j) A(r, j) = a.at(r * m + j, node);
        return A;
    }
    Eigen::RowVectorXd b_at(std::size_t node) const {
        Eigen::RowVectorXd B(m);
        for (int j = 0; j < m; ++j) B(j) = b.at(j, node);
        return B;
    }
    Eigen::RowVectorXd u_at(std::size_t node) const {
        Eigen::RowVectorXd U(m);
        for (int j = 0; j < m; ++j) U(j) = u.at(j, node);
        return U;
    }
    Eigen::MatrixXd w_at(std::size_t node) const {
        Eigen::MatrixXd W(m - 1, m);
        for (int r = 0; r < m - 1; ++r)
            for (int j = 0; j < m; ++j) W(r, j) = w.at(r * m + j, node);
        return W;
    }
};

namespace detail {

// Fill u, w (and their exact gradients when grad_a/grad_b are supplied) from
// the stacked inverse at each node.
inline void build_duals(CoefficientSet& cs, const FieldArray* grad_a, double condition_cap) {
    const int m = cs.m;
    const int D = cs.grid.dim;
    const std::size_t N = cs.grid.npoints();
    cs.u = FieldArray(cs.grid, m);
    cs.w = FieldArray(cs.grid, (m - 1) * m);
    cs.grad_u = FieldArray(cs.grid, D * m);
    cs.max_stack_condition = 0.0;

    Eigen::MatrixXd M(m, m), Nmat(m, m), dMt(m, m), dN(m, m);
    for (std::size_t x = 0; x < N; ++x) {
        for (int r = 0; r < m - 1; ++r)
            for (int j = 0; j < m; ++j) M(r, j) = cs.a.at(r * m + j, x);
        for (int j = 0; j < m; ++j) M(m - 1, j) = cs.b.at(j, x);

        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const double smin = svd.singularValues()(m - 1);
        const double smax = svd.singularValues()(0);
        const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
        if (!(cond < condition_cap))
            throw SingularBasis("stacked (a; b) matrix is singular or ill conditioned at a node",
                                x, cond);
        cs.max_stack_condition = std::max(cs.max_stack_condition, cond);

        Nmat = M.transpose().inverse(); // rows: w then u
        for (int r = 0; r < m - 1; ++r)
            for (int j = 0; j < m; ++j) cs.w.at(r * m + j, x) = Nmat(r, j);
        for (int j = 0; j < m; ++j) cs.u.at(j, x) = Nmat(m - 1, j);

        if (grad_a || cs.grad_b.comps > 0) {
            for (int p = 0; p < D; ++p) {
                dMt.setZero();
                if (grad_a)
                    for (int r = 0; r < m - 1; ++r)
                        for (int j = 0; j < m; ++j)
                            dMt(j, r) = grad_a->at(p * (m - 1) * m + r * m + j, x);
                for (int j = 0; j < m; ++j) dMt(j, m - 1) = cs.grad_b.at(p * m + j, x);
                dN = -Nmat * dMt * Nmat;
                for (int j = 0; j < m; ++j) cs.grad_u.at(p * m + j, x) = dN(m - 1, j);
            }
        }
    }
}

inline void fill_isotropic_eta(CoefficientSet& cs, const AnalyticScalar& eta) {
    const int D = cs.grid.dim;
    cs.eta = FieldArray(cs.grid, D * D);
    FieldArray es = sample(cs.grid, eta);
    cs.eta_min = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < cs.grid.npoints(); ++x) {
        const double v = es.at(0, x);
        cs.eta_min = std::min(cs.eta_min, v);
        for (int p = 0; p < D; ++p) cs.eta.at(p * D + p, x) = v;
    }
    if (!(cs.eta_min > 0.0)) throw Error("eta must be bounded below by a positive constant");
}

} // namespace detail

// Generic constructor from analytic entries: a_entries row-major (m-1)*m,
// b_entries length m. Stores exact gradients throughout.
inline CoefficientSet make_coefficients(const Grid& grid, int m,
                                        const std::vector<AnalyticScalar>& a_entries,
                                        const std::vector<AnalyticScalar>& b_entries,
                                        const AnalyticScalar& eta, const AnalyticScalar& zeta,
                                        double condition_cap = 1e8) {
    if (static_cast<int>(a_entries.size()) != (m - 1) * m ||
        static_cast<int>(b_entries.size()) != m)
        throw DimensionMismatch("coefficient entry count does not match m");
    const int D = grid.dim;
    CoefficientSet cs;
    cs.grid = grid;
    cs.m = m;
    cs.a = FieldArray(grid, (m - 1) * m);
    cs.b = FieldArray(grid, m);
    cs.grad_b = FieldArray(grid, D * m);
    FieldArray grad_a(grid, D * (m - 1) * m);

    for (int r = 0; r < m - 1; ++r)
        for (int j = 0; j < m; ++j) {
            FieldArray v = sample(grid, a_entries[r * m + j]);
            std::copy(v.plane(0).begin(), v.plane(0).end(), cs.a.plane(r * m + j).begin());
            FieldArray gv = sample_gradient(grid, a_entries[r * m + j]);
            for (int p = 0; p < D; ++p)
                std::copy(gv.plane(p).begin(), gv.plane(p).end(),
                          grad_a.plane(p * (m - 1) * m + r * m + j).begin());
        }
    for (int j = 0; j < m; ++j) {
        FieldArray v = sample(grid, b_entries[j]);
        std::copy(v.plane(0).begin(), v.plane(0).end(), cs.b.plane(j).begin());
        FieldArray gv = sample_gradient(grid, b_entries[j]);
        for (int p = 0; p < D; ++p)
            std::copy(gv.plane(p).begin(), gv.plane(p).end(), cs.grad_b.plane(p * m + j).begin());
    }

    detail::build_duals(cs, &grad_a, condition_cap);
    detail::fill_isotropic_eta(cs, eta);
    cs.zeta = sample(grid, zeta);
    for (double z : cs.zeta.data)
        if (z < 0.0) throw Error("zeta must be nonnegative");
    cs.analytic_grads = true;
    return cs;
}

// Numeric-field path: dual basis by pointwise inversion, gradients of b and u
// by grid differentiation. Used for imported fields without analytic data.
inline CoefficientSet make_coefficients_numeric(const Grid& grid, int m, const FieldArray& a,
                                                const FieldArray& b, const FieldArray& eta_scalar,
                                                const FieldArray& zeta,
                                                double condition_cap = 1e8) {
    const int D = grid.dim;
    CoefficientSet cs;
    cs.grid = grid;
    cs.m = m;
    cs.a = a;
    cs.b = b;
    cs.grad_b = FieldArray(grid, D * m);
    for (int j = 0; j < m; ++j) {
        FieldArray gb = gradient(grid, b.plane(j));
        for (int p = 0; p < D; ++p)
            std::copy(gb.plane(p).begin(), gb.plane(p).end(), cs.grad_b.plane(p * m + j).begin());
    }
    detail::build_duals(cs, nullptr, condition_cap);
    // grad_u by grid differentiation of the constructed dual rows
    for (int j = 0; j < m; ++j) {
        FieldArray gu = gradient(grid, cs.u.plane(j));
        for (int p = 0; p < D; ++p)
            std::copy(gu.plane(p).begin(), gu.plane(p).end(), cs.grad_u.plane(p * m + j).begin());
    }
    cs.eta = FieldArray(grid, D * D);
    cs.eta_min = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < grid.npoints(); ++x) {
        const double v = eta_scalar.at(0, x);
        cs.eta_min = std::min(cs.eta_min, v);
        for (int p = 0; p < D; ++p) cs.eta.at(p * D + p, x) = v;
    }
    if (!(cs.eta_min > 0.0)) throw Error("eta must be bounded below by a positive constant");
    cs.zeta = zeta;
    cs.analytic_grads = false;
    return cs;
}

// Pointwise dual basis for free-standing (a, b) fields. Returns (u, w).
inline std::pair<FieldArray, FieldArray> build_dual_basis(const Grid& grid, int m,
                                                          const FieldArray& a, const FieldArray& b,
                                                          double condition_cap = 1e8) {
    CoefficientSet cs;
    cs.grid = grid;
    cs.m = m;
    cs.a = a;
    cs.b = b;
    detail::build_duals(cs, nullptr, condition_cap);
    return {cs.u, cs.w};
}

// Max pointwise residual of the four reciprocity identities plus the
// completeness identity a^T w + b^T u = I_m.
inline double dual_basis_residual(const CoefficientSet& cs) {
    const int m = cs.m;
    double worst = 0.0;
    for (std::size_t x = 0; x < cs.grid.npoints(); ++x) {
        const Eigen::MatrixXd A = cs.a_at(x);
        const Eigen::RowVectorXd B = cs.b_at(x);
        const Eigen::MatrixXd W = cs.w_at(x);
        const Eigen::RowVectorXd U = cs.u_at(x);
        double r = 0.0;
        if (m > 1) {
            r = std::max(r, (W * A.transpose() - Eigen::MatrixXd::Identity(m - 1, m - 1))
                                .cwiseAbs()
                                .maxCoeff());
            r = std::max(r, (W * B.transpose()).cwiseAbs().maxCoeff());
            r = std::max(r, (U * A.transpose()).cwiseAbs().maxCoeff());
        }
        r = std::max(r, std::abs(U * B.transpose() - 1.0));
        Eigen::MatrixXd I = B.transpose() * U;
        if (m > 1) I += A.transpose() * W;
        r = std::max(r, (I - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
        worst = std::max(worst, r);
    }
    return worst;
}

////////////////////////////////////////////////////////////////////////////////
// Oscillation
////////////////////////////////////////////////////////////////////////////////

struct OscillationReport {
    double value = 0.0;                 // O
    std::array<double, 2> theta{1, 0};  // minimizing direction
    std::vector<double> per_component;  // integral (theta* . grad b_j)^2 per j
};

// grad_scale rescales the stored gradient (the x/eps-sampled coefficient sets
// of the rescaled form carry the true gradient, while the paper's O_eps uses
// eps * grad).
inline OscillationReport oscillation(const CoefficientSet& cs, int theta_samples = 256,
                                     double grad_scale = 1.0) {
    const int D = cs.grid.dim;
    const int m = cs.m;
    if (D == 2 && theta_samples < 64)
        throw Error("oscillation needs at least 64 direction samples in D = 2");
    const auto wq = quadrature_weights(cs.grid);

    // Q_j = integral grad b_j grad b_j^T (scaled)
    std::vector<Eigen::Matrix2d> Q(m, Eigen::Matrix2d::Zero());
    for (int j = 0; j < m; ++j) {
        for (std::size_t x = 0; x < cs.grid.npoints(); ++x) {
            Eigen::Vector2d g = Eigen::Vector2d::Zero();
            for (int p = 0; p < D; ++p) g(p) = grad_scale * cs.grad_b.at(p * m + j, x);
            Q[j] += wq[x] * g * g.transpose();
        }
    }

    OscillationReport rep;
    auto eval = [&](const Eigen::Vector2d& th) {
        double worst = 0.0;
        for (int j = 0; j < m; ++j) worst = std::max(worst, th.dot(Q[j] * th));
        return worst;
    };

    if (D == 1) {
        // theta grid is {+1, -1}; both give the same quadratic value
        Eigen::Vector2d th(1.0, 0.0);
        rep.value = eval(th);
        rep.theta = {1.0, 0.0};
    } else {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Vector2d best_th(1.0, 0.0);
        for (int i = 0; i < theta_samples; ++i) {
            const double ang = M_PI * i / theta_samples; // antipodal directions coincide
            Eigen::Vector2d th(std::cos(ang), std::sin(ang));
            const double v = eval(th);
            if (v < best) {
                best = v;
                best_th = th;
            }
        }
        rep.value = best;
        rep.theta = {best_th(0), best_th(1)};
    }
    Eigen::Vector2d th(rep.theta[0], rep.theta[1]);
    rep.per_component.resize(m);
    for (int j = 0; j < m; ++j) rep.per_component[j] = th.dot(Q[j] * th);
    return rep;
}

////////////////////////////////////////////////////////////////////////////////
// Physical presets
////////////////////////////////////////////////////////////////////////////////

// Scalar map gamma -> value with derivative (affine by default).
struct ScalarMap {
    std::function<double(double)> f;
    std::function<double(double)> df;
    static ScalarMap affine(double c0, double c1) {
        return {[=](double g) { return c0 + c1 * g; }, [=](double) { return c1; }};
    }
};

struct DiracParams {
    double sigma_q = 1.0;
    double eta = 0.1;
    double zeta = 0.0;
    ScalarMap n = ScalarMap::affine(0.0, 1.0); // n(gamma) = gamma
    ScalarMap s = ScalarMap::affine(1.0, 0.0); // s(gamma) = 1
    double c0 = 0.5;                           // floor for gamma*n + s
    double condition_cap = 1e8;
};

inline AnalyticScalar compose_map(const AnalyticScalar& gamma, const ScalarMap& map) {
    return {[gamma, map](double x1, double x2) { return map.f(gamma.value(x1, x2)); },
            [gamma, map](double x1, double x2) {
                const double d = map.df(gamma.value(x1, x2));
                auto g = gamma.grad(x1, x2);
                return std::array<double, 2>{d * g[0], d * g[1]};
            }};
}

// Dirac fluid: a = sigma_q^{1/2} (-1, gamma), b = (n(gamma), s(gamma)).
// Requires gamma*n + s >= c0 > 0 everywhere.
inline CoefficientSet dirac_preset(const Grid& grid, const AnalyticScalar& gamma,
                                   const DiracParams& p = {}) {
    FieldArray gs = sample(grid, gamma);
    double worst = std::numeric_limits<double>::infinity();
    for (double g : gs.plane(0)) worst = std::min(worst, g * p.n.f(g) + p.s.f(g));
    if (!(worst >= p.c0))
        throw DegenerateThermodynamics("gamma*n + s fell below the configured floor", worst);

    const double sq = std::sqrt(p.sigma_q);
    std::vector<AnalyticScalar> a_entries{analytic_constant(-sq), analytic_scale(gamma, sq)};
    std::vector<AnalyticScalar> b_entries{compose_map(gamma, p.n), compose_map(gamma, p.s)};
    return make_coefficients(grid, 2, a_entries, b_entries, analytic_constant(p.eta),
                             analytic_constant(p.zeta), p.condition_cap);
}

// Galilean-invariant fluid: a = kappa_q^{1/2} (0, 1), same b as above.
inline CoefficientSet galilean_preset(const Grid& grid, const AnalyticScalar& gamma,
                                      double kappa_q, const ScalarMap& n, const ScalarMap& s,
                                      double eta, double zeta, double condition_cap = 1e8) {
    const double kq = std::sqrt(kappa_q);
    std::vector<AnalyticScalar> a_entries{analytic_constant(0.0), analytic_constant(kq)};
    std::vector<AnalyticScalar> b_entries{compose_map(gamma, n), compose_map(gamma, s)};
    return make_coefficients(grid, 2, a_entries, b_entries, analytic_constant(eta),
                             analytic_constant(zeta), condition_cap);
}

// m = 1: a empty, b = (n), u = 1/n. Requires |n| >= n_floor > 0.
inline CoefficientSet scalar_preset(const Grid& grid, const AnalyticScalar& n, double eta,
                                    double zeta, double n_floor = 0.5) {
    FieldArray ns = sample(grid, n);
    double worst = std::numeric_limits<double>::infinity();
    for (double v : ns.plane(0)) worst = std::min(worst, std::abs(v));
    if (!(worst >= n_floor))
        throw DegenerateThermodynamics("|n| fell below the configured floor", worst);
    return make_coefficients(grid, 1, {}, {n}, analytic_constant(eta), analytic_constant(zeta));
}

// a = a0 + lambda*a1, b = b0 + lambda*b1 with constant (a0, b0).
inline CoefficientSet small_oscillation_family(const Grid& grid, const Eigen::MatrixXd& a0,
                                               const Eigen::RowVectorXd& b0,
                                               const std::vector<AnalyticScalar>& a1,
                                               const std::vector<AnalyticScalar>& b1,
                                               double lambda, double eta, double zeta,
                                               double condition_cap = 1e8) {
    const int m = static_cast<int>(b0.size());
    if (a0.rows() != m - 1 || a0.cols() != m) throw DimensionMismatch("a0 must be (m-1) x m");
    std::vector<AnalyticScalar> a_entries, b_entries;
    for (int r = 0; r < m - 1; ++r)
        for (int j = 0; j < m; ++j)
            a_entries.push_back(
                analytic_shift(analytic_scale(a1[r * m + j], lambda), a0(r, j)));
    for (int j = 0; j < m; ++j)
        b_entries.push_back(analytic_shift(analytic_scale(b1[j], lambda), b0(j)));
    return make_coefficients(grid, m, a_entries, b_entries, analytic_constant(eta),
                             analytic_constant(zeta), condition_cap);
}

} // namespace hydrohom

#endif
