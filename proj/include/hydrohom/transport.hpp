////////////////////////////////////////////////////////////////////////////////
// transport.hpp
////////////////////////////////////////////////////////////////////////////////
// Physical post-processing of effective tensors for the two-current case
// (charge, heat): conductivity blocks from the tensor inverse,
//
//   ( sigma  alpha  )        -1
//   ( alphat kappat )  =  A     (blocks D x D, current-major flattening),
//
// the measured thermal conductivity kappa = kappat - alphat sigma^{-1} alpha
// (heat response at zero charge current), the 1D Lorenz ratio
// det(A)/A_22^2, and the deviation from the Wiedemann-Franz relation
// kappat = (pi^2 T0 / 3) sigma. Also: the admissible-trial upper bound on
// (c, A c), the exact 1D quadrature tensor, and the Rayleigh-quotient split
// of nearly constant media.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_TRANSPORT_HPP
#define HYDROHOM_TRANSPORT_HPP

#include "hydrohom/solver.hpp"

namespace hydrohom {

struct TransportSummary {
    Eigen::MatrixXd sigma, alpha, alpha_tilde, kappa_tilde; // D x D blocks of A^{-1}
    Eigen::MatrixXd kappa;                                   // measured conductivity
    double lorenz = std::numeric_limits<double>::quiet_NaN(); // D = 1 only
};

// Blocks of the tensor inverse, partitioned by current index.
inline TransportSummary invert_to_conductivities(const EffectiveTensor& A) {
    if (A.m != 2) throw DimensionMismatch("conductivity blocks need m = 2 currents");
    if (!A.positive_definite)
        throw SingularTensor("effective tensor is not positive definite");
    const int D = A.dim;
    Eigen::MatrixXd inv = A.mat.inverse();
    TransportSummary s;
    s.sigma = inv.block(0, 0, D, D);
    s.alpha = inv.block(0, D, D, D);
    s.alpha_tilde = inv.block(D, 0, D, D);
    s.kappa_tilde = inv.block(D, D, D, D);
    return s;
}

// kappa = kappat - alphat sigma^{-1} alpha (Schur complement of the inverse).
inline Eigen::MatrixXd measured_kappa(const EffectiveTensor& A) {
    TransportSummary s = invert_to_conductivities(A);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s.sigma);
    if (!lu.isInvertible()) throw SingularTensor("sigma block is singular");
    return s.kappa_tilde - s.alpha_tilde * lu.inverse() * s.alpha;
}

// D = 1 Lorenz ratio kappa/sigma = det(A)/A_22^2.
inline double lorenz_ratio(const EffectiveTensor& A) {
    if (A.m != 2 || A.dim != 1)
        throw DimensionMismatch("the scalar Lorenz ratio is defined for D = 1, m = 2");
    const double a22 = A.mat(1, 1);
    if (a22 == 0.0) throw SingularTensor("heat-heat entry vanishes");
    return A.mat.determinant() / (a22 * a22);
}

inline TransportSummary transport_summary(const EffectiveTensor& A) {
    TransportSummary s = invert_to_conductivities(A);
    s.kappa = measured_kappa(A);
    if (A.dim == 1) s.lorenz = lorenz_ratio(A);
    return s;
}

// || kappat - (pi^2 T0/3) sigma ||_F / ||kappat||_F; zero iff the
// Wiedemann-Franz relation holds exactly.
inline double wf_deviation(const TransportSummary& s, double T0 = 1.0) {
    const double coeff = M_PI * M_PI * T0 / 3.0;
    const double denom = s.kappa_tilde.norm();
    if (denom == 0.0) throw SingularTensor("kappa_tilde vanishes");
    return (s.kappa_tilde - coeff * s.sigma).norm() / denom;
}

// Upper bound on (c, A c) from the admissible trial J = c: the energy of the
// constant current per volume. The derivative in the velocity term acts on
// the dual row u only.
inline double voigt_bound(const FormContext& ctx, const Eigen::MatrixXd& c) {
    return form_energy(ctx, c, nullptr) / ctx.grid().volume();
}

// Exact 1D tensor by quadrature: A = <nu u'^T u' + w^T w> / |X| with
// nu = eta + zeta (both reduce to d/dx in one dimension).
inline EffectiveTensor exact_1d_tensor(const CoefficientSet& cs, bool allow_seminorm = false) {
    const Grid& g = cs.grid;
    if (g.dim != 1) throw DimensionMismatch("exact quadrature tensor is one dimensional");
    const int m = cs.m;
    OscillationReport osc = oscillation(cs);
    if (!(osc.value > 1e-12) && !allow_seminorm)
        throw DegenerateForm("constant coefficients: the 1D tensor is singular (rank m-1)");

    const auto wq = quadrature_weights(g);
    EffectiveTensor T;
    T.kind = TensorKind::a_sharp;
    T.bc = g.bc;
    T.grid_desc = g.describe();
    T.dim = 1;
    T.m = m;
    T.mat = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t x = 0; x < g.npoints(); ++x) {
        const double nu = cs.eta.at(0, x) + cs.zeta.at(0, x);
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                double v = nu * cs.grad_u.at(j, x) * cs.grad_u.at(k, x);
                for (int r = 0; r < m - 1; ++r) v += cs.w.at(r * m + j, x) * cs.w.at(r * m + k, x);
                T.mat(j, k) += wq[x] * v;
            }
    }
    T.mat /= g.volume();
    T.finalize();
    return T;
}

////////////////////////////////////////////////////////////////////////////////
// Small-oscillation eigenvalue split
////////////////////////////////////////////////////////////////////////////////

struct EigenSplit {
    Eigen::VectorXd small_eigs; // Rayleigh quotients on {c : c w0^T = 0}, dim D
    Eigen::VectorXd large_eigs; // on the orthogonal complement, dim D(m-1)
};

// Restrict the quadratic form to the ballistic directions {c : c w0^T = 0}
// and to their orthogonal complement, and return the eigenvalues of each
// restriction.
inline EigenSplit small_oscillation_eigen_split(const EffectiveTensor& A,
                                                const Eigen::MatrixXd& w0) {
    const int D = A.dim, m = A.m;
    if (w0.rows() != m - 1 || w0.cols() != m) throw DimensionMismatch("w0 must be (m-1) x m");
    const int n = D * m;
    // constraint rows: sum_k w0(r, k) c(l, k) = 0 for each (r, l)
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(D * (m - 1), n);
    for (int r = 0; r < m - 1; ++r)
        for (int l = 0; l < D; ++l)
            for (int k = 0; k < m; ++k) K(r * D + l, k * D + l) = w0(r, k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullV);
    // kernel basis: last D right-singular vectors; complement: the first ones
    Eigen::MatrixXd V = svd.matrixV();
    Eigen::MatrixXd B0 = V.rightCols(D);
    Eigen::MatrixXd B1 = V.leftCols(n - D);

    EigenSplit out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es0(B0.transpose() * A.mat * B0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(B1.transpose() * A.mat * B1);
    out.small_eigs = es0.eigenvalues();
    out.large_eigs = es1.eigenvalues();
    return out;
}

} // namespace hydrohom

#endif
