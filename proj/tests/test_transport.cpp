#include <catch2/catch_amalgamated.hpp>

#include "hydrohom/transport.hpp"

using namespace hydrohom;

namespace {

EffectiveTensor tensor_1d(const Eigen::Matrix2d& m) {
    EffectiveTensor T;
    T.dim = 1;
    T.m = 2;
    T.mat = m;
    T.finalize();
    return T;
}

AnalyticScalar gamma_sincos() {
    return analytic_sum({analytic_sin(1, 0), analytic_sin(0, 1, M_PI / 2)});
}

} // namespace

TEST_CASE("identity tensor inverts to unit conductivities") {
    EffectiveTensor T = tensor_1d(Eigen::Matrix2d::Identity());
    TransportSummary s = transport_summary(T);
    CHECK(s.sigma(0, 0) == Catch::Approx(1.0));
    CHECK(s.kappa_tilde(0, 0) == Catch::Approx(1.0));
    CHECK(s.alpha(0, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(s.alpha_tilde(0, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(s.lorenz == Catch::Approx(1.0));
}

TEST_CASE("diagonal tensor: blocks of the inverse and measured kappa") {
    Eigen::Matrix2d m;
    m << 2.0, 0.0, 0.0, 4.0;
    EffectiveTensor T = tensor_1d(m);
    TransportSummary s = transport_summary(T);
    CHECK(s.sigma(0, 0) == Catch::Approx(0.5));
    CHECK(s.kappa_tilde(0, 0) == Catch::Approx(0.25));
    CHECK(s.alpha(0, 0) == Catch::Approx(0.0).margin(1e-15));
    // measured kappa = (a11 - a12^2/a22)/det = 2/8
    CHECK(s.kappa(0, 0) == Catch::Approx(0.25));
    // Lorenz = det/a22^2 = 8/16
    CHECK(s.lorenz == Catch::Approx(0.5));
}

TEST_CASE("measured kappa of [[2,1],[1,4]] is exactly 0.25") {
    Eigen::Matrix2d m;
    m << 2.0, 1.0, 1.0, 4.0;
    Eigen::MatrixXd k = measured_kappa(tensor_1d(m));
    CHECK(k(0, 0) == Catch::Approx((2.0 - 1.0 / 4.0) / 7.0).epsilon(1e-15));
    CHECK(k(0, 0) == Catch::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("measured kappa never exceeds kappa_tilde (Schur inequality)") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        RngStream rng(500 + s);
        // random SPD 2x2 via B^T B + delta I
        Eigen::Matrix2d B;
        B << rng.sym(), rng.sym(), rng.sym(), rng.sym();
        Eigen::Matrix2d m = B.transpose() * B + 0.1 * Eigen::Matrix2d::Identity();
        EffectiveTensor T = tensor_1d(m);
        TransportSummary su = transport_summary(T);
        CHECK(su.kappa(0, 0) <= su.kappa_tilde(0, 0) + 1e-14);
    }
}

TEST_CASE("Lorenz ratio is invariant under tensor rescaling") {
    Eigen::Matrix2d m;
    m << 2.0, 1.0, 1.0, 4.0;
    const double base = lorenz_ratio(tensor_1d(m));
    for (double s : {0.5, 2.0, 10.0})
        CHECK(lorenz_ratio(tensor_1d((s * m).eval())) == Catch::Approx(base).epsilon(1e-12));
}

TEST_CASE("WF deviation vanishes exactly when the relation holds") {
    TransportSummary s;
    s.sigma = Eigen::Matrix2d::Identity();
    s.kappa_tilde = (M_PI * M_PI / 3.0) * Eigen::Matrix2d::Identity();
    CHECK(wf_deviation(s, 1.0) == Catch::Approx(0.0).margin(1e-15));

    // T0 = 3/pi^2 with sigma = kappat = I
    s.kappa_tilde = Eigen::Matrix2d::Identity();
    CHECK(wf_deviation(s, 3.0 / (M_PI * M_PI)) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("the hydrodynamic 1D medium violates the WF relation") {
    Grid g(1, {256, 1}, Bc::periodic);
    DiracParams p;
    p.eta = 1.0;
    p.zeta = 0.0;
    CoefficientSet cs = dirac_preset(g, analytic_sin(1, 0), p);
    EffectiveTensor T = exact_1d_tensor(cs);
    TransportSummary s = transport_summary(T);
    CHECK(wf_deviation(s, 1.0) > 1e-3);
}

TEST_CASE("voigt bound equals the tensor in one dimension") {
    Grid g(1, {256, 1}, Bc::periodic);
    DiracParams p;
    p.eta = 1.0;
    MediumSpec spec = dirac_medium(analytic_sin(1, 0), p);
    FormContext ctx = make_form_context(spec, g);
    EffectiveTensor T = effective_tensor(ctx);
    for (int i = 0; i < 2; ++i) {
        Eigen::MatrixXd c = basis_tensor(1, 2, i);
        CHECK(voigt_bound(ctx, c) == Catch::Approx(T.mat(i, i)).epsilon(1e-10));
    }
}

TEST_CASE("voigt bound dominates the solver energy in two dimensions") {
    MediumSpec spec = dirac_medium(gamma_sincos());
    for (Bc bc : {Bc::periodic, Bc::dirichlet}) {
        Grid g(2, {bc == Bc::periodic ? 16 : 17, bc == Bc::periodic ? 16 : 17}, bc);
        FormContext ctx = make_form_context(spec, g);
        EffectiveTensor T = effective_tensor(ctx);
        for (int i = 0; i < 4; ++i) {
            Eigen::MatrixXd c = basis_tensor(2, 2, i);
            CHECK(voigt_bound(ctx, c) >= T.mat(i, i) - 1e-9);
        }
    }
}

TEST_CASE("exact 1D tensor: constant coefficients give the singular w^T w") {
    Grid g(1, {64, 1}, Bc::periodic);
    DiracParams p;
    p.n = ScalarMap::affine(0.0, 0.0);
    CoefficientSet cs = dirac_preset(g, analytic_constant(0.0), p);
    CHECK_THROWS_AS(exact_1d_tensor(cs), DegenerateForm);
    EffectiveTensor T = exact_1d_tensor(cs, /*allow_seminorm=*/true);
    // u' = 0: A = <w^T w> with w = (-1, 0)
    CHECK(T.mat(0, 0) == Catch::Approx(1.0));
    CHECK(std::abs(T.mat(0, 1)) < 1e-15);
    CHECK(std::abs(T.mat(1, 1)) < 1e-15);
    CHECK_FALSE(T.positive_definite);
}

TEST_CASE("exact 1D tensor matches the variational path to 1e-10") {
    Grid g(1, {256, 1}, Bc::periodic);
    DiracParams p;
    p.eta = 1.0;
    p.zeta = 0.0; // nu = 1
    MediumSpec spec = dirac_medium(analytic_sin(1, 0), p);
    FormContext ctx = make_form_context(spec, g);
    EffectiveTensor Tv = effective_tensor(ctx);
    EffectiveTensor Tq = exact_1d_tensor(ctx.coeffs);
    CHECK((Tv.mat - Tq.mat).cwiseAbs().maxCoeff() <
          1e-10 * Tq.mat.cwiseAbs().maxCoeff());
}

TEST_CASE("exact 1D tensor for m = 1 is <nu (u')^2>") {
    Grid g(1, {512, 1}, Bc::periodic);
    auto n = analytic_shift(analytic_sin(1, 0), 2.0);
    CoefficientSet cs = scalar_preset(g, n, 0.4, 0.6); // nu = 1
    EffectiveTensor T = exact_1d_tensor(cs);
    // oracle: u = 1/n, u' = -n'/n^2, integrate numerically at high order
    double expect = 0.0;
    for (int i = 0; i < g.n[0]; ++i) {
        const double x = g.coord(0, i);
        const double nv = 2.0 + std::sin(2 * M_PI * x);
        const double np = 2 * M_PI * std::cos(2 * M_PI * x);
        expect += g.weight1d(0, i) * (np * np) / (nv * nv * nv * nv);
    }
    CHECK(T.mat(0, 0) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("eigen split: the lambda = 0 tensor has D exact zeros") {
    Grid g(2, {16, 16}, Bc::periodic);
    Eigen::MatrixXd a0(1, 2);
    a0 << -1.0, 0.0;
    Eigen::RowVectorXd b0(2);
    b0 << 0.0, 1.0;
    std::vector<AnalyticScalar> a1{analytic_constant(0.0), analytic_constant(0.0)};
    std::vector<AnalyticScalar> b1{gamma_sincos(), analytic_constant(0.0)};
    CoefficientSet cs = small_oscillation_family(g, a0, b0, a1, b1, 0.0, 0.1, 0.0);
    FormContext ctx = make_form_context(cs, FormOptions{.allow_seminorm = true});
    EffectiveTensor T = effective_tensor(ctx);
    Eigen::MatrixXd w0(1, 2);
    w0 << -1.0, 0.0; // dual of the constant stacking
    EigenSplit split = small_oscillation_eigen_split(T, w0);
    CHECK(split.small_eigs.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(split.large_eigs.minCoeff() > 0.1);
}

TEST_CASE("eigen split rejects mismatched dual shapes") {
    EffectiveTensor T = tensor_1d(Eigen::Matrix2d::Identity());
    CHECK_THROWS_AS(small_oscillation_eigen_split(T, Eigen::MatrixXd::Zero(2, 2)),
                    DimensionMismatch);
}

TEST_CASE("block reassembly of the inverse multiplies back to the identity") {
    RngStream rng(77);
    Eigen::MatrixXd B(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) B(i, j) = rng.sym();
    EffectiveTensor T;
    T.dim = 2;
    T.m = 2;
    T.mat = B.transpose() * B + 0.5 * Eigen::MatrixXd::Identity(4, 4);
    T.finalize();
    TransportSummary s = invert_to_conductivities(T);
    Eigen::MatrixXd inv(4, 4);
    inv.block(0, 0, 2, 2) = s.sigma;
    inv.block(0, 2, 2, 2) = s.alpha;
    inv.block(2, 0, 2, 2) = s.alpha_tilde;
    inv.block(2, 2, 2, 2) = s.kappa_tilde;
    CHECK((inv * T.mat - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("singular tensors are rejected") {
    EffectiveTensor T;
    T.dim = 1;
    T.m = 2;
    T.mat = Eigen::Matrix2d::Zero();
    T.finalize();
    CHECK_THROWS_AS(invert_to_conductivities(T), SingularTensor);
}
