#include <catch2/catch_amalgamated.hpp>

#include "hydrohom/solver.hpp"

using namespace hydrohom;

namespace {

AnalyticScalar gamma_sincos() {
    return analytic_sum({analytic_sin(1, 0), analytic_sin(0, 1, M_PI / 2)});
}

PotentialField random_potential(const Grid& g, int m, std::uint64_t seed) {
    PotentialField f(g, m);
    for (int k = 0; k < m; ++k) {
        FieldArray v = sample(g, random_fourier(hash_combine(seed, k), 3, 1.0, g.dim));
        std::copy(v.plane(0).begin(), v.plane(0).end(), f.f.plane(k).begin());
    }
    apply_mask(g, f.f);
    return f;
}

} // namespace

TEST_CASE("D = 1 cell problems have no degrees of freedom") {
    Grid g(1, {256, 1}, Bc::periodic);
    FormContext ctx = make_form_context(dirac_medium(analytic_sin(1, 0)), g);
    Eigen::MatrixXd c(1, 2);
    c << 1.0, 0.0;
    CellSolution sol = solve_cell_problem(ctx, c);
    CHECK(sol.report.iterations == 0);
    CHECK(sol.f.f.comps == 0);
    for (int k = 0; k < 2; ++k)
        for (double v : sol.J.values.plane(k)) CHECK(v == c(0, k));
}

TEST_CASE("cell solves satisfy Galerkin orthogonality") {
    for (Bc bc : {Bc::periodic, Bc::dirichlet}) {
        Grid g(2, {bc == Bc::periodic ? 16 : 17, bc == Bc::periodic ? 16 : 17}, bc);
        FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
        Eigen::MatrixXd c(2, 2);
        c << 1.0, 0.0, 0.0, 1.0;
        CellSolution sol = solve_cell_problem(ctx, c);
        const Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(2, 2);
        for (std::uint64_t s = 0; s < 6; ++s) {
            PotentialField tst = random_potential(g, 2, 400 + s);
            CurrentField Jt = potential_to_current(tst, c0);
            const double ortho = apply_form(ctx, sol.J, Jt);
            const double scale = std::sqrt(apply_form(ctx, sol.J, sol.J)) *
                                 std::sqrt(apply_form(ctx, Jt, Jt));
            CHECK(std::abs(ortho) <= 1e-8 * std::max(scale, 1e-30));
        }
    }
}

TEST_CASE("the converged solution is a minimizer under random perturbations") {
    Grid g(2, {16, 16}, Bc::periodic);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    Eigen::MatrixXd c(2, 2);
    c << 0.0, 1.0, 1.0, 0.5;
    CellSolution sol = solve_cell_problem(ctx, c);
    const double emin = sol.report.energy;
    for (std::uint64_t s = 0; s < 50; ++s) {
        PotentialField d = random_potential(g, 2, 900 + s);
        FieldArray fd = sol.f.f;
        fd += d.f;
        const double e = form_energy(ctx, c, &fd);
        const double dn = norm(d.f);
        CHECK(e >= emin - 1e-9 * dn * dn);
    }
}

TEST_CASE("the solution is linear in the mean current") {
    Grid g(2, {16, 16}, Bc::periodic);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    Eigen::MatrixXd c1(2, 2), c2(2, 2);
    c1 << 1.0, 0.0, 0.0, 0.0;
    c2 << 0.0, 0.0, 1.0, 0.5;
    const double al = 2.0, be = -0.75;
    CellSolution s1 = solve_cell_problem(ctx, c1);
    CellSolution s2 = solve_cell_problem(ctx, c2);
    CellSolution sc = solve_cell_problem(ctx, al * c1 + be * c2);
    FieldArray combo = s1.f.f;
    combo *= al;
    combo.axpy(be, s2.f.f);
    // compare the currents (stream functions carry a null-space ambiguity)
    CurrentField Jc = potential_to_current(sc.f, al * c1 + be * c2);
    PotentialField pf(g, 2);
    pf.f = combo;
    CurrentField Jl = potential_to_current(pf, al * c1 + be * c2);
    Jl.values -= Jc.values;
    CHECK(max_abs(Jl.values) < 1e-7);
}

TEST_CASE("energy identity: |X| (c, A c) equals the converged energy") {
    Grid g(2, {16, 16}, Bc::periodic);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    EffectiveTensor T = effective_tensor(ctx);
    for (int i = 0; i < 4; ++i) {
        Eigen::MatrixXd c = basis_tensor(2, 2, i);
        CellSolution sol = solve_cell_problem(ctx, c);
        const double quad = T.mat(i, i) * g.volume();
        CHECK(sol.report.energy == Catch::Approx(quad).epsilon(1e-9));
    }
}

TEST_CASE("effective tensors are symmetric positive definite") {
    Grid g(2, {16, 16}, Bc::periodic);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    EffectiveTensor T = effective_tensor(ctx);
    CHECK((T.mat - T.mat.transpose()).cwiseAbs().maxCoeff() <=
          1e-10 * T.mat.cwiseAbs().maxCoeff());
    CHECK(T.positive_definite);
    CHECK(T.min_eigenvalue > 0.0);
}

TEST_CASE("dense oracle: assembled operator is symmetric PSD and matches CG") {
    MediumSpec spec = dirac_medium(gamma_sincos());

    SECTION("periodic 6x6") {
        Grid g(2, {6, 6}, Bc::periodic);
        FormContext ctx = make_form_context(spec, g);
        DenseOperator op = assemble_dense_operator(ctx);
        CHECK((op.G - op.G.transpose()).cwiseAbs().maxCoeff() <
              1e-12 * std::max(1.0, op.G.cwiseAbs().maxCoeff()));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (op.G + op.G.transpose()));
        CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());

        // Gram entries are form values: spot check against apply_form
        FieldArray e(g, 2);
        e.at(0, op.dofs[3]) = 1.0;
        PotentialField pe(g, 2);
        pe.f = e;
        CurrentField Je = potential_to_current(pe, Eigen::MatrixXd::Zero(2, 2));
        CHECK(op.G(3, 3) == Catch::Approx(apply_form(ctx, Je, Je)).epsilon(1e-11));

        // null space: mean + Nyquist content per stream function
        int nzero = 0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()(i) < 1e-10 * es.eigenvalues().maxCoeff()) ++nzero;
        CHECK(nzero == 8); // 4 curl-null modes per plane, m = 2
        // definiteness beyond the curl null space (oscillatory medium)
        CHECK(es.eigenvalues()(nzero) > 0.0);

        EffectiveTensor Tcg = effective_tensor(ctx);
        EffectiveTensor Tdense = dense_oracle_tensor(ctx);
        CHECK((Tcg.mat - Tdense.mat).cwiseAbs().maxCoeff() < 1e-9);

        for (int i = 0; i < 4; ++i) {
            Eigen::MatrixXd c = basis_tensor(2, 2, i);
            CellSolution scg = solve_cell_problem(ctx, c);
            CellSolution sde = dense_oracle_solve(ctx, op, c);
            FieldArray diff = scg.J.values;
            diff -= sde.J.values;
            CHECK(max_abs(diff) < 1e-8);
        }
    }

    SECTION("dirichlet 12x12") {
        Grid g(2, {12, 12}, Bc::dirichlet);
        FormContext ctx = make_form_context(spec, g);
        EffectiveTensor Tcg = effective_tensor(ctx);
        EffectiveTensor Tdense = dense_oracle_tensor(ctx);
        CHECK((Tcg.mat - Tdense.mat).cwiseAbs().maxCoeff() < 1e-9);
        DenseOperator op = assemble_dense_operator(ctx);
        for (int i = 0; i < 4; ++i) {
            Eigen::MatrixXd c = basis_tensor(2, 2, i);
            CellSolution scg = solve_cell_problem(ctx, c);
            CellSolution sde = dense_oracle_solve(ctx, op, c);
            FieldArray diff = scg.J.values;
            diff -= sde.J.values;
            CHECK(max_abs(diff) < 1e-8);
        }
    }
}

TEST_CASE("dense oracle refuses oversized problems") {
    Grid g(2, {64, 64}, Bc::periodic);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    CHECK_THROWS_AS(dense_oracle_tensor(ctx), TooLarge);
}

TEST_CASE("degenerate media are refused unless overridden, then flagged") {
    Grid g(2, {16, 16}, Bc::periodic);
    DiracParams p;
    p.n = ScalarMap::affine(0.0, 0.0); // constant coefficients
    MediumSpec spec = dirac_medium(analytic_constant(0.0), p);

    FormContext strict = make_form_context(spec, g);
    CHECK_THROWS_AS(effective_tensor(strict), DegenerateForm);

    FormContext loose = make_form_context(spec, g, FormOptions{.allow_seminorm = true});
    EffectiveTensor T = effective_tensor(loose);
    // ballistic directions c w0^T = 0 give zero energy: tensor singular
    CHECK_FALSE(T.positive_definite);
    CHECK(T.min_eigenvalue < 1e-12);
}

TEST_CASE("boundary ordering: dirichlet dominates periodic") {
    MediumSpec spec = dirac_medium(gamma_sincos());
    Grid gp(2, {16, 16}, Bc::periodic);
    Grid gd(2, {17, 17}, Bc::dirichlet);
    EffectiveTensor Ts = effective_tensor(make_form_context(spec, gp));
    EffectiveTensor Td = effective_tensor(make_form_context(spec, gd));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Td.mat - Ts.mat);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
}

TEST_CASE("natural problem: zero profile gives zero current and energy") {
    Grid g(2, {17, 17}, Bc::natural);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    CellSolution sol = solve_natural_problem(ctx, Eigen::MatrixXd::Zero(2, 2));
    CHECK(sol.report.iterations == 0);
    CHECK(max_abs(sol.J.values) == 0.0);
    CHECK(sol.report.energy == 0.0);
}

TEST_CASE("natural problem: maximization identity at the solution") {
    Grid g(2, {17, 17}, Bc::natural);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    Eigen::MatrixXd p(2, 2);
    p << 1.0, 0.25, -0.5, 1.0;
    CellSolution sol = solve_natural_problem(ctx, p);
    // a(J, J) = <p, J> at the solution, so -a/2 + <p, J> = a/2
    double pj = 0.0;
    const auto wq = quadrature_weights(g);
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
            auto pl = sol.J.values.plane(k * 2 + l);
            for (std::size_t x = 0; x < pl.size(); ++x) pj += wq[x] * p(l, k) * pl[x];
        }
    const double a = sol.report.energy;
    CHECK(-0.5 * a + pj == Catch::Approx(0.5 * a).epsilon(1e-9));
}

TEST_CASE("profile problem on the torus inverts the periodic tensor") {
    Grid g(2, {16, 16}, Bc::periodic);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    EffectiveTensor A = effective_tensor(ctx);
    EffectiveTensor Bs = effective_tensor_natural_periodic(ctx);
    Eigen::MatrixXd prod = Bs.mat * A.mat;
    CHECK((prod - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);

    // consistency at one profile: (p, B p) = (p, c) at the solution
    Eigen::MatrixXd p(2, 2);
    p << 1.0, 0.0, 0.5, -1.0;
    ExtendedSolution sol = solve_profile_problem(ctx, p);
    const double pBp = (Eigen::Map<const Eigen::VectorXd>(p.data(), 4).transpose() *
                        Bs.mat * Eigen::Map<const Eigen::VectorXd>(p.data(), 4))(0);
    const double pc = (p.array() * sol.c.array()).sum();
    CHECK(pBp == Catch::Approx(pc).epsilon(1e-7));
    CHECK(sol.report.energy == Catch::Approx(pc * g.volume()).epsilon(1e-7));
}

TEST_CASE("full ordering chain on one medium") {
    MediumSpec spec = dirac_medium(gamma_sincos());
    Grid gp(2, {16, 16}, Bc::periodic);
    Grid gd(2, {17, 17}, Bc::dirichlet);
    Grid gn(2, {17, 17}, Bc::natural);
    EffectiveTensor As = effective_tensor(make_form_context(spec, gp));
    EffectiveTensor Ad = effective_tensor(make_form_context(spec, gd));
    EffectiveTensor Bn = effective_tensor_natural(make_form_context(spec, gn));
    EffectiveTensor Bs = effective_tensor_natural_periodic(make_form_context(spec, gp));

    const Eigen::MatrixXd Bs_inv = Bs.mat.inverse();
    const Eigen::MatrixXd Bn_inv = Bn.mat.inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mid(As.mat - Bs_inv);
    CHECK(mid.eigenvalues().cwiseAbs().maxCoeff() < 1e-7 * As.mat.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> outer(Bs_inv - Bn_inv);
    CHECK(outer.eigenvalues().minCoeff() > -1e-7);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> top(Ad.mat - As.mat);
    CHECK(top.eigenvalues().minCoeff() > -1e-7);
}

TEST_CASE("reconstruction of the zero current vanishes") {
    Grid g(2, {16, 16}, Bc::periodic);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    CurrentField zero(g, 2);
    Reconstruction rec = reconstruct_fields(ctx, zero);
    CHECK(max_abs(rec.v) == 0.0);
    CHECK(max_abs(rec.grad_psi) == 0.0);
    CHECK(rec.curl_residual == 0.0);
}

TEST_CASE("homogenized relation: the mean of -grad psi is A c") {
    Grid g(2, {32, 32}, Bc::periodic);
    FormContext ctx = make_form_context(dirac_medium(gamma_sincos()), g);
    EffectiveTensor A = effective_tensor(ctx);
    for (int i : {0, 3}) {
        Eigen::MatrixXd c = basis_tensor(2, 2, i);
        CellSolution sol = solve_cell_problem(ctx, c);
        Reconstruction rec = reconstruct_fields(ctx, sol.J);
        // A c as a D x m matrix
        Eigen::VectorXd cv = Eigen::Map<const Eigen::VectorXd>(c.data(), 4);
        Eigen::VectorXd Ac = A.mat * cv;
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l)
                CHECK(rec.mean_neg_grad_psi(l, k) ==
                      Catch::Approx(Ac(k * 2 + l)).margin(1e-6 * Ac.norm()));
        // v = J u^T pointwise
        for (std::size_t x = 0; x < g.npoints(); ++x) {
            double v0 = 0.0;
            for (int k = 0; k < 2; ++k)
                v0 += sol.J.values.at(k * 2 + 0, x) * ctx.coeffs.u.at(k, x);
            CHECK(rec.v.at(0, x) == Catch::Approx(v0).margin(1e-13));
        }
        CHECK(weak_conservation_residual(ctx, rec) < 1e-6);
    }
}

TEST_CASE("curl residual of grad psi decreases under refinement") {
    MediumSpec spec = dirac_medium(gamma_sincos());
    Eigen::MatrixXd c = basis_tensor(2, 2, 0);
    auto curl_of = [&](int n) {
        Grid g(2, {n, n}, Bc::periodic);
        FormContext ctx = make_form_context(spec, g);
        CellSolution sol = solve_cell_problem(ctx, c);
        Reconstruction rec = reconstruct_fields(ctx, sol.J);
        return rec.curl_residual / std::max(norm(rec.grad_psi), 1e-300);
    };
    const double c16 = curl_of(16);
    const double c32 = curl_of(32);
    CHECK(c32 < c16);
}
