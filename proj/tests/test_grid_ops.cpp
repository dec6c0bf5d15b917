#include <catch2/catch_amalgamated.hpp>

#include "hydrohom/coefficients.hpp"
#include "hydrohom/ops.hpp"

using namespace hydrohom;

namespace {

FieldArray sample_plane(const Grid& g, const AnalyticScalar& f) { return sample(g, f); }

FieldArray random_field(const Grid& g, int comps, std::uint64_t seed) {
    FieldArray out(g, comps);
    RngStream rng(seed);
    for (double& v : out.data) v = rng.sym();
    return out;
}

} // namespace

TEST_CASE("inner product matches analytic integrals on the torus") {
    Grid g(2, {32, 32}, Bc::periodic);
    FieldArray one(g, 1);
    one.fill(1.0);
    CHECK(inner_product(one, one) == Catch::Approx(1.0).margin(1e-14));

    FieldArray s = sample_plane(g, analytic_sin(1, 0));
    CHECK(inner_product(s, s) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("inner product satisfies Cauchy-Schwarz on random fields") {
    Grid g(2, {16, 16}, Bc::dirichlet);
    for (std::uint64_t s = 0; s < 8; ++s) {
        FieldArray f = random_field(g, 3, 100 + s);
        FieldArray h = random_field(g, 3, 200 + s);
        CHECK(std::abs(inner_product(f, h)) <= norm(f) * norm(h) + 1e-13);
    }
}

TEST_CASE("spectral gradient is exact on resolved modes") {
    Grid g(2, {32, 32}, Bc::periodic);
    FieldArray s = sample_plane(g, analytic_sin(1, 0));
    FieldArray grad = gradient(g, s.plane(0));
    FieldArray expected = sample_gradient(g, analytic_sin(1, 0));
    double err = 0.0;
    for (std::size_t i = 0; i < g.npoints(); ++i) {
        err = std::max(err, std::abs(grad.at(0, i) - expected.at(0, i)));
        err = std::max(err, std::abs(grad.at(1, i) - expected.at(1, i)));
    }
    CHECK(err < 1e-11);
}

TEST_CASE("gradient of a constant vanishes on both grid families") {
    for (Bc bc : {Bc::periodic, Bc::dirichlet}) {
        Grid g(2, {16, 16}, bc);
        FieldArray c(g, 1);
        c.fill(3.25);
        FieldArray grad = gradient(g, c.plane(0));
        CHECK(max_abs(grad) < 1e-14);
    }
}

TEST_CASE("FD gradient is second order and exact on linears") {
    Grid g(2, {17, 17}, Bc::dirichlet);
    // linear profile 2 x1 - 3 x2
    FieldArray lin(g, 1);
    for (int i0 = 0; i0 < g.n[0]; ++i0)
        for (int i1 = 0; i1 < g.n[1]; ++i1)
            lin.at(0, g.index(i0, i1)) = 2.0 * g.coord(0, i0) - 3.0 * g.coord(1, i1);
    FieldArray grad = gradient(g, lin.plane(0));
    for (std::size_t i = 0; i < g.npoints(); ++i) {
        CHECK(grad.at(0, i) == Catch::Approx(2.0).margin(1e-12));
        CHECK(grad.at(1, i) == Catch::Approx(-3.0).margin(1e-12));
    }
}

TEST_CASE("summation by parts: <grad phi, V> = -<phi, div V> for clamped fields") {
    Grid g(2, {20, 20}, Bc::dirichlet);
    FieldArray phi = random_field(g, 1, 7);
    FieldArray V = random_field(g, 2, 8);
    apply_dirichlet_mask(g, phi.plane(0));
    for (int c = 0; c < 2; ++c) apply_dirichlet_mask(g, V.plane(c));

    FieldArray grad = gradient(g, phi.plane(0));
    FieldArray div = divergence(g, V);
    const double lhs = inner_product(grad, V);
    FieldArray phi1 = phi;
    const double rhs = -inner_product(phi1, div);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-12 * (1.0 + std::abs(lhs))));
}

TEST_CASE("summation by parts on periodic grids holds with no boundary term") {
    Grid g(2, {16, 16}, Bc::periodic);
    FieldArray phi = random_field(g, 1, 17);
    FieldArray V = random_field(g, 2, 18);
    FieldArray grad = gradient(g, phi.plane(0));
    FieldArray div = divergence(g, V);
    CHECK(inner_product(grad, V) == Catch::Approx(-inner_product(phi, div)).margin(1e-11));
}

TEST_CASE("deriv_transpose is the Euclidean adjoint of deriv") {
    for (Bc bc : {Bc::periodic, Bc::dirichlet}) {
        Grid g(2, {bc == Bc::periodic ? 16 : 15, bc == Bc::periodic ? 16 : 13}, bc);
        for (int axis = 0; axis < 2; ++axis) {
            FieldArray x = random_field(g, 1, 31 + axis);
            FieldArray y = random_field(g, 1, 41 + axis);
            std::vector<double> dx(g.npoints()), dty(g.npoints());
            deriv(g, x.plane(0), dx, axis);
            deriv_transpose(g, y.plane(0), dty, axis);
            double lhs = 0.0, rhs = 0.0;
            for (std::size_t i = 0; i < g.npoints(); ++i) {
                lhs += dx[i] * y.at(0, i);
                rhs += x.at(0, i) * dty[i];
            }
            CHECK(lhs == Catch::Approx(rhs).margin(1e-10));
        }
    }
}

TEST_CASE("currents from potentials are discretely divergence free") {
    for (Bc bc : {Bc::periodic, Bc::dirichlet, Bc::natural}) {
        Grid g(2, {bc == Bc::periodic ? 24 : 21, bc == Bc::periodic ? 24 : 21}, bc);
        PotentialField f(g, 2);
        RngStream rng(5);
        for (double& v : f.f.data) v = rng.sym();
        CurrentField J = potential_to_current(f, Eigen::MatrixXd::Zero(2, 2));
        for (int k = 0; k < 2; ++k) {
            FieldArray col(g, 2);
            std::copy(J.values.plane(k * 2 + 0).begin(), J.values.plane(k * 2 + 0).end(),
                      col.plane(0).begin());
            std::copy(J.values.plane(k * 2 + 1).begin(), J.values.plane(k * 2 + 1).end(),
                      col.plane(1).begin());
            FieldArray div = divergence(g, col);
            CHECK(max_abs(div) < 1e-10 * std::max(1.0, max_abs(f.f)) / g.spacing(0) / g.spacing(0));
        }
    }
}

TEST_CASE("potential_to_current: zero potential gives the constant current") {
    Grid g(2, {16, 16}, Bc::periodic);
    PotentialField f(g, 2);
    Eigen::MatrixXd c(2, 2);
    c << 1.0, -2.0, 0.5, 3.0;
    CurrentField J = potential_to_current(f, c);
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
            auto p = J.values.plane(k * 2 + l);
            for (double v : p) CHECK(v == Catch::Approx(c(l, k)).margin(0.0));
        }
}

TEST_CASE("potential_to_current reproduces the analytic curl of sin(2 pi x1)") {
    Grid g(2, {32, 32}, Bc::periodic);
    PotentialField f(g, 1);
    FieldArray s = sample_plane(g, analytic_sin(1, 0));
    std::copy(s.plane(0).begin(), s.plane(0).end(), f.f.plane(0).begin());
    CurrentField J = potential_to_current(f, Eigen::MatrixXd::Zero(2, 1));
    // curl(f) = (-d2 f, d1 f) = (0, 2 pi cos(2 pi x1))
    for (int i0 = 0; i0 < g.n[0]; ++i0)
        for (int i1 = 0; i1 < g.n[1]; ++i1) {
            const std::size_t x = g.index(i0, i1);
            CHECK(std::abs(J.values.at(0, x)) < 1e-11);
            CHECK(J.values.at(1, x) ==
                  Catch::Approx(2.0 * M_PI * std::cos(2.0 * M_PI * g.coord(0, i0))).margin(1e-10));
        }
}

TEST_CASE("potential_to_current in D = 1 ignores the potential") {
    Grid g(1, {64, 1}, Bc::periodic);
    PotentialField f(g, 2);
    Eigen::MatrixXd c(1, 2);
    c << 2.0, -1.0;
    CurrentField J = potential_to_current(f, c);
    for (int k = 0; k < 2; ++k)
        for (double v : J.values.plane(k)) CHECK(v == Catch::Approx(c(0, k)).margin(0.0));
}

TEST_CASE("potential_to_current is linear") {
    Grid g(2, {16, 16}, Bc::periodic);
    PotentialField f(g, 2), h(g, 2);
    RngStream rng(11);
    for (double& v : f.f.data) v = rng.sym();
    for (double& v : h.f.data) v = rng.sym();
    Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(2, 2);

    PotentialField combo(g, 2);
    for (std::size_t i = 0; i < combo.f.data.size(); ++i)
        combo.f.data[i] = 2.0 * f.f.data[i] - 3.0 * h.f.data[i];
    CurrentField Jc = potential_to_current(combo, c0);
    CurrentField Jf = potential_to_current(f, c0);
    CurrentField Jh = potential_to_current(h, c0);
    double err = 0.0;
    for (std::size_t i = 0; i < Jc.values.data.size(); ++i)
        err = std::max(err,
                       std::abs(Jc.values.data[i] - 2.0 * Jf.values.data[i] + 3.0 * Jh.values.data[i]));
    CHECK(err < 1e-11);
}

TEST_CASE("the mean of a potential current equals its constant part") {
    for (Bc bc : {Bc::periodic, Bc::dirichlet}) {
        Grid g(2, {16, 16}, bc);
        PotentialField f(g, 1);
        RngStream rng(23);
        for (double& v : f.f.data) v = rng.sym();
        if (bc == Bc::dirichlet) apply_mask(g, f.f);
        Eigen::MatrixXd c(2, 1);
        c << 0.75, -1.25;
        CurrentField J = potential_to_current(f, c);
        CHECK(mean_of_plane(J.values, 0) == Catch::Approx(0.75).margin(1e-12));
        CHECK(mean_of_plane(J.values, 1) == Catch::Approx(-1.25).margin(1e-12));
    }
}

TEST_CASE("grid invariants are enforced") {
    CHECK_THROWS_AS(Grid(2, {3, 8}, Bc::periodic), DimensionMismatch);
    CHECK_THROWS_AS(Grid(2, {9, 8}, Bc::periodic), DimensionMismatch); // odd spectral
    CHECK_NOTHROW(Grid(2, {9, 9}, Bc::dirichlet));
    CHECK(Grid(2, {8, 8}, Bc::periodic).cell_volume() == Catch::Approx(1.0 / 64));
}
