#include <catch2/catch_amalgamated.hpp>

#include "hydrohom/experiments.hpp"

using namespace hydrohom;

namespace {

MediumSpec dirac_sincos() {
    return dirac_medium(
        analytic_sum({analytic_sin(1, 0), analytic_sin(0, 1, M_PI / 2)}));
}

} // namespace

TEST_CASE("eps study: constant coefficients converge with zero error") {
    DiracParams p;
    p.n = ScalarMap::affine(0.0, 0.0);
    MediumSpec spec = dirac_medium(analytic_constant(0.0), p);
    EpsStudyOptions opt;
    opt.eps_list = {0.5, 0.25};
    opt.cell_resolution = 16;
    opt.tensor_gap = false;
    opt.allow_seminorm = true;
    StudyResult res = eps_convergence_study(spec, opt);
    for (const auto& row : res.rows) CHECK(row[2] < 1e-10); // error column
}

TEST_CASE("eps study: heterogeneous errors decrease on the Dirac medium") {
    EpsStudyOptions opt;
    opt.eps_list = {0.5, 0.25, 0.125};
    opt.cell_resolution = 16;
    opt.tensor_gap = true;
    StudyResult res = eps_convergence_study(dirac_sincos(), opt);
    CHECK(res.flag("error_strictly_decreasing"));
    CHECK(res.flag("error_reduction_met"));
    CHECK(res.flag("tensor_gap_shrinks"));
    CHECK(res.summary_value("gap_fine") < res.summary_value("gap_coarse"));
}

TEST_CASE("eps study rejects unresolved cells") {
    EpsStudyOptions opt;
    opt.points_per_cell = 4;
    CHECK_THROWS_AS(eps_convergence_study(dirac_sincos(), opt), ResolutionInsufficient);
}

TEST_CASE("ordering check passes on a 16^2 medium") {
    OrderingOptions opt;
    opt.n = 16;
    StudyResult res = bc_ordering_check(dirac_sincos(), opt);
    CHECK(res.flag("dirichlet_dominates"));
    CHECK(res.flag("middle_equality"));
    CHECK(res.flag("natural_below"));
    CHECK(res.summary_value("middle_equality_norm") < 1e-7);
}

TEST_CASE("small oscillation sweep recovers the quadratic scaling") {
    SmallOscOptions opt;
    opt.n = 16;
    opt.lambdas = {0.2, 0.1, 0.05};
    StudyResult res = small_osc_sweep(SmallOscFamily::standard(), opt);
    CHECK(res.flag("oscillation_quadratic"));
    CHECK(res.summary_value("small_eig_slope") == Catch::Approx(2.0).margin(0.15));
    CHECK(std::abs(res.summary_value("large_eig_slope")) < 0.15);
}

TEST_CASE("subadditivity holds on sampled random media") {
    SubadditivityOptions opt;
    opt.seed = 7;
    opt.samples = 3;
    opt.sizes = {1, 2};
    opt.partition_sizes = {1};
    StudyResult res = subadditivity_mc(opt);
    CHECK(res.flag("partition_subadditive"));
    CHECK(res.summary_value("degenerate_samples") == 0.0);
}

TEST_CASE("zero-amplitude media come back fully degenerate") {
    SubadditivityOptions opt;
    opt.seed = 3;
    opt.samples = 2;
    opt.sizes = {1, 2};
    opt.partition_sizes = {};
    opt.amplitude = 0.0;
    opt.max_resamples = 2;
    StudyResult res = subadditivity_mc(opt);
    CHECK(res.flag("all_samples_degenerate"));
    CHECK(res.summary_value("degenerate_samples") == 2.0);
}

TEST_CASE("study runs are deterministic in the seed") {
    SubadditivityOptions opt;
    opt.seed = 11;
    opt.samples = 2;
    opt.sizes = {1, 2};
    opt.partition_sizes = {1};
    StudyResult a = subadditivity_mc(opt);
    StudyResult b = subadditivity_mc(opt);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        for (std::size_t j = 0; j < a.rows[i].size(); ++j) CHECK(a.rows[i][j] == b.rows[i][j]);
}

TEST_CASE("threaded study runs match single-threaded ones") {
    SubadditivityOptions opt;
    opt.seed = 5;
    opt.samples = 3;
    opt.sizes = {1, 2};
    opt.partition_sizes = {1};
    StudyResult a = subadditivity_mc(opt);
    opt.threads = 3;
    StudyResult b = subadditivity_mc(opt);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        for (std::size_t j = 0; j < a.rows[i].size(); ++j) CHECK(a.rows[i][j] == b.rows[i][j]);
}
