////////////////////////////////////////////////////////////////////////////////
// experiments.hpp
////////////////////////////////////////////////////////////////////////////////
// Reproducible numerical studies:
//
//   * eps_convergence_study  - Dirichlet solutions of the rescaled problem
//     against the homogenized constant-tensor limit as eps -> 0
//   * bc_ordering_check      - the ordering chain of the four effective
//     tensors on one medium
//   * small_osc_sweep        - Rayleigh-quotient scaling of nearly constant
//     media in the oscillation amplitude
//   * subadditivity_mc       - Monte-Carlo subadditivity and self-averaging
//     of Dirichlet minimal energies on stationary random media
//
// Each study returns a StudyResult: ordered rows keyed by the sweep
// parameter, fitted slopes where applicable, and pass/fail flags for the
// assertions the study makes.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_EXPERIMENTS_HPP
#define HYDROHOM_EXPERIMENTS_HPP

#include "hydrohom/transport.hpp"

namespace hydrohom {

struct StudyResult {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> summary;
    std::vector<std::pair<std::string, bool>> flags;

    bool passed() const {
        for (const auto& [name, ok] : flags)
            if (!ok) return false;
        return true;
    }
    double summary_value(const std::string& key) const {
        for (const auto& [k, v] : summary)
            if (k == key) return v;
        throw Error("no summary value named " + key);
    }
    bool flag(const std::string& key) const {
        for (const auto& [k, v] : flags)
            if (k == key) return v;
        throw Error("no flag named " + key);
    }
};

namespace detail {

inline double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(xs.size());
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace detail

////////////////////////////////////////////////////////////////////////////////
// Constant-tensor reference problem (the homogenized limit)
////////////////////////////////////////////////////////////////////////////////

// Minimize <Abar (c + curl f), (c + curl f)> over Dirichlet potentials: the
// reference problem the heterogeneous solutions converge to. Same grids,
// stencils and clamping as the heterogeneous solver.
inline PotentialField solve_constant_tensor_problem(const Grid& g, const Eigen::MatrixXd& abar,
                                                    const Eigen::MatrixXd& c, int m,
                                                    double tol = 1e-10) {
    const int D = g.dim;
    const auto wq = quadrature_weights(g);
    auto contract = [&](const FieldArray& J, const Eigen::MatrixXd& cc) {
        // Abar applied nodewise to vec(cc + J), returned weighted
        FieldArray out(g, D * m);
        const int n = D * m;
        for (std::size_t x = 0; x < g.npoints(); ++x) {
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j)
                    acc += abar(i, j) * (cc(j % D, j / D) + J.at(j, x));
                out.at(i, x) = wq[x] * acc;
            }
        }
        return out;
    };
    auto A = [&](const FieldArray& f) {
        FieldArray J = curl_apply(g, f, m);
        FieldArray Y = contract(J, Eigen::MatrixXd::Zero(D, m));
        FieldArray e = curl_transpose(g, Y, m);
        for (int k = 0; k < m; ++k) {
            auto p = e.plane(k);
            for (std::size_t x = 0; x < p.size(); ++x) p[x] /= wq[x];
        }
        apply_mask(g, e);
        return e;
    };
    FieldArray zeroJ(g, D * m);
    FieldArray Y0 = contract(zeroJ, c);
    FieldArray rhs = curl_transpose(g, Y0, m);
    for (int k = 0; k < m; ++k) {
        auto p = rhs.plane(k);
        for (std::size_t x = 0; x < p.size(); ++x) p[x] /= wq[x];
    }
    apply_mask(g, rhs);
    rhs *= -1.0;
    auto M = [](const FieldArray& r) { return r; };
    auto dot = [&](const FieldArray& a, const FieldArray& b) {
        return detail::dot_planes(wq, a, b);
    };
    PotentialField f(g, m);
    const int maxit = std::max(64, static_cast<int>(100.0 * std::sqrt(double(m) * g.npoints())));
    CgResult cg = cg_solve(A, M, dot, rhs, f.f, maxit, tol);
    if (!cg.converged)
        throw NoConvergence("homogenized reference solve stalled", cg.iterations,
                            cg.relative_residual);
    return f;
}

////////////////////////////////////////////////////////////////////////////////
// Periodic homogenization: eps -> 0 convergence
////////////////////////////////////////////////////////////////////////////////

struct EpsStudyOptions {
    std::vector<double> eps_list{0.5, 0.25, 0.125, 0.0625};
    int points_per_cell = 8;
    int cell_resolution = 32;     // periodic grid for the reference tensor
    Eigen::MatrixXd c;            // boundary data: linear potential with J0 = c
    double min_reduction = 0.2;   // required error reduction per halving
    bool tensor_gap = true;       // also compare a_D(eps) against a_sharp
    bool allow_seminorm = false;  // constant-coefficient sanity runs
    SolverOptions solver;
};

inline StudyResult eps_convergence_study(const MediumSpec& spec, EpsStudyOptions opt = {}) {
    if (opt.points_per_cell < 8)
        throw ResolutionInsufficient("need at least 8 points per unit cell");
    const int m = spec.m;
    if (opt.c.size() == 0) opt.c = basis_tensor(2, m, 0);

    // reference tensor from the unit cell
    Grid cell(2, {opt.cell_resolution, opt.cell_resolution}, Bc::periodic);
    FormContext cell_ctx =
        make_form_context(spec, cell, FormOptions{.allow_seminorm = opt.allow_seminorm});
    EffectiveTensor abar = effective_tensor(cell_ctx, opt.solver);

    StudyResult res;
    res.columns = {"eps", "grid_n", "error_l2", "residual", "iterations", "tensor_gap"};

    std::vector<double> errors;
    double gap_first = -1.0, gap_last = -1.0;
    for (std::size_t i = 0; i < opt.eps_list.size(); ++i) {
        const double eps = opt.eps_list[i];
        const double invf = 1.0 / eps;
        if (std::abs(invf - std::round(invf)) > 1e-9)
            throw NonIntegerScale("eps list must consist of reciprocals of integers");
        const int N = static_cast<int>(std::round(invf));
        const int n = opt.points_per_cell * N + 1;
        Grid g(2, {n, n}, Bc::dirichlet);
        FormContext ctx = make_form_context(
            spec, g, FormOptions{.epsilon = eps, .allow_seminorm = opt.allow_seminorm});
        CellSolution het = solve_cell_problem(ctx, opt.c, opt.solver);
        PotentialField hom = solve_constant_tensor_problem(g, abar.mat, opt.c, m);
        FieldArray diff = het.f.f;
        diff -= hom.f;
        const double err = norm(diff);
        errors.push_back(err);

        double gap = std::numeric_limits<double>::quiet_NaN();
        const bool want_gap =
            opt.tensor_gap && (i == 0 || i + 1 == opt.eps_list.size());
        if (want_gap) {
            EffectiveTensor ad = effective_tensor(ctx, opt.solver);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ad.mat - abar.mat);
            gap = es.eigenvalues().cwiseAbs().maxCoeff();
            if (i == 0) gap_first = gap;
            if (i + 1 == opt.eps_list.size()) gap_last = gap;
        }
        res.rows.push_back({eps, double(n), err, het.report.relative_residual,
                            double(het.report.iterations), gap});
    }

    bool monotone = true, reduced = true;
    for (std::size_t i = 1; i < errors.size(); ++i) {
        monotone = monotone && (errors[i] < errors[i - 1]);
        reduced = reduced && (errors[i] <= (1.0 - opt.min_reduction) * errors[i - 1]);
    }
    res.flags.emplace_back("error_strictly_decreasing", monotone);
    res.flags.emplace_back("error_reduction_met", reduced);
    if (opt.tensor_gap && gap_first >= 0.0 && gap_last >= 0.0) {
        res.flags.emplace_back("tensor_gap_shrinks", gap_last < gap_first);
        res.summary.emplace_back("gap_coarse", gap_first);
        res.summary.emplace_back("gap_fine", gap_last);
    }
    res.summary.emplace_back("slope", detail::fit_loglog_slope(opt.eps_list, errors));
    return res;
}

////////////////////////////////////////////////////////////////////////////////
// Boundary-condition ordering
////////////////////////////////////////////////////////////////////////////////

struct OrderingOptions {
    int n = 32; // periodic resolution; FD grids use n + 1
    SolverOptions solver;
    double tol = 1e-7;
};

inline StudyResult bc_ordering_check(const MediumSpec& spec, const OrderingOptions& opt = {}) {
    Grid gp(2, {opt.n, opt.n}, Bc::periodic);
    Grid gd(2, {opt.n + 1, opt.n + 1}, Bc::dirichlet);
    Grid gn(2, {opt.n + 1, opt.n + 1}, Bc::natural);

    EffectiveTensor As = effective_tensor(make_form_context(spec, gp), opt.solver);
    EffectiveTensor Ad = effective_tensor(make_form_context(spec, gd), opt.solver);
    EffectiveTensor Bn = effective_tensor_natural(make_form_context(spec, gn), opt.solver);
    EffectiveTensor Bs = effective_tensor_natural_periodic(make_form_context(spec, gp), opt.solver);

    const Eigen::MatrixXd Bs_inv = Bs.mat.inverse();
    const Eigen::MatrixXd Bn_inv = Bn.mat.inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> top(Ad.mat - As.mat);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mid(As.mat - Bs_inv);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> outer(Bs_inv - Bn_inv);

    StudyResult res;
    res.columns = {"eig_index", "ad_minus_asharp", "asharp_minus_bsharp_inv",
                   "bsharp_inv_minus_bnat_inv"};
    for (int i = 0; i < top.eigenvalues().size(); ++i)
        res.rows.push_back({double(i), top.eigenvalues()(i), mid.eigenvalues()(i),
                            outer.eigenvalues()(i)});
    res.summary.emplace_back("dirichlet_gap_min", top.eigenvalues().minCoeff());
    res.summary.emplace_back("middle_equality_norm", mid.eigenvalues().cwiseAbs().maxCoeff());
    res.summary.emplace_back("natural_gap_min", outer.eigenvalues().minCoeff());
    res.flags.emplace_back("dirichlet_dominates", top.eigenvalues().minCoeff() >= -opt.tol);
    res.flags.emplace_back("middle_equality",
                           mid.eigenvalues().cwiseAbs().maxCoeff() <= opt.tol * As.mat.norm());
    res.flags.emplace_back("natural_below", outer.eigenvalues().minCoeff() >= -opt.tol);
    return res;
}

////////////////////////////////////////////////////////////////////////////////
// Small-oscillation sweep
////////////////////////////////////////////////////////////////////////////////

struct SmallOscFamily {
    Eigen::MatrixXd a0;
    Eigen::RowVectorXd b0;
    std::vector<AnalyticScalar> a1;
    std::vector<AnalyticScalar> b1;
    double eta = 0.1;
    double zeta = 0.0;

    // default family: constant Dirac-point stacking perturbed in b
    static SmallOscFamily standard() {
        SmallOscFamily fam;
        fam.a0 = Eigen::MatrixXd(1, 2);
        fam.a0 << -1.0, 0.0;
        fam.b0 = Eigen::RowVectorXd(2);
        fam.b0 << 0.0, 1.0;
        fam.a1 = {analytic_constant(0.0), analytic_constant(0.0)};
        fam.b1 = {analytic_sum({analytic_sin(1, 0), analytic_sin(0, 1, M_PI / 2)}),
                  analytic_scale(analytic_sin(1, 1), 0.5)};
        return fam;
    }

    Eigen::MatrixXd w0() const {
        const int m = static_cast<int>(b0.size());
        Eigen::MatrixXd M(m, m);
        M.topRows(m - 1) = a0;
        M.bottomRows(1) = b0;
        Eigen::MatrixXd N = M.transpose().inverse();
        return N.topRows(m - 1);
    }
};

struct SmallOscOptions {
    std::vector<double> lambdas{0.2, 0.1, 0.05, 0.025};
    int n = 32;
    Bc bc = Bc::periodic;
    SolverOptions solver;
    double slope_tol = 0.1;
};

inline StudyResult small_osc_sweep(const SmallOscFamily& fam, const SmallOscOptions& opt = {}) {
    Grid g(2, {opt.n, opt.n}, opt.bc);
    const Eigen::MatrixXd w0 = fam.w0();

    StudyResult res;
    res.columns = {"lambda", "oscillation", "osc_over_lambda2", "small_eig_max", "large_eig_max"};
    std::vector<double> lam_pos, small_max, large_max, osc_ratio;
    for (double lam : opt.lambdas) {
        CoefficientSet cs = small_oscillation_family(g, fam.a0, fam.b0, fam.a1, fam.b1, lam,
                                                     fam.eta, fam.zeta);
        FormContext ctx = make_form_context(cs, FormOptions{.allow_seminorm = lam == 0.0});
        EffectiveTensor T = effective_tensor(ctx, opt.solver);
        EigenSplit split = small_oscillation_eigen_split(T, w0);
        const double sm = split.small_eigs.cwiseAbs().maxCoeff();
        const double lg = split.large_eigs.cwiseAbs().maxCoeff();
        res.rows.push_back({lam, ctx.osc.value,
                            lam > 0 ? ctx.osc.value / (lam * lam)
                                    : std::numeric_limits<double>::quiet_NaN(),
                            sm, lg});
        if (lam > 0.0) {
            lam_pos.push_back(lam);
            small_max.push_back(sm);
            large_max.push_back(lg);
            osc_ratio.push_back(ctx.osc.value / (lam * lam));
        }
    }

    const double slope_small = detail::fit_loglog_slope(lam_pos, small_max);
    const double slope_large = detail::fit_loglog_slope(lam_pos, large_max);
    double ratio_spread = 0.0;
    for (double r : osc_ratio)
        ratio_spread = std::max(ratio_spread, std::abs(r - osc_ratio.front()) /
                                                  osc_ratio.front());
    res.summary.emplace_back("small_eig_slope", slope_small);
    res.summary.emplace_back("large_eig_slope", slope_large);
    res.summary.emplace_back("osc_ratio_spread", ratio_spread);
    res.flags.emplace_back("small_slope_is_two", std::abs(slope_small - 2.0) <= opt.slope_tol);
    res.flags.emplace_back("large_slope_is_zero", std::abs(slope_large) <= opt.slope_tol);
    res.flags.emplace_back("oscillation_quadratic", ratio_spread <= 0.01);
    return res;
}

////////////////////////////////////////////////////////////////////////////////
// Stochastic subadditivity
////////////////////////////////////////////////////////////////////////////////

struct SubadditivityOptions {
    std::uint64_t seed = 1;
    std::vector<int> sizes{1, 2, 4, 8};
    int samples = 16;
    int points_per_cell = 8;
    double radius = 0.8;
    double amplitude = 1.0;
    DiracParams dirac;              // medium built as the Dirac preset of the random gamma
    Eigen::MatrixXd c;              // fixed mean current across all subdomains
    std::vector<int> partition_sizes{2, 4}; // check nu[X_2N] <= sum of 2^D copies at N
    int max_resamples = 5;
    double subadd_tol = 1e-8;
    SolverOptions solver;
    int threads = 1;
};

// nu[X] = (1/2) min a[X](c + J, c + J) over Dirichlet potentials, for the
// rectangle [o1, o1+N] x [o2, o2+N] of the sample medium.
namespace detail {

struct SubadditivitySample {
    std::map<int, double> nu;                    // origin-0 values per size
    std::vector<std::array<double, 3>> parts;    // N, nu_big, sum of copies
    int resamples = 0;
    bool degenerate = false;
    double worst_residual = 0.0;
};

inline double nu_of_region(const MediumSpec& spec, int N, std::array<double, 2> origin, int ppc,
                           const Eigen::MatrixXd& c, const SolverOptions& sopt,
                           double* residual) {
    Grid g(2, {N * ppc + 1, N * ppc + 1}, Bc::dirichlet, {double(N), double(N)}, origin);
    FormContext ctx = make_form_context(spec, g);
    if (ctx.degenerate) throw DegenerateForm("sample region has no oscillation");
    CellSolution sol = solve_cell_problem(ctx, c, sopt);
    if (residual) *residual = std::max(*residual, sol.report.relative_residual);
    return 0.5 * sol.report.energy;
}

} // namespace detail

inline StudyResult subadditivity_mc(const SubadditivityOptions& opt = {}) {
    StudyResult res;
    res.columns = {"sample", "size", "nu", "nu_per_volume", "resamples", "degenerate",
                   "residual"};
    if (opt.samples < 1) throw Error("need at least one sample");
    Eigen::MatrixXd c = opt.c.size() ? opt.c : basis_tensor(2, 2, 0);

    auto run_sample = [&](int s) {
        detail::SubadditivitySample out;
        std::uint64_t sample_seed = hash_combine(opt.seed, s);
        for (int attempt = 0;; ++attempt) {
            try {
                RandomStationaryField gf{.seed = sample_seed,
                                         .radius = opt.radius,
                                         .amplitude = opt.amplitude,
                                         .dim = 2,
                                         .wrap_cells = 0};
                MediumSpec spec = dirac_medium(gf.as_analytic(), opt.dirac);
                double residual = 0.0;
                for (int N : opt.sizes)
                    out.nu[N] = detail::nu_of_region(spec, N, {0.0, 0.0}, opt.points_per_cell,
                                                     c, opt.solver, &residual);
                for (int N : opt.partition_sizes) {
                    const int NN = 2 * N;
                    double big = out.nu.count(NN)
                                     ? out.nu[NN]
                                     : detail::nu_of_region(spec, NN, {0.0, 0.0},
                                                            opt.points_per_cell, c, opt.solver,
                                                            &residual);
                    double copies = 0.0;
                    for (int oi = 0; oi < 2; ++oi)
                        for (int oj = 0; oj < 2; ++oj) {
                            const std::array<double, 2> origin{double(oi * N), double(oj * N)};
                            copies += (oi == 0 && oj == 0 && out.nu.count(N))
                                          ? out.nu[N]
                                          : detail::nu_of_region(spec, N, origin,
                                                                 opt.points_per_cell, c,
                                                                 opt.solver, &residual);
                        }
                    out.parts.push_back({double(N), big, copies});
                }
                out.worst_residual = residual;
                return out;
            } catch (const DegenerateForm&) {
                ++out.resamples;
                if (attempt + 1 >= opt.max_resamples) {
                    out.degenerate = true;
                    return out;
                }
                sample_seed = hash_combine(sample_seed, 0xDEADu + attempt);
            }
        }
    };

    std::vector<detail::SubadditivitySample> all(opt.samples);
    if (opt.threads <= 1) {
        for (int s = 0; s < opt.samples; ++s) all[s] = run_sample(s);
    } else {
        std::vector<std::future<detail::SubadditivitySample>> fut(opt.samples);
        int inflight = 0, next = 0, done = 0;
        while (done < opt.samples) {
            while (next < opt.samples && inflight < opt.threads) {
                fut[next] = std::async(std::launch::async, run_sample, next);
                ++next;
                ++inflight;
            }
            all[done] = fut[done].get();
            ++done;
            --inflight;
        }
    }

    bool subadd_ok = true;
    int degenerate_count = 0, total_resamples = 0;
    std::map<int, std::vector<double>> per_volume;
    for (int s = 0; s < opt.samples; ++s) {
        const auto& smp = all[s];
        total_resamples += smp.resamples;
        if (smp.degenerate) {
            ++degenerate_count;
            res.rows.push_back({double(s), 0.0, 0.0, 0.0, double(smp.resamples), 1.0, 0.0});
            continue;
        }
        for (int N : opt.sizes) {
            const double volume = double(N) * N;
            res.rows.push_back({double(s), double(N), smp.nu.at(N), smp.nu.at(N) / volume,
                                double(smp.resamples), 0.0, smp.worst_residual});
            per_volume[N].push_back(smp.nu.at(N) / volume);
        }
        for (const auto& part : smp.parts)
            subadd_ok =
                subadd_ok && (part[1] <= part[2] + opt.subadd_tol * std::abs(part[2]));
    }

    res.summary.emplace_back("degenerate_samples", degenerate_count);
    res.summary.emplace_back("total_resamples", total_resamples);
    auto stats = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= std::max<std::size_t>(1, v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        if (v.size() > 1) var /= (v.size() - 1);
        return std::pair{mean, var};
    };
    for (auto& [N, vals] : per_volume) {
        auto [mean, var] = stats(vals);
        res.summary.emplace_back("mean_per_volume_N" + std::to_string(N), mean);
        res.summary.emplace_back("var_per_volume_N" + std::to_string(N), var);
    }
    res.flags.emplace_back("partition_subadditive", subadd_ok);
    if (degenerate_count == opt.samples) {
        res.flags.emplace_back("all_samples_degenerate", true);
    } else {
        const int nmin = opt.sizes.front(), nmax = opt.sizes.back();
        if (per_volume.count(nmin) && per_volume.count(nmax) && per_volume[nmin].size() > 1) {
            auto [m_small, v_small] = stats(per_volume[nmin]);
            auto [m_large, v_large] = stats(per_volume[nmax]);
            res.flags.emplace_back("variance_decreases", v_large < v_small);
            // per-volume means should trend down within Monte-Carlo error
            const double se = std::sqrt((v_small + v_large) /
                                        std::max<std::size_t>(1, per_volume[nmin].size()));
            res.flags.emplace_back("mean_nonincreasing", m_large <= m_small + 2.0 * se);
        }
    }
    return res;
}

} // namespace hydrohom

#endif
