////////////////////////////////////////////////////////////////////////////////
// cli.hpp
////////////////////////////////////////////////////////////////////////////////
// Command-line front end. One JSON config file describes a run; command-line
// flags override file values. Commands:
//
//   tensor        effective tensor for the configured grid/boundary kind
//   transport     conductivity blocks, measured kappa, Lorenz ratio, WF gap
//   bounds        admissible-trial upper bounds against the solver energies
//   sweep-lambda  small-oscillation amplitude sweep
//   sweep-eps     periodic homogenization eps -> 0 study
//   ordering      boundary-condition ordering chain
//   random-subadd stochastic subadditivity Monte Carlo
//   check         invariant suite on small grids (exit 0 iff everything holds)
//
// The whole config is validated (unknown keys rejected) before any solve or
// write happens; outputs are written atomically. Exit codes: 0 ok, 2 config
// error, 3 no convergence, 4 degenerate (zero-oscillation) form.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_CLI_HPP
#define HYDROHOM_CLI_HPP

#include <iostream>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "hydrohom/io.hpp"

namespace hydrohom {

struct GammaConfig {
    std::string kind = "sincos"; // constant | sin1 | sincos | sin | random
    double value = 0.0;          // constant
    double k1 = 1.0, k2 = 0.0;   // sin
    double shift = 0.0;
    std::uint64_t seed = 1;      // random
    double radius = 0.8;
    double amplitude = 1.0;
    int wrap_cells = 0;
};

struct MediumConfig {
    std::string preset = "dirac"; // dirac | galilean | scalar | small_osc
    GammaConfig gamma;
    double sigma_q = 1.0, kappa_q = 1.0;
    double eta = 0.1, zeta = 0.0;
    double n0 = 0.0, n1 = 1.0, s0 = 1.0, s1 = 0.0;
    double c0 = 0.5, n_floor = 0.5;
    double lambda = 0.1;
};

struct SweepConfig {
    std::vector<double> lambdas{0.2, 0.1, 0.05, 0.025};
    std::vector<double> eps{0.5, 0.25, 0.125, 0.0625};
    std::vector<int> sizes{1, 2, 4, 8};
    std::vector<int> partition_sizes{2, 4};
    int samples = 16;
    int points_per_cell = 8;
    int cell_resolution = 32;
    double radius = 0.8;
    double amplitude = 1.0;
    double min_reduction = 0.2;
    bool tensor_gap = true;
    double slope_tol = 0.1;
};

struct RunConfig {
    std::string command = "check";
    std::uint64_t seed = 1;
    int threads = 0; // 0 = hardware parallelism
    double tol = 1e-10;
    bool allow_seminorm = false;
    std::string out = "out";
    int theta_samples = 256;
    double t0 = 1.0;
    int grid_dim = 2;
    std::array<int, 2> grid_n{32, 32};
    std::array<double, 2> grid_length{1.0, 1.0};
    Bc grid_bc = Bc::periodic;
    MediumConfig medium;
    SweepConfig sweep;

    Grid grid() const { return Grid(grid_dim, grid_n, grid_bc, grid_length); }
    int effective_threads() const {
        if (threads > 0) return threads;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }
    SolverOptions solver() const {
        SolverOptions o;
        o.cg.tol = tol;
        o.threads = effective_threads();
        return o;
    }
};

////////////////////////////////////////////////////////////////////////////////
// Config parsing
////////////////////////////////////////////////////////////////////////////////

namespace detail_cli {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline GammaConfig parse_gamma(const nlohmann::json& j) {
    reject_unknown(j, {"kind", "value", "k1", "k2", "shift", "seed", "radius", "amplitude",
                       "wrap_cells"},
                   "medium.gamma");
    GammaConfig g;
    maybe(j, "kind", g.kind);
    maybe(j, "value", g.value);
    maybe(j, "k1", g.k1);
    maybe(j, "k2", g.k2);
    maybe(j, "shift", g.shift);
    maybe(j, "seed", g.seed);
    maybe(j, "radius", g.radius);
    maybe(j, "amplitude", g.amplitude);
    maybe(j, "wrap_cells", g.wrap_cells);
    const std::set<std::string> kinds{"constant", "sin1", "sincos", "sin", "random"};
    if (!kinds.count(g.kind)) throw ConfigError("unknown gamma kind '" + g.kind + "'");
    return g;
}

inline MediumConfig parse_medium(const nlohmann::json& j) {
    reject_unknown(j, {"preset", "gamma", "sigma_q", "kappa_q", "eta", "zeta", "n0", "n1", "s0",
                       "s1", "c0", "n_floor", "lambda"},
                   "medium");
    MediumConfig m;
    maybe(j, "preset", m.preset);
    if (j.contains("gamma")) m.gamma = parse_gamma(j.at("gamma"));
    maybe(j, "sigma_q", m.sigma_q);
    maybe(j, "kappa_q", m.kappa_q);
    maybe(j, "eta", m.eta);
    maybe(j, "zeta", m.zeta);
    maybe(j, "n0", m.n0);
    maybe(j, "n1", m.n1);
    maybe(j, "s0", m.s0);
    maybe(j, "s1", m.s1);
    maybe(j, "c0", m.c0);
    maybe(j, "n_floor", m.n_floor);
    maybe(j, "lambda", m.lambda);
    const std::set<std::string> presets{"dirac", "galilean", "scalar", "small_osc"};
    if (!presets.count(m.preset)) throw ConfigError("unknown preset '" + m.preset + "'");
    return m;
}

inline SweepConfig parse_sweep(const nlohmann::json& j) {
    reject_unknown(j, {"lambdas", "eps", "sizes", "partition_sizes", "samples",
                       "points_per_cell", "cell_resolution", "radius", "amplitude",
                       "min_reduction", "tensor_gap", "slope_tol"},
                   "sweep");
    SweepConfig s;
    maybe(j, "lambdas", s.lambdas);
    maybe(j, "eps", s.eps);
    maybe(j, "sizes", s.sizes);
    maybe(j, "partition_sizes", s.partition_sizes);
    maybe(j, "samples", s.samples);
    maybe(j, "points_per_cell", s.points_per_cell);
    maybe(j, "cell_resolution", s.cell_resolution);
    maybe(j, "radius", s.radius);
    maybe(j, "amplitude", s.amplitude);
    maybe(j, "min_reduction", s.min_reduction);
    maybe(j, "tensor_gap", s.tensor_gap);
    maybe(j, "slope_tol", s.slope_tol);
    return s;
}

} // namespace detail_cli

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail_cli::maybe;
    detail_cli::reject_unknown(j, {"command", "seed", "threads", "tol", "allow_seminorm", "out",
                                   "theta_samples", "t0", "grid", "medium", "sweep"},
                               "config");
    RunConfig c;
    maybe(j, "command", c.command);
    maybe(j, "seed", c.seed);
    maybe(j, "threads", c.threads);
    maybe(j, "tol", c.tol);
    maybe(j, "allow_seminorm", c.allow_seminorm);
    maybe(j, "out", c.out);
    maybe(j, "theta_samples", c.theta_samples);
    maybe(j, "t0", c.t0);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail_cli::reject_unknown(g, {"dim", "n", "bc", "length"}, "grid");
        maybe(g, "dim", c.grid_dim);
        if (g.contains("n")) {
            auto n = g.at("n").get<std::vector<int>>();
            if (n.empty() || n.size() > 2) throw ConfigError("grid.n needs 1 or 2 entries");
            c.grid_n[0] = n[0];
            c.grid_n[1] = n.size() > 1 ? n[1] : 1;
        }
        if (g.contains("length")) {
            auto L = g.at("length").get<std::vector<double>>();
            if (L.empty() || L.size() > 2) throw ConfigError("grid.length needs 1 or 2 entries");
            c.grid_length[0] = L[0];
            c.grid_length[1] = L.size() > 1 ? L[1] : 1.0;
        }
        if (g.contains("bc")) {
            const std::string s = g.at("bc").get<std::string>();
            if (s == "periodic")
                c.grid_bc = Bc::periodic;
            else if (s == "dirichlet")
                c.grid_bc = Bc::dirichlet;
            else if (s == "natural")
                c.grid_bc = Bc::natural;
            else
                throw ConfigError("unknown boundary kind '" + s + "'");
        }
    }
    if (j.contains("medium")) c.medium = detail_cli::parse_medium(j.at("medium"));
    if (j.contains("sweep")) c.sweep = detail_cli::parse_sweep(j.at("sweep"));

    const std::set<std::string> commands{"tensor",      "transport", "bounds",
                                         "sweep-lambda", "sweep-eps", "ordering",
                                         "random-subadd", "check"};
    if (!commands.count(c.command)) throw ConfigError("unknown command '" + c.command + "'");
    try {
        (void)c.grid();
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid grid: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    return parse_config(j);
}

////////////////////////////////////////////////////////////////////////////////
// Medium assembly
////////////////////////////////////////////////////////////////////////////////

inline AnalyticScalar gamma_profile(const GammaConfig& g, int dim) {
    AnalyticScalar base;
    if (g.kind == "constant")
        base = analytic_constant(g.value);
    else if (g.kind == "sin1")
        base = analytic_sin(1, 0);
    else if (g.kind == "sincos")
        base = (dim == 1)
                   ? analytic_sin(1, 0)
                   : analytic_sum({analytic_sin(1, 0), analytic_sin(0, 1, M_PI / 2)});
    else if (g.kind == "sin")
        base = analytic_sin(g.k1, dim == 2 ? g.k2 : 0.0);
    else if (g.kind == "random")
        base = RandomStationaryField{.seed = g.seed,
                                     .radius = g.radius,
                                     .amplitude = g.amplitude,
                                     .dim = dim,
                                     .wrap_cells = g.wrap_cells}
                   .as_analytic();
    else
        throw ConfigError("unknown gamma kind '" + g.kind + "'");
    return g.shift == 0.0 ? base : analytic_shift(base, g.shift);
}

inline MediumSpec medium_spec(const MediumConfig& m, int dim) {
    AnalyticScalar gamma = gamma_profile(m.gamma, dim);
    if (m.preset == "dirac") {
        DiracParams p;
        p.sigma_q = m.sigma_q;
        p.eta = m.eta;
        p.zeta = m.zeta;
        p.n = ScalarMap::affine(m.n0, m.n1);
        p.s = ScalarMap::affine(m.s0, m.s1);
        p.c0 = m.c0;
        return dirac_medium(gamma, p);
    }
    if (m.preset == "galilean") {
        MediumSpec spec;
        spec.m = 2;
        spec.a_entries = {analytic_constant(0.0), analytic_constant(std::sqrt(m.kappa_q))};
        spec.b_entries = {compose_map(gamma, ScalarMap::affine(m.n0, m.n1)),
                          compose_map(gamma, ScalarMap::affine(m.s0, m.s1))};
        spec.eta = analytic_constant(m.eta);
        spec.zeta = analytic_constant(m.zeta);
        return spec;
    }
    if (m.preset == "scalar") return scalar_medium(gamma, m.eta, m.zeta, m.n_floor);
    if (m.preset == "small_osc") {
        SmallOscFamily fam = SmallOscFamily::standard();
        fam.eta = m.eta;
        fam.zeta = m.zeta;
        MediumSpec spec;
        spec.m = 2;
        for (int r = 0; r < 1; ++r)
            for (int k = 0; k < 2; ++k)
                spec.a_entries.push_back(analytic_shift(
                    analytic_scale(fam.a1[r * 2 + k], m.lambda), fam.a0(r, k)));
        for (int k = 0; k < 2; ++k)
            spec.b_entries.push_back(
                analytic_shift(analytic_scale(fam.b1[k], m.lambda), fam.b0(k)));
        spec.eta = analytic_constant(m.eta);
        spec.zeta = analytic_constant(m.zeta);
        return spec;
    }
    throw ConfigError("unknown preset '" + m.preset + "'");
}

////////////////////////////////////////////////////////////////////////////////
// Commands
////////////////////////////////////////////////////////////////////////////////

namespace detail_cli {

inline void write_summary_header(io::JsonWriter& w, const RunConfig& cfg,
                                 const FormContext& ctx) {
    w.kv("command", cfg.command);
    w.kv("grid", ctx.grid().describe());
    w.kv("seed", cfg.seed);
    w.kv("oscillation", ctx.osc.value);
    w.kv("degenerate", ctx.degenerate);
    w.kv("eta_min", ctx.coeffs.eta_min);
    w.kv("stack_condition", ctx.coeffs.max_stack_condition);
}

inline EffectiveTensor tensor_for(const RunConfig& cfg, const FormContext& ctx) {
    if (ctx.grid().bc == Bc::natural) return effective_tensor_natural(ctx, cfg.solver());
    return effective_tensor(ctx, cfg.solver());
}

inline int run_tensor(const RunConfig& cfg) {
    const std::filesystem::path out(cfg.out);
    MediumSpec spec = medium_spec(cfg.medium, cfg.grid_dim);
    FormContext ctx = make_form_context(spec, cfg.grid(),
                                        FormOptions{.theta_samples = cfg.theta_samples,
                                                    .allow_seminorm = cfg.allow_seminorm});
    EffectiveTensor T = tensor_for(cfg, ctx);
    io::write_tensor(out / "tensor.json", T);
    io::write_tensor_csv(out / "rows.csv", T);

    // solution fields for the first basis column
    if (ctx.grid().dim == 2) {
        CellSolution sol = (ctx.grid().bc == Bc::natural)
                               ? solve_natural_problem(ctx, basis_tensor(2, ctx.m(), 0),
                                                       cfg.solver())
                               : solve_cell_problem(ctx, basis_tensor(2, ctx.m(), 0),
                                                    cfg.solver());
        io::write_field(out / "fields" / "potential0", sol.f.f, "potential", ctx.m());
        io::write_field(out / "fields" / "current0", sol.J.values, "current", ctx.m());
    }

    io::JsonWriter w;
    w.begin_object();
    write_summary_header(w, cfg, ctx);
    w.kv("kind", to_string(T.kind));
    w.kv("min_eigenvalue", T.min_eigenvalue);
    w.kv("positive_definite", T.positive_definite);
    w.end_object();
    io::write_atomic(out / "summary.json", w.str() + "\n");
    return 0;
}

inline int run_transport(const RunConfig& cfg) {
    const std::filesystem::path out(cfg.out);
    MediumSpec spec = medium_spec(cfg.medium, cfg.grid_dim);
    if (spec.m != 2) throw ConfigError("transport needs a two-current medium");
    FormContext ctx = make_form_context(spec, cfg.grid(),
                                        FormOptions{.theta_samples = cfg.theta_samples,
                                                    .allow_seminorm = cfg.allow_seminorm});
    EffectiveTensor T = tensor_for(cfg, ctx);
    io::write_tensor(out / "tensor.json", T);
    TransportSummary s = transport_summary(T);
    const double wf = wf_deviation(s, cfg.t0);

    io::JsonWriter w;
    w.begin_object();
    write_summary_header(w, cfg, ctx);
    auto block = [&](const char* name, const Eigen::MatrixXd& b) {
        w.begin_array(name);
        for (int i = 0; i < b.rows(); ++i)
            for (int j = 0; j < b.cols(); ++j) w.value(b(i, j));
        w.end_array();
    };
    block("sigma", s.sigma);
    block("alpha", s.alpha);
    block("alpha_tilde", s.alpha_tilde);
    block("kappa_tilde", s.kappa_tilde);
    block("kappa_measured", s.kappa);
    if (ctx.grid().dim == 1) w.kv("lorenz", s.lorenz);
    w.kv("t0", cfg.t0);
    w.kv("wf_deviation", wf);
    w.end_object();
    io::write_atomic(out / "summary.json", w.str() + "\n");

    std::ostringstream rows;
    rows << "quantity,i,j,value\n";
    auto rows_block = [&](const char* name, const Eigen::MatrixXd& b) {
        for (int i = 0; i < b.rows(); ++i)
            for (int j = 0; j < b.cols(); ++j)
                rows << name << "," << i << "," << j << "," << io::fmt17(b(i, j)) << "\n";
    };
    rows_block("sigma", s.sigma);
    rows_block("alpha", s.alpha);
    rows_block("alpha_tilde", s.alpha_tilde);
    rows_block("kappa_tilde", s.kappa_tilde);
    rows_block("kappa_measured", s.kappa);
    io::write_atomic(out / "rows.csv", rows.str());
    return 0;
}

inline int run_bounds(const RunConfig& cfg) {
    const std::filesystem::path out(cfg.out);
    MediumSpec spec = medium_spec(cfg.medium, cfg.grid_dim);
    FormContext ctx = make_form_context(spec, cfg.grid(),
                                        FormOptions{.theta_samples = cfg.theta_samples,
                                                    .allow_seminorm = cfg.allow_seminorm});
    EffectiveTensor T = effective_tensor(ctx, cfg.solver());
    io::write_tensor(out / "tensor.json", T);

    const int n = ctx.grid().dim * ctx.m();
    std::ostringstream rows;
    rows << "basis,bound,energy,margin\n";
    bool ok = true;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd c = basis_tensor(ctx.grid().dim, ctx.m(), i);
        const double bound = voigt_bound(ctx, c);
        const double energy = T.mat(i, i);
        const double margin = bound - energy;
        worst = std::min(worst, margin);
        ok = ok && (margin >= -1e-9);
        rows << i << "," << io::fmt17(bound) << "," << io::fmt17(energy) << ","
             << io::fmt17(margin) << "\n";
    }
    io::write_atomic(out / "rows.csv", rows.str());

    io::JsonWriter w;
    w.begin_object();
    write_summary_header(w, cfg, ctx);
    w.kv("worst_margin", worst);
    w.kv("bound_holds", ok);
    w.end_object();
    io::write_atomic(out / "summary.json", w.str() + "\n");
    return ok ? 0 : 1;
}

inline int run_study(const RunConfig& cfg, const StudyResult& res) {
    const std::filesystem::path out(cfg.out);
    io::write_study_csv(out / "rows.csv", res);
    io::write_atomic(out / "summary.json", io::study_json(res));
    return res.passed() ? 0 : 1;
}

////////////////////////////////////////////////////////////////////////////////
// check: the invariant suite
////////////////////////////////////////////////////////////////////////////////

struct CheckRow {
    std::string name;
    double value;
    double threshold;
    bool pass;
};

inline int run_check(const RunConfig& cfg) {
    std::vector<CheckRow> rows;
    auto expect_below = [&](const std::string& name, double value, double threshold) {
        rows.push_back({name, value, threshold, value <= threshold});
    };
    auto expect_true = [&](const std::string& name, bool ok) {
        rows.push_back({name, ok ? 1.0 : 0.0, 1.0, ok});
    };

    AnalyticScalar gamma = analytic_sum({analytic_sin(1, 0), analytic_sin(0, 1, M_PI / 2)});
    MediumSpec spec = dirac_medium(gamma);

    // dual-basis identities across presets and grid sizes
    for (int n : {16, 32}) {
        Grid g(2, {n, n}, Bc::periodic);
        CoefficientSet cs = dirac_preset(g, gamma);
        expect_below("dual_identities_dirac_" + std::to_string(n), dual_basis_residual(cs),
                     1e-10);
    }
    {
        Grid g1(1, {64, 1}, Bc::periodic);
        CoefficientSet cs = scalar_preset(g1, analytic_shift(analytic_sin(1, 0), 2.0), 1.0, 0.0);
        expect_below("dual_identities_scalar", dual_basis_residual(cs), 1e-10);
    }

    // oscillation oracle
    {
        Grid g(2, {32, 32}, Bc::periodic);
        std::vector<AnalyticScalar> b{analytic_sin(1, 0),
                                      analytic_shift(analytic_sin(0, 1, M_PI / 2), 2.0)};
        std::vector<AnalyticScalar> a{analytic_constant(1.0), analytic_constant(0.0)};
        CoefficientSet cs =
            make_coefficients(g, 2, a, b, analytic_constant(1.0), analytic_constant(0.0));
        expect_below("oscillation_pi2",
                     std::abs(oscillation(cs, cfg.theta_samples).value - M_PI * M_PI), 1e-5);
    }

    // discrete calculus
    {
        Grid g(2, {17, 17}, Bc::dirichlet);
        RngStream rng(cfg.seed);
        FieldArray phi(g, 1), V(g, 2);
        for (double& v : phi.data) v = rng.sym();
        for (double& v : V.data) v = rng.sym();
        apply_dirichlet_mask(g, phi.plane(0));
        for (int c = 0; c < 2; ++c) apply_dirichlet_mask(g, V.plane(c));
        FieldArray grad = gradient(g, phi.plane(0));
        FieldArray div = divergence(g, V);
        expect_below("summation_by_parts",
                     std::abs(inner_product(grad, V) + inner_product(phi, div)), 1e-11);
    }
    {
        Grid g(2, {16, 16}, Bc::periodic);
        PotentialField f(g, 2);
        RngStream rng(cfg.seed + 1);
        for (double& v : f.f.data) v = rng.sym();
        CurrentField J = potential_to_current(f, Eigen::MatrixXd::Zero(2, 2));
        double dv = 0.0;
        for (int k = 0; k < 2; ++k) {
            FieldArray col(g, 2);
            std::copy(J.values.plane(k * 2 + 0).begin(), J.values.plane(k * 2 + 0).end(),
                      col.plane(0).begin());
            std::copy(J.values.plane(k * 2 + 1).begin(), J.values.plane(k * 2 + 1).end(),
                      col.plane(1).begin());
            dv = std::max(dv, max_abs(divergence(g, col)));
        }
        expect_below("currents_divergence_free", dv, 1e-8);
    }

    // form and solver invariants on a 16^2 torus
    {
        Grid g(2, {16, 16}, Bc::periodic);
        FormContext ctx = make_form_context(spec, g,
                                            FormOptions{.theta_samples = cfg.theta_samples});
        PotentialField f(g, 2), h(g, 2);
        for (int k = 0; k < 2; ++k) {
            FieldArray vf = sample(g, random_fourier(hash_combine(cfg.seed, 10 + k), 3, 1.0));
            FieldArray vh = sample(g, random_fourier(hash_combine(cfg.seed, 20 + k), 3, 1.0));
            std::copy(vf.plane(0).begin(), vf.plane(0).end(), f.f.plane(k).begin());
            std::copy(vh.plane(0).begin(), vh.plane(0).end(), h.f.plane(k).begin());
        }
        Eigen::MatrixXd c(2, 2);
        c << 1.0, 0.25, -0.5, 1.0;
        CurrentField J = potential_to_current(f, c);
        CurrentField Jt = potential_to_current(h, Eigen::MatrixXd::Zero(2, 2));
        const double sym = std::abs(apply_form(ctx, J, Jt) - apply_form(ctx, Jt, J));
        expect_below("form_symmetry", sym / std::max(1.0, std::abs(apply_form(ctx, J, Jt))),
                     1e-12);

        FieldArray Af = normal_apply(ctx, f.f, Eigen::MatrixXd::Zero(2, 2));
        FieldArray Ah = normal_apply(ctx, h.f, Eigen::MatrixXd::Zero(2, 2));
        const double sa = std::abs(detail::dot_planes(ctx.wq, Af, h.f) -
                                   detail::dot_planes(ctx.wq, f.f, Ah));
        expect_below("normal_operator_self_adjoint",
                     sa / std::max(1.0, std::abs(detail::dot_planes(ctx.wq, Af, h.f))), 1e-10);

        EffectiveTensor T = effective_tensor(ctx, cfg.solver());
        expect_true("tensor_positive_definite", T.positive_definite);
        double energy_gap = 0.0;
        CellSolution sol = solve_cell_problem(ctx, c, cfg.solver());
        Eigen::VectorXd cv = Eigen::Map<const Eigen::VectorXd>(c.data(), 4);
        energy_gap = std::abs(sol.report.energy - cv.dot(T.mat * cv)) /
                     std::max(1.0, sol.report.energy);
        expect_below("energy_identity", energy_gap, 1e-9);
        expect_below("cell_residual", sol.report.relative_residual, cfg.tol);

        CurrentField Jg = potential_to_current(h, Eigen::MatrixXd::Zero(2, 2));
        expect_below("galerkin_orthogonality",
                     std::abs(apply_form(ctx, sol.J, Jg)) /
                         std::max(1.0, std::sqrt(apply_form(ctx, sol.J, sol.J)) *
                                           std::sqrt(apply_form(ctx, Jg, Jg))),
                     1e-8);

        StabilityEstimate est = estimate_stability_constant(ctx, 32, cfg.seed);
        expect_true("stability_constant_finite", std::isfinite(est.c_hat) && est.c_hat > 0.0);

        const std::filesystem::path out(cfg.out);
        io::write_field(out / "fields" / "check_current", sol.J.values, "current", 2);
        io::write_tensor(out / "tensor.json", T);
    }

    // reconstruction diagnostics need the 32^2 resolution of the acceptance
    // tolerances (the dual rows are rational in gamma, so their spectral tail
    // at 16^2 still sits near 1e-4)
    {
        Grid g(2, {32, 32}, Bc::periodic);
        FormContext ctx = make_form_context(spec, g,
                                            FormOptions{.theta_samples = cfg.theta_samples});
        EffectiveTensor T = effective_tensor(ctx, cfg.solver());
        Eigen::MatrixXd c = basis_tensor(2, 2, 0);
        CellSolution sol = solve_cell_problem(ctx, c, cfg.solver());
        Reconstruction rec = reconstruct_fields(ctx, sol.J);
        Eigen::VectorXd cv = Eigen::Map<const Eigen::VectorXd>(c.data(), 4);
        Eigen::VectorXd Ac = T.mat * cv;
        double mean_gap = 0.0;
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l)
                mean_gap = std::max(mean_gap,
                                    std::abs(rec.mean_neg_grad_psi(l, k) - Ac(k * 2 + l)));
        expect_below("homogenized_relation", mean_gap / Ac.norm(), 1e-6);
        expect_below("weak_conservation", weak_conservation_residual(ctx, rec), 1e-6);
    }

    // ordering chain on a small medium
    {
        OrderingOptions oo;
        oo.n = 16;
        oo.solver = cfg.solver();
        StudyResult ord = bc_ordering_check(spec, oo);
        expect_true("ordering_chain", ord.passed());
    }

    // 1D equivalence and transport arithmetic
    {
        Grid g1(1, {256, 1}, Bc::periodic);
        DiracParams p;
        p.eta = 1.0;
        MediumSpec spec1 = dirac_medium(analytic_sin(1, 0), p);
        FormContext ctx1 = make_form_context(spec1, g1);
        EffectiveTensor Tv = effective_tensor(ctx1, cfg.solver());
        EffectiveTensor Tq = exact_1d_tensor(ctx1.coeffs);
        expect_below("exact_1d_equivalence",
                     (Tv.mat - Tq.mat).cwiseAbs().maxCoeff() / Tq.mat.cwiseAbs().maxCoeff(),
                     1e-10);
        for (int i = 0; i < 2; ++i) {
            Eigen::MatrixXd c1 = basis_tensor(1, 2, i);
            expect_below("voigt_1d_saturated_" + std::to_string(i),
                         std::abs(voigt_bound(ctx1, c1) - Tq.mat(i, i)), 1e-10);
        }
        Eigen::Matrix2d mk;
        mk << 2.0, 1.0, 1.0, 4.0;
        EffectiveTensor Tk;
        Tk.dim = 1;
        Tk.m = 2;
        Tk.mat = mk;
        Tk.finalize();
        expect_below("measured_kappa_arithmetic",
                     std::abs(measured_kappa(Tk)(0, 0) - 0.25), 1e-15);
        const double base = lorenz_ratio(Tk);
        double ldrift = 0.0;
        for (double sc : {0.5, 2.0, 10.0}) {
            EffectiveTensor Ts = Tk;
            Ts.mat *= sc;
            Ts.finalize();
            ldrift = std::max(ldrift, std::abs(lorenz_ratio(Ts) - base));
        }
        expect_below("lorenz_scale_invariance", ldrift, 1e-12);
        TransportSummary swf;
        swf.sigma = Eigen::Matrix2d::Identity();
        swf.kappa_tilde = (M_PI * M_PI * cfg.t0 / 3.0) * Eigen::Matrix2d::Identity();
        expect_below("wf_deviation_zero", wf_deviation(swf, cfg.t0), 1e-15);
    }

    // report
    const std::filesystem::path out(cfg.out);
    std::ostringstream csv;
    csv << "check,value,threshold,pass\n";
    bool all = true;
    for (const auto& r : rows) {
        csv << r.name << "," << io::fmt17(r.value) << "," << io::fmt17(r.threshold) << ","
            << (r.pass ? 1 : 0) << "\n";
        all = all && r.pass;
    }
    io::write_atomic(out / "rows.csv", csv.str());
    io::JsonWriter w;
    w.begin_object();
    w.kv("command", std::string("check"));
    w.kv("seed", cfg.seed);
    w.kv("checks", rows.size());
    w.kv("passed", all);
    w.end_object();
    io::write_atomic(out / "summary.json", w.str() + "\n");
    for (const auto& r : rows)
        if (!r.pass)
            std::cerr << "check failed: " << r.name << " value " << io::fmt17(r.value)
                      << " threshold " << io::fmt17(r.threshold) << "\n";
    return all ? 0 : 1;
}

} // namespace detail_cli

////////////////////////////////////////////////////////////////////////////////
// Dispatch
////////////////////////////////////////////////////////////////////////////////

inline int run(const RunConfig& cfg) {
    using namespace detail_cli;
    if (cfg.command == "tensor") return run_tensor(cfg);
    if (cfg.command == "transport") return run_transport(cfg);
    if (cfg.command == "bounds") return run_bounds(cfg);
    if (cfg.command == "sweep-lambda") {
        SmallOscFamily fam = SmallOscFamily::standard();
        fam.eta = cfg.medium.eta;
        fam.zeta = cfg.medium.zeta;
        SmallOscOptions o;
        o.lambdas = cfg.sweep.lambdas;
        o.n = cfg.grid_n[0];
        o.solver = cfg.solver();
        o.slope_tol = cfg.sweep.slope_tol;
        return run_study(cfg, small_osc_sweep(fam, o));
    }
    if (cfg.command == "sweep-eps") {
        EpsStudyOptions o;
        o.eps_list = cfg.sweep.eps;
        o.points_per_cell = cfg.sweep.points_per_cell;
        o.cell_resolution = cfg.sweep.cell_resolution;
        o.min_reduction = cfg.sweep.min_reduction;
        o.tensor_gap = cfg.sweep.tensor_gap;
        o.allow_seminorm = cfg.allow_seminorm;
        o.solver = cfg.solver();
        return run_study(cfg, eps_convergence_study(medium_spec(cfg.medium, 2), o));
    }
    if (cfg.command == "ordering") {
        OrderingOptions o;
        o.n = cfg.grid_n[0];
        o.solver = cfg.solver();
        return run_study(cfg, bc_ordering_check(medium_spec(cfg.medium, 2), o));
    }
    if (cfg.command == "random-subadd") {
        SubadditivityOptions o;
        o.seed = cfg.seed;
        o.sizes = cfg.sweep.sizes;
        o.partition_sizes = cfg.sweep.partition_sizes;
        o.samples = cfg.sweep.samples;
        o.points_per_cell = cfg.sweep.points_per_cell;
        o.radius = cfg.sweep.radius;
        o.amplitude = cfg.sweep.amplitude;
        o.dirac.eta = cfg.medium.eta;
        o.dirac.zeta = cfg.medium.zeta;
        o.solver = cfg.solver();
        o.threads = cfg.effective_threads();
        return run_study(cfg, subadditivity_mc(o));
    }
    if (cfg.command == "check") return run_check(cfg);
    throw ConfigError("unknown command '" + cfg.command + "'");
}

inline int cli_main(int argc, char** argv) {
    CLI::App app{"homogenized thermoelectric transport for hydrodynamic electron fluids"};
    std::string command, config_path, out_dir;
    std::uint64_t seed = 0;
    bool have_seed = false, allow_seminorm = false;
    int threads = -1;
    double tol = -1.0;
    app.add_option("command", command,
                   "tensor | transport | bounds | sweep-lambda | sweep-eps | ordering | "
                   "random-subadd | check");
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker thread count (0 = hardware)");
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    app.add_option("--tol", tol, "CG relative residual tolerance");
    app.add_flag("--allow-seminorm", allow_seminorm,
                 "permit zero-oscillation (seminorm) media");

    try {
        app.parse(argc, argv);
        have_seed = seed_opt->count() > 0;
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (!command.empty()) cfg.command = command;
        if (!out_dir.empty()) cfg.out = out_dir;
        if (threads >= 0) cfg.threads = threads;
        if (have_seed) cfg.seed = seed;
        if (tol > 0.0) cfg.tol = tol;
        if (allow_seminorm) cfg.allow_seminorm = true;
        if (config_path.empty() && command.empty())
            throw ConfigError("no command given (and no config file)");
        if (!std::set<std::string>{"tensor", "transport", "bounds", "sweep-lambda", "sweep-eps",
                                   "ordering", "random-subadd", "check"}
                 .count(cfg.command))
            throw ConfigError("unknown command '" + cfg.command + "'");
        return run(cfg);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace hydrohom

#endif
