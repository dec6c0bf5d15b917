////////////////////////////////////////////////////////////////////////////////
// solver.hpp
////////////////////////////////////////////////////////////////////////////////
// Cell problems and effective tensors.
//
//   a_sharp / a_dirichlet : minimize a(c + curl f, c + curl f) over admissible
//                           potentials at fixed mean current c; the minimal
//                           energy per volume is the quadratic form (c, A c).
//   b_natural             : maximize -a(J,J)/2 + <p, J> over unconstrained
//                           potentials (J = curl f, boundary free).
//   b_sharp               : the same prescribed-profile problem posed on the
//                           torus over joint unknowns (c, f); equals the
//                           inverse of a_sharp up to solver tolerance.
//
// Off-diagonal entries always come from polarization of fresh minimal
// energies, q(ei + ej) - q(ei) - q(ej), never from solver internals. A dense
// small-problem oracle (full assembly of the normal operator, eigenvalue
// pseudo-inverse) provides the independent cross-check for the CG path.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_SOLVER_HPP
#define HYDROHOM_SOLVER_HPP

#include <future>

#include <Eigen/Eigenvalues>

#include "hydrohom/cg.hpp"

namespace hydrohom {

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    double energy = 0.0; // a(c + J, c + J)
    bool degenerate = false;
};

struct CellSolution {
    PotentialField f;
    CurrentField J;
    SolveReport report;
};

struct SolverOptions {
    CgOptions cg;
    int threads = 1;
};

enum class TensorKind { a_sharp, a_dirichlet, b_natural, b_sharp };

inline const char* to_string(TensorKind k) {
    switch (k) {
        case TensorKind::a_sharp: return "a_sharp";
        case TensorKind::a_dirichlet: return "a_dirichlet";
        case TensorKind::b_natural: return "b_natural";
        case TensorKind::b_sharp: return "b_sharp";
    }
    return "?";
}

struct EffectiveTensor {
    Eigen::MatrixXd mat; // (D*m) x (D*m), flattening index k*D + l
    TensorKind kind = TensorKind::a_sharp;
    Bc bc = Bc::periodic;
    std::string grid_desc;
    int dim = 0, m = 0;
    std::vector<double> residuals; // per solved column
    double min_eigenvalue = 0.0;
    bool positive_definite = false;

    void finalize() {
        mat = 0.5 * (mat + mat.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
        min_eigenvalue = es.eigenvalues().minCoeff();
        positive_definite = min_eigenvalue > 0.0;
    }
};

inline Eigen::MatrixXd basis_tensor(int D, int m, int index) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(D, m);
    c(index % D, index / D) = 1.0;
    return c;
}

namespace detail {

inline double dot_planes(const std::vector<double>& wq, const FieldArray& a,
                         const FieldArray& b) {
    double acc = 0.0;
    for (int c = 0; c < a.comps; ++c) {
        auto pa = a.plane(c);
        auto pb = b.plane(c);
        double s = 0.0;
        for (std::size_t i = 0; i < pa.size(); ++i) s += wq[i] * pa[i] * pb[i];
        acc += s;
    }
    return acc;
}

inline int max_iterations(const FormContext& ctx, const CgOptions& opt) {
    const double dof = static_cast<double>(ctx.m()) * ctx.grid().npoints();
    return std::max(16, static_cast<int>(opt.max_iter_factor * std::sqrt(dof)));
}

// Run several energy evaluations, optionally in parallel, in index order.
template <typename Fn>
inline std::vector<std::pair<double, SolveReport>> run_indexed(int count, int threads, Fn&& fn) {
    std::vector<std::pair<double, SolveReport>> out(count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::future<std::pair<double, SolveReport>>> futures(count);
    int inflight = 0, next = 0, done = 0;
    // simple bounded scheduler preserving index order of the results
    while (done < count) {
        while (next < count && inflight < threads) {
            futures[next] = std::async(std::launch::async, fn, next);
            ++next;
            ++inflight;
        }
        futures[done].wait();
        out[done] = futures[done].get();
        ++done;
        --inflight;
    }
    return out;
}

} // namespace detail

// Solve a(c + J, Jt) = 0 for all admissible Jt (periodic or Dirichlet
// boundary conditions inherited from the context grid).
inline CellSolution solve_cell_problem(const FormContext& ctx, const Eigen::MatrixXd& c,
                                       const SolverOptions& opt = {},
                                       const SymbolPreconditioner* prec = nullptr) {
    const Grid& g = ctx.grid();
    if (g.bc == Bc::natural)
        throw Error("cell problems take periodic or dirichlet grids; use the natural solver");
    ctx.require_solvable();

    CellSolution sol;
    sol.f = PotentialField(g, ctx.m());
    sol.report.degenerate = ctx.degenerate;
    if (g.dim == 1) { // no potential degrees of freedom: J = c is optimal
        sol.J = potential_to_current(sol.f, c);
        sol.report.energy = form_energy(ctx, c, nullptr);
        return sol;
    }

    FieldArray zero(g, ctx.m());
    FieldArray rhs = normal_apply(ctx, zero, c);
    rhs *= -1.0;

    SymbolPreconditioner local;
    if (!prec && opt.cg.precondition) {
        local = SymbolPreconditioner(ctx);
        prec = &local;
    }
    const Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(g.dim, ctx.m());
    auto A = [&](const FieldArray& x) { return normal_apply(ctx, x, c0); };
    auto M = [&](const FieldArray& r) {
        return (prec && prec->active() && opt.cg.precondition) ? prec->apply(r) : r;
    };
    auto dot = [&](const FieldArray& a, const FieldArray& b) {
        return detail::dot_planes(ctx.wq, a, b);
    };

    CgResult cg = cg_solve(A, M, dot, rhs, sol.f.f, detail::max_iterations(ctx, opt.cg),
                           opt.cg.tol, &ctx);
    if (!cg.converged) {
        if (ctx.degenerate)
            throw DegenerateForm("CG stagnated on a zero-oscillation medium");
        throw NoConvergence("cell problem did not reach the requested residual", cg.iterations,
                            cg.relative_residual);
    }
    sol.report.iterations = cg.iterations;
    sol.report.relative_residual = cg.relative_residual;
    sol.J = potential_to_current(sol.f, c);
    sol.report.energy = form_energy(ctx, c, &sol.f.f);
    return sol;
}

// Natural (free-boundary) problem: a(J, Jt) = <p, Jt> over J = curl f with
// unconstrained f. Returns J and the report; energy is a(J, J).
inline CellSolution solve_natural_problem(const FormContext& ctx, const Eigen::MatrixXd& p,
                                          const SolverOptions& opt = {},
                                          const SymbolPreconditioner* prec = nullptr) {
    const Grid& g = ctx.grid();
    if (g.bc != Bc::natural) throw Error("natural problems need a natural-boundary grid");
    if (g.dim == 1)
        throw DegenerateForm("no divergence-free potentials exist in D = 1: b_natural is void");
    ctx.require_solvable();

    // rhs = H^{-1} P^T (H p)
    FieldArray hp(g, g.dim * ctx.m());
    for (int k = 0; k < ctx.m(); ++k)
        for (int l = 0; l < g.dim; ++l) {
            auto pl = hp.plane(k * g.dim + l);
            for (std::size_t x = 0; x < pl.size(); ++x) pl[x] = ctx.wq[x] * p(l, k);
        }
    FieldArray rhs = curl_transpose(g, hp, ctx.m());
    for (int k = 0; k < ctx.m(); ++k) {
        auto pl = rhs.plane(k);
        for (std::size_t x = 0; x < pl.size(); ++x) pl[x] /= ctx.wq[x];
    }

    SymbolPreconditioner local;
    if (!prec && opt.cg.precondition) {
        local = SymbolPreconditioner(ctx);
        prec = &local;
    }
    const Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(g.dim, ctx.m());
    auto A = [&](const FieldArray& x) { return normal_apply(ctx, x, c0); };
    auto M = [&](const FieldArray& r) {
        return (prec && prec->active() && opt.cg.precondition) ? prec->apply(r) : r;
    };
    auto dot = [&](const FieldArray& a, const FieldArray& b) {
        return detail::dot_planes(ctx.wq, a, b);
    };

    CellSolution sol;
    sol.f = PotentialField(g, ctx.m());
    sol.report.degenerate = ctx.degenerate;
    CgResult cg = cg_solve(A, M, dot, rhs, sol.f.f, detail::max_iterations(ctx, opt.cg),
                           opt.cg.tol, &ctx);
    if (!cg.converged)
        throw NoConvergence("natural problem did not reach the requested residual",
                            cg.iterations, cg.relative_residual);
    sol.report.iterations = cg.iterations;
    sol.report.relative_residual = cg.relative_residual;
    sol.J = potential_to_current(sol.f, c0);
    sol.report.energy = form_energy(ctx, c0, &sol.f.f);
    return sol;
}

////////////////////////////////////////////////////////////////////////////////
// Extended (c, f) solve for the periodic prescribed-profile problem
////////////////////////////////////////////////////////////////////////////////

struct ExtVec {
    Eigen::MatrixXd c;
    FieldArray f;
    ExtVec& operator+=(const ExtVec& o) {
        c += o.c;
        f += o.f;
        return *this;
    }
    ExtVec& operator*=(double s) {
        c *= s;
        f *= s;
        return *this;
    }
    void axpy(double alpha, const ExtVec& o) {
        c += alpha * o.c;
        f.axpy(alpha, o.f);
    }
};

namespace detail {

// Pairing of a trial with a constant test tensor:
//   M(l,k) = integral [ (J w^T) w ]_{lk} + eps^2 [ (eta G)_{pl} du_k/dx_p
//                                                 + zeta d du_k/dx_l ]
inline Eigen::MatrixXd background_pairing(const FormContext& ctx, const TrialPieces& tp) {
    const Grid& qg = ctx.qgrid();
    const CoefficientSet& qc = ctx.qcoeffs();
    const auto& wq = ctx.qweights();
    const int D = qg.dim, m = ctx.m();
    const double eps2 = ctx.epsilon * ctx.epsilon;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(D, m);
    Eigen::Matrix2d G;
    double d;
    for (std::size_t x = 0; x < qg.npoints(); ++x) {
        total_grad_at(ctx, tp, x, G, d);
        for (int l = 0; l < D; ++l)
            for (int k = 0; k < m; ++k) {
                double v = 0.0;
                for (int r = 0; r < m - 1; ++r) {
                    double jw = 0.0;
                    for (int j = 0; j < m; ++j)
                        jw += (tp.c(l, j) + tp.Jf.at(j * D + l, x)) * qc.w.at(r * m + j, x);
                    v += jw * qc.w.at(r * m + k, x);
                }
                double uterm = 0.0;
                for (int p = 0; p < D; ++p) {
                    double etaG = 0.0;
                    for (int q = 0; q < D; ++q) etaG += qc.eta.at(p * D + q, x) * G(q, l);
                    uterm += etaG * qc.grad_u.at(p * m + k, x);
                }
                uterm += qc.zeta.at(0, x) * d * qc.grad_u.at(l * m + k, x);
                M(l, k) += wq[x] * (v + eps2 * uterm);
            }
    }
    return M;
}

} // namespace detail

struct ExtendedSolution {
    Eigen::MatrixXd c;
    PotentialField f;
    SolveReport report;
};

// Find (c, J) on the torus with a(c + J, ct + Jt) = <p, ct> for all trials.
inline ExtendedSolution solve_profile_problem(const FormContext& ctx, const Eigen::MatrixXd& p,
                                              const SolverOptions& opt = {}) {
    const Grid& g = ctx.grid();
    if (g.bc != Bc::periodic) throw Error("the joint (c, f) problem is posed on the torus");
    ctx.require_solvable();
    const int D = g.dim, m = ctx.m();
    const double vol = g.volume();

    SymbolPreconditioner fprec(ctx);
    // exact c-block of the operator at f = 0, for block-Jacobi preconditioning
    const int n = D * m;
    Eigen::MatrixXd B(n, n);
    {
        std::vector<TrialPieces> basis_pieces;
        for (int i = 0; i < n; ++i)
            basis_pieces.push_back(make_pieces(ctx, basis_tensor(D, m, i), nullptr));
        for (int i = 0; i < n; ++i) {
            Eigen::MatrixXd Mi = detail::background_pairing(ctx, basis_pieces[i]) / vol;
            for (int j = 0; j < n; ++j) B(j, i) = Mi(j % D, j / D);
        }
        B = 0.5 * (B + B.transpose()).eval();
    }
    Eigen::MatrixXd Binv = B.inverse();

    auto A = [&](const ExtVec& v) {
        ExtVec out;
        out.f = normal_apply(ctx, v.f, v.c);
        TrialPieces tp = make_pieces(ctx, v.c, &v.f);
        out.c = detail::background_pairing(ctx, tp) / vol;
        return out;
    };
    auto M = [&](const ExtVec& r) {
        ExtVec out;
        out.f = (opt.cg.precondition && fprec.active()) ? fprec.apply(r.f) : r.f;
        Eigen::VectorXd rc(n);
        for (int i = 0; i < n; ++i) rc(i) = r.c(i % D, i / D);
        Eigen::VectorXd zc = opt.cg.precondition ? Eigen::VectorXd(Binv * rc) : rc;
        out.c = Eigen::MatrixXd::Zero(D, m);
        for (int i = 0; i < n; ++i) out.c(i % D, i / D) = zc(i);
        return out;
    };
    auto dot = [&](const ExtVec& a, const ExtVec& b) {
        return vol * (a.c.array() * b.c.array()).sum() + detail::dot_planes(ctx.wq, a.f, b.f);
    };

    ExtVec rhs{p, FieldArray(g, m)};
    ExtVec x{Eigen::MatrixXd::Zero(D, m), FieldArray(g, m)};
    CgResult cg = cg_solve(A, M, dot, rhs, x, detail::max_iterations(ctx, opt.cg), opt.cg.tol,
                           &ctx);
    if (!cg.converged) {
        if (ctx.degenerate) throw DegenerateForm("profile problem stagnated on a seminorm");
        throw NoConvergence("profile problem did not reach the requested residual",
                            cg.iterations, cg.relative_residual);
    }
    ExtendedSolution sol;
    sol.c = x.c;
    sol.f = PotentialField(g, m);
    sol.f.f = x.f;
    sol.report.iterations = cg.iterations;
    sol.report.relative_residual = cg.relative_residual;
    sol.report.energy = form_energy(ctx, x.c, &x.f);
    sol.report.degenerate = ctx.degenerate;
    return sol;
}

////////////////////////////////////////////////////////////////////////////////
// Effective tensors by polarization
////////////////////////////////////////////////////////////////////////////////

namespace detail {

template <typename EnergyFn>
EffectiveTensor assemble_tensor(const FormContext& ctx, TensorKind kind, int threads,
                                EnergyFn&& energy_of) {
    const int D = ctx.grid().dim, m = ctx.m();
    const int n = D * m;
    // work items: n basis tensors followed by the distinct pair sums
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

    auto eval = [&](int idx) -> std::pair<double, SolveReport> {
        Eigen::MatrixXd c;
        if (idx < n)
            c = basis_tensor(D, m, idx);
        else
            c = basis_tensor(D, m, pairs[idx - n].first) +
                basis_tensor(D, m, pairs[idx - n].second);
        return energy_of(c);
    };
    auto results = run_indexed(n + static_cast<int>(pairs.size()), threads, eval);

    EffectiveTensor T;
    T.kind = kind;
    T.bc = ctx.grid().bc;
    T.grid_desc = ctx.grid().describe();
    T.dim = D;
    T.m = m;
    T.mat = Eigen::MatrixXd::Zero(n, n);
    const double vol = ctx.grid().volume();
    for (int i = 0; i < n; ++i) {
        T.mat(i, i) = results[i].first / vol;
        T.residuals.push_back(results[i].second.relative_residual);
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        auto [i, j] = pairs[k];
        const double qij = results[n + k].first / vol;
        T.mat(i, j) = T.mat(j, i) = 0.5 * (qij - T.mat(i, i) - T.mat(j, j));
        T.residuals.push_back(results[n + k].second.relative_residual);
    }
    T.finalize();
    return T;
}

} // namespace detail

// a_sharp (periodic grid) or a_dirichlet (Dirichlet grid), by the minimal
// energies of the cell problems.
inline EffectiveTensor effective_tensor(const FormContext& ctx, const SolverOptions& opt = {}) {
    const Grid& g = ctx.grid();
    if (g.bc == Bc::natural) throw Error("use effective_tensor_natural on natural grids");
    ctx.require_solvable();
    SymbolPreconditioner prec = (g.dim == 2 && opt.cg.precondition)
                                    ? SymbolPreconditioner(ctx)
                                    : SymbolPreconditioner();
    const TensorKind kind =
        (g.bc == Bc::periodic) ? TensorKind::a_sharp : TensorKind::a_dirichlet;
    return detail::assemble_tensor(ctx, kind, opt.threads, [&](const Eigen::MatrixXd& c) {
        CellSolution sol = solve_cell_problem(ctx, c, opt, prec.active() ? &prec : nullptr);
        return std::pair{sol.report.energy, sol.report};
    });
}

// b_natural: (p, B p) = a(J, J)/|X| at the free-boundary maximizer.
inline EffectiveTensor effective_tensor_natural(const FormContext& ctx,
                                                const SolverOptions& opt = {}) {
    ctx.require_solvable();
    SymbolPreconditioner prec =
        opt.cg.precondition ? SymbolPreconditioner(ctx) : SymbolPreconditioner();
    return detail::assemble_tensor(ctx, TensorKind::b_natural, opt.threads,
                                   [&](const Eigen::MatrixXd& p) {
                                       CellSolution sol = solve_natural_problem(
                                           ctx, p, opt, prec.active() ? &prec : nullptr);
                                       return std::pair{sol.report.energy, sol.report};
                                   });
}

// b_sharp from the joint (c, f) solves on the torus.
inline EffectiveTensor effective_tensor_natural_periodic(const FormContext& ctx,
                                                         const SolverOptions& opt = {}) {
    ctx.require_solvable();
    return detail::assemble_tensor(ctx, TensorKind::b_sharp, opt.threads,
                                   [&](const Eigen::MatrixXd& p) {
                                       ExtendedSolution sol = solve_profile_problem(ctx, p, opt);
                                       return std::pair{sol.report.energy, sol.report};
                                   });
}

////////////////////////////////////////////////////////////////////////////////
// Dense oracle
////////////////////////////////////////////////////////////////////////////////

struct DenseOperator {
    Eigen::MatrixXd G;               // Gram matrix of the normal operator
    std::vector<std::size_t> dofs;   // node index per degree of freedom
    std::vector<int> dof_plane;      // stream-function plane per dof
    Grid grid;
    int m = 0;
};

// Full assembly of <e_i, A e_j> over the free stream-function DOFs.
inline DenseOperator assemble_dense_operator(const FormContext& ctx,
                                             std::size_t max_dofs = 4096) {
    const Grid& g = ctx.grid();
    if (g.dim != 2) throw Error("the dense oracle needs D = 2 (D = 1 has no DOFs)");
    DenseOperator op;
    op.grid = g;
    op.m = ctx.m();
    for (int k = 0; k < ctx.m(); ++k)
        for (int i0 = 0; i0 < g.n[0]; ++i0)
            for (int i1 = 0; i1 < g.n[1]; ++i1) {
                if (g.bc == Bc::dirichlet && !dirichlet_free(g, i0, i1)) continue;
                op.dofs.push_back(g.index(i0, i1));
                op.dof_plane.push_back(k);
            }
    const std::size_t n = op.dofs.size();
    if (n > max_dofs)
        throw TooLarge("dense oracle limited to " + std::to_string(max_dofs) + " DOFs, got " +
                       std::to_string(n));
    op.G.resize(n, n);
    const Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(g.dim, ctx.m());
    FieldArray e(g, ctx.m());
    for (std::size_t j = 0; j < n; ++j) {
        e.fill(0.0);
        e.at(op.dof_plane[j], op.dofs[j]) = 1.0;
        FieldArray Ae = normal_apply(ctx, e, c0);
        for (std::size_t i = 0; i < n; ++i)
            op.G(i, j) = ctx.wq[op.dofs[i]] * Ae.at(op.dof_plane[i], op.dofs[i]);
    }
    return op;
}

// Cell problem via dense eigenvalue pseudo-inverse; identical contract to
// solve_cell_problem.
inline CellSolution dense_oracle_solve(const FormContext& ctx, const DenseOperator& op,
                                       const Eigen::MatrixXd& c) {
    const Grid& g = ctx.grid();
    const std::size_t n = op.dofs.size();
    FieldArray zero(g, ctx.m());
    FieldArray r = normal_apply(ctx, zero, c);
    Eigen::VectorXd b(n);
    for (std::size_t i = 0; i < n; ++i)
        b(i) = ctx.wq[op.dofs[i]] * r.at(op.dof_plane[i], op.dofs[i]);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (op.G + op.G.transpose()));
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    const double cut = std::max(lmax, 1.0) * 1e-12 * static_cast<double>(n);
    Eigen::VectorXd proj = es.eigenvectors().transpose() * (-b);
    for (Eigen::Index i = 0; i < proj.size(); ++i)
        proj(i) = (es.eigenvalues()(i) > cut) ? proj(i) / es.eigenvalues()(i) : 0.0;
    Eigen::VectorXd x = es.eigenvectors() * proj;

    CellSolution sol;
    sol.f = PotentialField(g, ctx.m());
    for (std::size_t i = 0; i < n; ++i) sol.f.f.at(op.dof_plane[i], op.dofs[i]) = x(i);
    sol.J = potential_to_current(sol.f, c);
    sol.report.energy = form_energy(ctx, c, &sol.f.f);
    sol.report.relative_residual = (op.G * x + b).norm() / std::max(b.norm(), 1e-300);
    return sol;
}

inline EffectiveTensor dense_oracle_tensor(const FormContext& ctx, std::size_t max_dofs = 4096) {
    ctx.require_solvable();
    DenseOperator op = assemble_dense_operator(ctx, max_dofs);
    const TensorKind kind =
        (ctx.grid().bc == Bc::periodic) ? TensorKind::a_sharp : TensorKind::a_dirichlet;
    return detail::assemble_tensor(ctx, kind, 1, [&](const Eigen::MatrixXd& c) {
        CellSolution sol = dense_oracle_solve(ctx, op, c);
        return std::pair{sol.report.energy, sol.report};
    });
}

////////////////////////////////////////////////////////////////////////////////
// Reconstruction of the physical fields
////////////////////////////////////////////////////////////////////////////////

struct Reconstruction {
    FieldArray v;              // velocity J u^T, D planes
    FieldArray grad_psi;       // D*m planes, plane(k*D + l); equals -A J
    FieldArray grad_psi_proj;  // curl-free (Helmholtz) projection, periodic grids
    double curl_residual = 0.0;
    Eigen::MatrixXd mean_neg_grad_psi; // columnwise means of -grad psi
};

// grad psi = -(J w^T w + L(J u^T) u) with L v = -div(eta grad v) - grad(zeta div v).
inline Reconstruction reconstruct_fields(const FormContext& ctx, const CurrentField& J) {
    const Grid& g = ctx.grid();
    const CoefficientSet& cs = ctx.coeffs;
    const int D = g.dim, m = ctx.m();
    const std::size_t N = g.npoints();
    Reconstruction rec;

    rec.v = FieldArray(g, D);
    for (int l = 0; l < D; ++l) {
        auto vp = rec.v.plane(l);
        for (int k = 0; k < m; ++k) {
            auto jp = J.values.plane(k * D + l);
            auto up = cs.u.plane(k);
            for (std::size_t x = 0; x < N; ++x) vp[x] += jp[x] * up[x];
        }
    }

    // L v, componentwise
    FieldArray Lv(g, D);
    {
        FieldArray divv = divergence(g, rec.v);
        FieldArray zdiv(g, 1);
        for (std::size_t x = 0; x < N; ++x) zdiv.at(0, x) = cs.zeta.at(0, x) * divv.at(0, x);
        std::vector<double> tmp(N);
        for (int l = 0; l < D; ++l) {
            FieldArray gl = gradient(g, rec.v.plane(l));
            auto out = Lv.plane(l);
            for (int p = 0; p < D; ++p) {
                // (eta grad v)_p
                std::vector<double> flux(N, 0.0);
                for (int q = 0; q < D; ++q) {
                    auto gq = gl.plane(q);
                    for (std::size_t x = 0; x < N; ++x)
                        flux[x] += cs.eta.at(p * D + q, x) * gq[x];
                }
                deriv(g, flux, tmp, p);
                for (std::size_t x = 0; x < N; ++x) out[x] -= tmp[x];
            }
            deriv(g, zdiv.plane(0), tmp, l);
            for (std::size_t x = 0; x < N; ++x) out[x] -= tmp[x];
        }
    }

    rec.grad_psi = FieldArray(g, D * m);
    rec.mean_neg_grad_psi = Eigen::MatrixXd::Zero(D, m);
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < D; ++l) {
            auto gp = rec.grad_psi.plane(k * D + l);
            auto lv = Lv.plane(l);
            auto up = cs.u.plane(k);
            for (std::size_t x = 0; x < N; ++x) {
                double jww = 0.0;
                for (int r = 0; r < m - 1; ++r) {
                    double jw = 0.0;
                    for (int j = 0; j < m; ++j) jw += J.values.at(j * D + l, x) * cs.w.at(r * m + j, x);
                    jww += jw * cs.w.at(r * m + k, x);
                }
                gp[x] = -(jww + lv[x] * up[x]);
            }
            rec.mean_neg_grad_psi(l, k) = -mean_of_plane(rec.grad_psi, k * D + l);
        }

    // Helmholtz projection onto curl-free fields (periodic spectral path);
    // on FD grids report the antisymmetric part of the Jacobian instead.
    rec.grad_psi_proj = rec.grad_psi;
    if (D == 2 && g.spectral()) {
        double dist2 = 0.0;
        for (int k = 0; k < m; ++k) {
            fft::Spectrum s0 = fft::forward(g, rec.grad_psi.plane(k * D + 0));
            fft::Spectrum s1 = fft::forward(g, rec.grad_psi.plane(k * D + 1));
            for (int k0 = 0; k0 < s0.n0; ++k0)
                for (int k1 = 0; k1 < s0.cols(); ++k1) {
                    const double ka = fft::wavenumber(k0, s0.n0, g.length[0]);
                    const double kb = fft::wavenumber(k1, s0.n1, g.length[1]);
                    const double k2 = ka * ka + kb * kb;
                    if (k2 == 0.0) continue; // constants are gradients
                    const std::complex<double> dotk = ka * s0.at(k0, k1) + kb * s1.at(k0, k1);
                    s0.at(k0, k1) = ka * dotk / k2;
                    s1.at(k0, k1) = kb * dotk / k2;
                }
            fft::inverse(s0, rec.grad_psi_proj.plane(k * D + 0));
            fft::inverse(s1, rec.grad_psi_proj.plane(k * D + 1));
        }
        FieldArray diff = rec.grad_psi;
        diff -= rec.grad_psi_proj;
        dist2 = inner_product(diff, diff);
        rec.curl_residual = std::sqrt(dist2);
    } else if (D == 2) {
        double acc = 0.0;
        std::vector<double> d1(N), d2(N);
        for (int k = 0; k < m; ++k) {
            deriv(g, rec.grad_psi.plane(k * D + 1), d1, 0);
            deriv(g, rec.grad_psi.plane(k * D + 0), d2, 1);
            const auto wq = quadrature_weights(g);
            for (std::size_t x = 0; x < N; ++x) {
                const double curl = d1[x] - d2[x];
                acc += wq[x] * curl * curl;
            }
        }
        rec.curl_residual = std::sqrt(acc);
    }
    return rec;
}

// Weak residual of the conservation law against smooth test functions:
// max over a small family of |<grad phi, J_rec column>| / (norms), with
// J_rec = -(grad psi) a^T a + v b rebuilt from the projected gradient.
inline double weak_conservation_residual(const FormContext& ctx, const Reconstruction& rec) {
    const Grid& g = ctx.grid();
    const CoefficientSet& cs = ctx.coeffs;
    const int D = g.dim, m = ctx.m();
    const std::size_t N = g.npoints();

    FieldArray Jrec(g, D * m);
    for (std::size_t x = 0; x < N; ++x) {
        for (int l = 0; l < D; ++l)
            for (int k = 0; k < m; ++k) {
                double ata = 0.0; // (grad psi a^T a)_{lk}
                for (int j = 0; j < m; ++j) {
                    double aa = 0.0;
                    for (int r = 0; r < m - 1; ++r)
                        aa += cs.a.at(r * m + j, x) * cs.a.at(r * m + k, x);
                    ata += rec.grad_psi_proj.at(j * D + l, x) * aa;
                }
                Jrec.at(k * D + l, x) = -ata + rec.v.at(l, x) * cs.b.at(k, x);
            }
    }

    double worst = 0.0;
    const auto wq = quadrature_weights(g);
    for (int t = 1; t <= 3; ++t) {
        AnalyticScalar phi = (g.dim == 2) ? analytic_sin(t, t == 2 ? -1 : 1)
                                          : analytic_sin(t, 0);
        FieldArray ps = sample(g, phi);
        FieldArray gp = gradient(g, ps.plane(0));
        const double gpn = norm(gp);
        for (int k = 0; k < m; ++k) {
            double acc = 0.0, jn2 = 0.0;
            for (int l = 0; l < D; ++l) {
                auto jl = Jrec.plane(k * D + l);
                auto gl = gp.plane(l);
                for (std::size_t x = 0; x < N; ++x) {
                    acc += wq[x] * gl[x] * jl[x];
                    jn2 += wq[x] * jl[x] * jl[x];
                }
            }
            const double scale = gpn * std::sqrt(jn2);
            if (scale > 0.0) worst = std::max(worst, std::abs(acc) / scale);
        }
    }
    return worst;
}

} // namespace hydrohom

#endif
