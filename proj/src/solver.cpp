#include "qvi/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>

#include "qvi/errors.hpp"

namespace qvi {

void SolverParams::validate() const {
    if (!(r > 1.0) || !(r < 2.0)) throw ConfigError("solver: r must lie in (1,2)");
    if (!(delta > 0.0)) throw ConfigError("solver: delta must be positive");
    if (!(alpha > 0.0)) throw ConfigError("solver: alpha must be positive");
    if (!(tol_w > 0.0) || !(tol_q > 0.0)) throw ConfigError("solver: tolerances must be positive");
    if (max_iters < 1) throw ConfigError("solver: max_iters must be >= 1");
}

namespace {

// |v|^{r-2} v with the zero-flux convention |0|^{r-2} 0 := 0.
inline Vec2 power_flux(const Vec2& q, double r) {
    const double n = q.norm();
    if (n == 0.0) return {0.0, 0.0};
    return q * std::pow(n, r - 2.0);
}

} // namespace

CellVecField flux_update(const CRField& W_new, const CellVecField& Q_prev, const CellField& M,
                         const SolverParams& params) {
    const TriMesh& mesh = *W_new.mesh;
    const CellVecField gW = broken_gradient(W_new);
    CellVecField out(mesh);
    const double r = params.r, delta = params.delta;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const Vec2 q = Q_prev.at(t);
        const double nd = std::hypot(q.norm(), delta);
        const Vec2 bracket = power_flux(q, r) + gW.at(t) / M.values[t];
        out.set(t, q - bracket * std::pow(nd, 2.0 - r));
    }
    return out;
}

struct LinearSolveContext {
    const StepProblem* prob = nullptr;
    const SolverParams* params = nullptr;
    LinearStrategy strategy = LinearStrategy::SparseLLT;

    // sparse path
    Eigen::SimplicialLLT<SpMat> sparse_llt;
    bool pattern_analyzed = false;

    // dense paths
    Eigen::LLT<Eigen::MatrixXd> dense_llt;
    bool have_preconditioner = false;
    int last_pcg_iters = 0;
    int preconditioner_builds = 0;
};

std::shared_ptr<LinearSolveContext> make_linear_context(const StepProblem& prob, const SolverParams& params) {
    auto ctx = std::make_shared<LinearSolveContext>();
    ctx->prob = &prob;
    ctx->params = &params;
    ctx->strategy = params.strategy;
    if (ctx->strategy == LinearStrategy::Auto)
        ctx->strategy = prob.Ah->is_diagonal() ? LinearStrategy::SparseLLT : LinearStrategy::DensePCG;
    if (ctx->strategy == LinearStrategy::SparseLLT && !prob.Ah->is_diagonal())
        throw ConfigError("solver: sparse strategy requires the diagonal A^h form");
    return ctx;
}

namespace {

Eigen::VectorXd pcg_solve(const Eigen::MatrixXd& C_over_tau, const SpMat& K,
                          const Eigen::LLT<Eigen::MatrixXd>& prec, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& x0, double rtol, int max_iters, int& iters_out) {
    auto apply = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(C_over_tau * v + K * v); };
    Eigen::VectorXd x = x0;
    Eigen::VectorXd rvec = b - apply(x);
    const double bnorm = b.norm();
    const double tol = rtol * (bnorm > 0.0 ? bnorm : 1.0);
    if (rvec.norm() <= tol) {
        iters_out = 0;
        return x;
    }
    Eigen::VectorXd z = prec.solve(rvec);
    Eigen::VectorXd p = z;
    double rz = rvec.dot(z);
    for (int it = 1; it <= max_iters; ++it) {
        const Eigen::VectorXd Ap = apply(p);
        const double alpha = rz / p.dot(Ap);
        x += alpha * p;
        rvec -= alpha * Ap;
        if (rvec.norm() <= tol) {
            iters_out = it;
            return x;
        }
        z = prec.solve(rvec);
        const double rz_new = rvec.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    iters_out = max_iters + 1; // signal non-convergence; caller refreshes and retries
    return x;
}

} // namespace

Eigen::VectorXd linearized_system_solve(LinearSolveContext& ctx, const CellField& coef, const Eigen::VectorXd& rhs,
                                        const Eigen::VectorXd& x0, int* pcg_iters_out) {
    const StepProblem& prob = *ctx.prob;
    const SolverParams& params = *ctx.params;
    const double inv_tau = 1.0 / prob.tau;
    SpMat K = weighted_stiffness_assemble(coef);
    if (pcg_iters_out) *pcg_iters_out = 0;

    switch (ctx.strategy) {
    case LinearStrategy::SparseLLT: {
        const Eigen::VectorXd& d = prob.Ah->diag();
        SpMat S = K;
        for (int i = 0; i < d.size(); ++i) S.coeffRef(i, i) += d[i] * inv_tau;
        S.makeCompressed();
        if (!ctx.pattern_analyzed) {
            ctx.sparse_llt.analyzePattern(S);
            ctx.pattern_analyzed = true;
        }
        ctx.sparse_llt.factorize(S);
        if (ctx.sparse_llt.info() != Eigen::Success)
            throw Error("linearized_system_solve: sparse Cholesky failed (system not SPD)");
        return ctx.sparse_llt.solve(rhs);
    }
    case LinearStrategy::DenseLLT: {
        Eigen::MatrixXd S = prob.Ah->dense_matrix() * inv_tau;
        for (int k = 0; k < K.outerSize(); ++k)
            for (SpMat::InnerIterator it(K, k); it; ++it) S(it.row(), it.col()) += it.value();
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success)
            throw Error("linearized_system_solve: dense Cholesky failed (system not SPD)");
        return llt.solve(rhs);
    }
    case LinearStrategy::DensePCG: {
        const Eigen::MatrixXd C_over_tau = prob.Ah->dense_matrix() * inv_tau;
        auto build_prec = [&]() {
            Eigen::MatrixXd S = C_over_tau;
            for (int k = 0; k < K.outerSize(); ++k)
                for (SpMat::InnerIterator it(K, k); it; ++it) S(it.row(), it.col()) += it.value();
            ctx.dense_llt.compute(S);
            if (ctx.dense_llt.info() != Eigen::Success)
                throw Error("linearized_system_solve: preconditioner Cholesky failed (system not SPD)");
            ctx.have_preconditioner = true;
            ++ctx.preconditioner_builds;
        };
        if (!ctx.have_preconditioner || ctx.last_pcg_iters > params.pcg_refresh_cap) build_prec();
        int iters = 0;
        Eigen::VectorXd x = pcg_solve(C_over_tau, K, ctx.dense_llt, rhs, x0, params.pcg_rtol, params.pcg_max_iters, iters);
        if (iters > params.pcg_max_iters) {
            build_prec(); // stale preconditioner: rebuild and solve directly from it
            x = ctx.dense_llt.solve(rhs);
            iters = 0;
        }
        ctx.last_pcg_iters = iters;
        if (pcg_iters_out) *pcg_iters_out = iters;
        return x;
    }
    default:
        throw ConfigError("linearized_system_solve: strategy must be resolved before solving");
    }
}

StepResult step(const StepProblem& prob, const CRField& W_prev, const CellVecField& Q_prev,
                const SolverParams& params, std::vector<IterationRecord>* trace, int step_index) {
    params.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const TriMesh& mesh = *prob.mesh;
    const double r = params.r, delta = params.delta;
    const Eigen::VectorXd D = cr_lumped_mass(mesh);
    auto ctx = make_linear_context(prob, params);

    const Eigen::VectorXd AhWprev_over_tau = prob.Ah->apply(W_prev.values) / prob.tau;

    CRField W_iter = W_prev;       // W^{n,m-1}
    CellVecField Q_iter = Q_prev;  // relaxed Q^{n,m-1}
    CRField W_new(mesh);
    CellVecField Q_raw(mesh);

    StepResult out;
    bool converged = false;

    for (int m = 1; m <= params.max_iters; ++m) {
        const CellField PhW = project_P0(W_iter);
        const CellField M = prob.M_of(PhW);

        // coefficient and correction term of the linearized system (4.3)
        CellField coef(mesh);
        Eigen::VectorXd rhs = prob.Fload + AhWprev_over_tau;
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            const Vec2 q = Q_iter.at(t);
            const double qn = q.norm();
            const double qd = std::hypot(qn, delta);
            const double qd_2mr = std::pow(qd, 2.0 - r);
            coef.values[t] = qd_2mr / M.values[t];
            if (qn > 0.0) {
                const Vec2 corr = q * (qd_2mr * (std::pow(qd, r - 2.0) - std::pow(qn, r - 2.0)));
                // (corr, grad_h eta): scatter against the three local CR gradients
                const auto bg = barycentric_gradients(mesh, t);
                for (int i = 0; i < 3; ++i) {
                    const int dof = mesh.edges[mesh.tri_edges[t][i]].dof;
                    if (dof >= 0) rhs[dof] += mesh.area[t] * corr.dot(bg[i] * (-2.0));
                }
            }
        }

        int pcg_iters = 0;
        W_new.values = linearized_system_solve(*ctx, coef, rhs, W_iter.values, &pcg_iters);
        Q_raw = flux_update(W_new, Q_iter, M, params);

        // stopping rule (4.5): relative L1 changes
        const double num_w = D.dot((W_new.values - W_iter.values).cwiseAbs());
        const double den_w = D.dot(W_new.values.cwiseAbs());
        double num_q = 0.0, den_q = 0.0;
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            num_q += mesh.area[t] * (Q_raw.at(t) - Q_iter.at(t)).norm();
            den_q += mesh.area[t] * Q_raw.norm_at(t);
        }
        const double res_w = (den_w > 0.0) ? num_w / den_w : (num_w > 0.0 ? 1.0 : 0.0);
        const double res_q = (den_q > 0.0) ? num_q / den_q : (num_q > 0.0 ? 1.0 : 0.0);
        out.res_w_history.push_back(res_w);
        out.res_q_history.push_back(res_q);
        if (trace) trace->push_back({step_index, m, res_w, res_q, pcg_iters});
        out.iterations = m;

        if (res_w < params.tol_w && res_q < params.tol_q) {
            converged = true;
            break;
        }
        // relax prior to the next iteration
        Q_iter.values = params.alpha * Q_raw.values + (1.0 - params.alpha) * Q_iter.values;
        W_iter = W_new;
    }

    if (!converged)
        throw NonConvergenceError("fixed-point iteration exhausted max_iters = " + std::to_string(params.max_iters),
                                  out.res_w_history, out.res_q_history);

    out.W = W_new;
    out.Q = Q_raw; // final unrelaxed flux: the pair (W, Q) satisfies (2.21a) exactly

    // energy identity ledger (pre-flush pair)
    {
        const CellField PhWn = project_P0(out.W);
        const CellField Mn = prob.M_of(PhWn);
        double diss = 0.0;
        for (int t = 0; t < mesh.n_triangles(); ++t)
            diss += mesh.area[t] * Mn.values[t] * std::pow(out.Q.norm_at(t), r);
        out.energy.norm2_W = prob.Ah->norm2(out.W.values);
        out.energy.norm2_Wprev = prob.Ah->norm2(W_prev.values);
        out.energy.norm2_dW = prob.Ah->norm2(out.W.values - W_prev.values);
        out.energy.dissipation = 2.0 * prob.tau * diss;
        out.energy.work = 2.0 * prob.tau * prob.Fload.dot(out.W.values);
        const double lhs = out.energy.norm2_W + out.energy.norm2_dW + out.energy.dissipation;
        const double rhs2 = out.energy.norm2_Wprev + out.energy.work;
        const double scale = std::max({out.energy.norm2_W, out.energy.norm2_Wprev, std::abs(out.energy.work), 1e-300});
        out.energy.defect_rel = std::abs(lhs - rhs2) / scale;
    }

    // round subcritical flux dust to exact zero
    if (params.flush_factor > 0.0) {
        const double thresh = params.flush_factor * delta;
        for (int t = 0; t < mesh.n_triangles(); ++t)
            if (out.Q.norm_at(t) <= thresh) out.Q.set(t, {0.0, 0.0});
    }

    out.preconditioner_builds = ctx->preconditioner_builds;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

double constitutive_residual_max(const CRField& W, const CellVecField& Q, const CellField& M, double r) {
    const TriMesh& mesh = *W.mesh;
    const CellVecField gW = broken_gradient(W);
    double worst = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const Vec2 q = Q.at(t);
        const double qn = q.norm();
        Vec2 res = gW.at(t);
        if (qn > 0.0) res += q * (M.values[t] * std::pow(qn, r - 2.0));
        worst = std::max(worst, res.norm());
    }
    return worst;
}

} // namespace qvi
