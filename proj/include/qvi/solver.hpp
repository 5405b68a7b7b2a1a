#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "qvi/fem.hpp"
#include "qvi/mesh.hpp"

namespace qvi {

/// The A^h form: diagonal CR mass in cases (i)/(ii), the dense Biot-Savart
/// matrix in case (iii).
class AhOperator {
  public:
    static AhOperator diagonal(Eigen::VectorXd d) {
        AhOperator a;
        a.diag_ = std::move(d);
        return a;
    }
    static AhOperator dense(const Eigen::MatrixXd* C) {
        AhOperator a;
        a.dense_ = C;
        return a;
    }

    bool is_diagonal() const { return dense_ == nullptr; }
    const Eigen::VectorXd& diag() const { return diag_; }
    const Eigen::MatrixXd& dense_matrix() const { return *dense_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
        return is_diagonal() ? Eigen::VectorXd(diag_.cwiseProduct(v)) : Eigen::VectorXd(*dense_ * v);
    }
    double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const { return u.dot(apply(v)); }
    double norm2(const Eigen::VectorXd& v) const { return inner(v, v); }

  private:
    Eigen::VectorXd diag_;
    const Eigen::MatrixXd* dense_ = nullptr;
};

enum class LinearStrategy {
    Auto,     // SparseLLT for diagonal A^h, DensePCG otherwise
    SparseLLT,
    DenseLLT, // full dense refactorization every iteration
    DensePCG  // cached dense factor as preconditioner, refreshed on demand
};

struct SolverParams {
    double r = 1.0 + 1e-9;  // power-law exponent, in (1,2)
    double delta = 1e-10;   // flux smoothing |v|_delta = sqrt(|v|^2 + delta^2)
    double alpha = 1.0;     // relaxation factor for the flux update
    double tol_w = 1e-6;    // stopping: relative L1 change of pi^h_N |dW|
    double tol_q = 2e-5;    // stopping: relative L1 change of Q
    int max_iters = 10000;
    LinearStrategy strategy = LinearStrategy::Auto;
    double pcg_rtol = 1e-12;
    int pcg_max_iters = 400;
    int pcg_refresh_cap = 35; // refactor the preconditioner when CG needs more
    /// Converged fluxes with |Q| below flush_factor*delta are rounded to exact
    /// zero (the exact power-law flux underflows to zero on subcritical
    /// triangles for r-1 ~ 1e-9). Set to 0 to disable.
    double flush_factor = 3.0;

    void validate() const;
};

struct IterationRecord {
    int step = 0;
    int m = 0;
    double res_w = 0.0;
    double res_q = 0.0;
    int pcg_iters = 0;
};

/// Terms of the per-step discrete energy identity
/// ||W^n||^2 + ||W^n-W^{n-1}||^2 + 2 tau (M, |Q|^r) = ||W^{n-1}||^2 + 2 tau (F, W^n).
struct EnergyLedger {
    double norm2_W = 0.0;
    double norm2_dW = 0.0;
    double norm2_Wprev = 0.0;
    double dissipation = 0.0;
    double work = 0.0;
    double defect_rel = 0.0;
};

struct StepResult {
    CRField W;
    CellVecField Q;
    int iterations = 0;
    std::vector<double> res_w_history;
    std::vector<double> res_q_history;
    EnergyLedger energy;
    double seconds = 0.0;
    int preconditioner_builds = 0;
};

/// One time step of the scheme posed abstractly: the A^h operator, the load
/// vector of F^n, and the coefficient map eta -> M^{h,n}(eta).
struct StepProblem {
    const TriMesh* mesh = nullptr;
    const AhOperator* Ah = nullptr;
    double tau = 0.0;
    Eigen::VectorXd Fload;
    std::function<CellField(const CellField&)> M_of;
};

StepResult step(const StepProblem& prob, const CRField& W_prev, const CellVecField& Q_prev,
                const SolverParams& params, std::vector<IterationRecord>* trace = nullptr, int step_index = 1);

/// Update (4.2): per-triangle flux from the fresh W and the previous flux.
CellVecField flux_update(const CRField& W_new, const CellVecField& Q_prev, const CellField& M,
                         const SolverParams& params);

/// Solve (1/tau) A^h(W, eta) + (coef grad_h W, grad_h eta) = rhs(eta).
/// Returns the solution and the number of PCG iterations used (0 for direct).
struct LinearSolveContext; // owns factorizations reused across iterations

std::shared_ptr<LinearSolveContext> make_linear_context(const StepProblem& prob, const SolverParams& params);
Eigen::VectorXd linearized_system_solve(LinearSolveContext& ctx, const CellField& coef, const Eigen::VectorXd& rhs,
                                        const Eigen::VectorXd& x0, int* pcg_iters_out);

/// max_sigma |grad_h W + M |Q|^{r-2} Q| with the zero-flux convention.
double constitutive_residual_max(const CRField& W, const CellVecField& Q, const CellField& M, double r);

} // namespace qvi
