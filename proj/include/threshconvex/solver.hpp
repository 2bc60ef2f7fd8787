#pragma once

#include <vector>

#include "threshconvex/arrangements.hpp"
#include "threshconvex/types.hpp"

namespace threshconvex {

// Lasso over an arrangement design matrix: min_w L(Dw, y) + beta * ||w||_1.
struct LassoProblem {
    Eigen::MatrixXd design;  // n x P, 0/1 columns
    Eigen::VectorXd targets;
    double beta = 0.0;
    LossKind loss = LossKind::squared;

    static LassoProblem from_arrangements(const ArrangementMatrix& arr,
                                          const Eigen::VectorXd& targets, double beta,
                                          LossKind loss = LossKind::squared);
    void validate() const;
};

// Coefficient below this is treated as zero when reporting support.
constexpr double kSupportTol = 1e-8;

struct ConvexSolution {
    Eigen::VectorXd coefficients;  // length P for Lasso solutions
    Eigen::VectorXd delta;         // length n for the closed-form problem
    bool is_delta_form = false;
    double objective_value = 0.0;
    double beta = 0.0;
    LossKind loss = LossKind::squared;
    std::vector<int> support;      // indices with |value| > kSupportTol
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct SolveOptions {
    double tol = 1e-10;     // max coefficient change per sweep (squared loss)
    int max_iter = 100000;  // sweeps for coordinate descent, steps for FISTA
    bool enable_hinge = false;
    // When set, the squared-loss path appends the objective after each sweep.
    std::vector<double>* sweep_objectives = nullptr;
};

// Squared loss: cyclic coordinate descent with exact soft-threshold updates.
// Logistic: FISTA with backtracking. Hinge: averaged subgradient descent,
// available only when options.enable_hinge is set (documented tolerance is
// 1e-3 relative).
ConvexSolution lasso_solve(const LassoProblem& prob, const SolveOptions& options = {});

// The complete-arrangement training problem
//   min_delta 0.5*||delta - y||^2 + beta*(||(delta)_+||_inf + ||(-delta)_+||_inf)
// solved by two prox steps (one per sign), each an infinity-norm prox via
// Moreau: v - project_l1_ball(v, beta).
ConvexSolution closed_form_solve(const Eigen::VectorXd& y, double beta);

// Euclidean projection onto the l1 ball of the given radius, pivot/partition
// method (expected linear time).
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);

// prox of beta*||.||_inf.
Eigen::VectorXd prox_inf_norm(const Eigen::VectorXd& v, double beta);

struct KktReport {
    bool pass = false;
    double max_violation = 0.0;        // max_i |d_i' z| - beta (or stationarity residual)
    std::vector<double> slacks;        // per-column beta - |d_i' z|
    std::vector<double> support_gaps;  // per-support |d_i' z - beta*sign(w_i)|
};

// Optimality certificate. Squared loss checks the dual constraints
// |d_i' (y - Dw)| <= beta with tight equality on the support; logistic and
// hinge fall back to a stationarity check on the loss gradient.
KktReport kkt_check(const LassoProblem& prob, const ConvexSolution& sol, double tol);

// Minimum l1-norm interpolation min ||w||_1 s.t. Dw = y, computed with a
// warm-started Lasso path over decreasing betas. The terminal l1 norm
// approximates the gauge of the pattern polytope at y.
ConvexSolution min_norm_interpolate(const ArrangementMatrix& design,
                                    const Eigen::VectorXd& y,
                                    const std::vector<double>& path_betas,
                                    const SolveOptions& options = {});

// Default geometric beta path for min_norm_interpolate.
std::vector<double> default_beta_path(const Eigen::MatrixXd& design,
                                      const Eigen::VectorXd& y, int points = 40);

// Support cardinality m* of a converged solution.
int critical_width(const ConvexSolution& sol);

}  // namespace threshconvex
