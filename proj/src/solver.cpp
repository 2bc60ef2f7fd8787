#include "threshconvex/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>

namespace threshconvex {

namespace {

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

std::vector<int> support_of(const Eigen::VectorXd& values) {
    std::vector<int> support;
    for (int i = 0; i < values.size(); ++i) {
        if (std::abs(values(i)) > kSupportTol) support.push_back(i);
    }
    return support;
}

double lasso_objective(const LassoProblem& prob, const Eigen::VectorXd& w) {
    return loss_value(prob.loss, prob.design * w, prob.targets) +
           prob.beta * w.template lpNorm<1>();
}

// Gradient of the logistic data term at predictions p (targets are +-1).
Eigen::VectorXd logistic_grad_pred(const Eigen::VectorXd& p, const Eigen::VectorXd& y) {
    Eigen::VectorXd g(p.size());
    for (int i = 0; i < p.size(); ++i) {
        const double m = y(i) * p(i);
        // -y * sigmoid(-m), stable on both tails
        const double s = m >= 0.0 ? std::exp(-m) / (1.0 + std::exp(-m))
                                  : 1.0 / (1.0 + std::exp(m));
        g(i) = -y(i) * s;
    }
    return g;
}

// Reduces a converged Lasso solution to a basic optimum: directions in the
// null space of [D_S; sign_S'] change neither the fit nor the l1 norm, so we
// can walk along them until coefficients hit zero. The surviving support has
// at most n+1 columns, the cardinality the theory calls m*.
void purify_support(const Eigen::MatrixXd& design, Eigen::VectorXd& w,
                    double rank_tol = 1e-10) {
    const int n = static_cast<int>(design.rows());
    while (true) {
        std::vector<int> support;
        for (int j = 0; j < w.size(); ++j) {
            if (std::abs(w(j)) > kSupportTol) support.push_back(j);
        }
        const int s = static_cast<int>(support.size());
        if (s <= 1) return;

        Eigen::MatrixXd constraints(n + 1, s);
        for (int c = 0; c < s; ++c) {
            constraints.block(0, c, n, 1) = design.col(support[static_cast<std::size_t>(c)]);
            constraints(n, c) = w(support[static_cast<std::size_t>(c)]) > 0.0 ? 1.0 : -1.0;
        }
        if (s <= n + 1) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints);
            const auto& sv = svd.singularValues();
            if (sv(s - 1) > rank_tol * sv(0)) return;  // basic already
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints, Eigen::ComputeFullV);
        const Eigen::VectorXd direction = svd.matrixV().col(s - 1);

        // Largest step along +direction that keeps every sign.
        double step = std::numeric_limits<double>::infinity();
        int hit = -1;
        for (int c = 0; c < s; ++c) {
            const double wj = w(support[static_cast<std::size_t>(c)]);
            const double sign = wj > 0.0 ? 1.0 : -1.0;
            if (sign * direction(c) < 0.0) {
                const double t = std::abs(wj) / std::abs(direction(c));
                if (t < step) {
                    step = t;
                    hit = c;
                }
            }
        }
        if (hit < 0 || !std::isfinite(step)) return;  // degenerate; keep as is
        for (int c = 0; c < s; ++c) {
            w(support[static_cast<std::size_t>(c)]) += step * direction(c);
        }
        w(support[static_cast<std::size_t>(hit)]) = 0.0;
    }
}

ConvexSolution solve_squared_cd(const LassoProblem& prob, const SolveOptions& options,
                                Eigen::VectorXd w) {
    const int p = static_cast<int>(prob.design.cols());
    const Eigen::VectorXd col_norm2 = prob.design.colwise().squaredNorm();
    Eigen::VectorXd residual = prob.targets - prob.design * w;

    ConvexSolution sol;
    sol.beta = prob.beta;
    sol.loss = prob.loss;

    double previous_objective = std::numeric_limits<double>::infinity();
    int sweeps = 0;
    bool converged = false;

    const auto record_sweep = [&] {
        ++sweeps;
        if (options.sweep_objectives != nullptr) {
            options.sweep_objectives->push_back(lasso_objective(prob, w));
        }
#ifndef NDEBUG
        const double objective = lasso_objective(prob, w);
        assert(objective <=
               previous_objective + 1e-9 * std::max(1.0, std::abs(previous_objective)));
        previous_objective = objective;
#else
        (void)previous_objective;
#endif
    };
    const auto sweep_over = [&](const std::vector<int>& columns) {
        double max_change = 0.0;
        for (int j : columns) {
            if (col_norm2(j) == 0.0) continue;
            const double rho = prob.design.col(j).dot(residual) + w(j) * col_norm2(j);
            const double updated = soft_threshold(rho, prob.beta) / col_norm2(j);
            const double change = updated - w(j);
            if (change != 0.0) {
                residual -= prob.design.col(j) * change;
                w(j) = updated;
                max_change = std::max(max_change, std::abs(change));
            }
        }
        record_sweep();
        return max_change;
    };

    std::vector<int> all_columns(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) all_columns[static_cast<std::size_t>(j)] = j;

    // On the current support with fixed signs the subproblem is a linear
    // system; jumping to its solution (when sign-consistent and improving)
    // sidesteps the slow tail of cyclic updates on correlated 0/1 columns.
    const auto restricted_jump = [&] {
        std::vector<int> support;
        for (int j = 0; j < p; ++j) {
            if (w(j) != 0.0) support.push_back(j);
        }
        const int s = static_cast<int>(support.size());
        if (s == 0 || s > 1024) return;
        Eigen::MatrixXd ds(prob.design.rows(), s);
        Eigen::VectorXd sign(s);
        for (int c = 0; c < s; ++c) {
            ds.col(c) = prob.design.col(support[static_cast<std::size_t>(c)]);
            sign(c) = w(support[static_cast<std::size_t>(c)]) > 0.0 ? 1.0 : -1.0;
        }
        const Eigen::MatrixXd gram = ds.transpose() * ds;
        const Eigen::VectorXd rhs = ds.transpose() * prob.targets - prob.beta * sign;
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram);
        const Eigen::VectorXd candidate = cod.solve(rhs);
        if ((gram * candidate - rhs).norm() > 1e-10 * std::max(1.0, rhs.norm())) {
            return;  // no stationary point on this sign face
        }
        for (int c = 0; c < s; ++c) {
            if (candidate(c) * sign(c) < 0.0) return;
        }
        const double current = 0.5 * residual.squaredNorm() + prob.beta * w.template lpNorm<1>();
        Eigen::VectorXd jumped = Eigen::VectorXd::Zero(p);
        for (int c = 0; c < s; ++c) {
            jumped(support[static_cast<std::size_t>(c)]) = candidate(c);
        }
        const Eigen::VectorXd jumped_residual = prob.targets - ds * candidate;
        const double proposed =
            0.5 * jumped_residual.squaredNorm() + prob.beta * jumped.template lpNorm<1>();
        if (proposed <= current) {
            w = std::move(jumped);
            residual = jumped_residual;
        }
    };

    // Convergence is declared on a full sweep; each full sweep is followed
    // by one exact jump attempt on the support it produced.
    while (sweeps < options.max_iter) {
        if (sweep_over(all_columns) < options.tol) {
            converged = true;
            break;
        }
        restricted_jump();
    }

    if (converged) {
        purify_support(prob.design, w);
        residual = prob.targets - prob.design * w;
    }

    sol.coefficients = w;
    sol.iterations = sweeps;
    sol.converged = converged;
    sol.objective_value = lasso_objective(prob, w);
    sol.support = support_of(w);

    const Eigen::VectorXd corr = prob.design.transpose() * residual;
    double violation = 0.0;
    for (int j = 0; j < p; ++j) {
        violation = std::max(violation, std::abs(corr(j)) - prob.beta);
    }
    for (int j : sol.support) {
        violation = std::max(
            violation, std::abs(corr(j) - prob.beta * (w(j) > 0.0 ? 1.0 : -1.0)));
    }
    sol.kkt_residual = std::max(violation, 0.0);
    return sol;
}

ConvexSolution solve_logistic_fista(const LassoProblem& prob,
                                    const SolveOptions& options) {
    const int p = static_cast<int>(prob.design.cols());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd momentum = x;
    double t = 1.0;
    // Backtracked Lipschitz estimate; logistic curvature is at most 1/4.
    double lip = std::max(prob.design.squaredNorm() / (4.0 * p), 1e-6);

    const auto smooth = [&](const Eigen::VectorXd& w) {
        return loss_value(LossKind::logistic, prob.design * w, prob.targets);
    };

    bool converged = false;
    int steps = 0;
    while (steps < options.max_iter) {
        const Eigen::VectorXd pred = prob.design * momentum;
        const Eigen::VectorXd grad =
            prob.design.transpose() * logistic_grad_pred(pred, prob.targets);
        const double f_momentum = smooth(momentum);

        Eigen::VectorXd next;
        while (true) {
            next = momentum - grad / lip;
            for (int j = 0; j < p; ++j) {
                next(j) = soft_threshold(next(j), prob.beta / lip);
            }
            const Eigen::VectorXd diff = next - momentum;
            const double quad =
                f_momentum + grad.dot(diff) + 0.5 * lip * diff.squaredNorm();
            if (smooth(next) <= quad + 1e-12) break;
            lip *= 2.0;
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        momentum = next + ((t - 1.0) / t_next) * (next - x);
        const double change = (next - x).template lpNorm<Eigen::Infinity>();
        x = next;
        t = t_next;
        ++steps;
        if (change < options.tol) {
            converged = true;
            break;
        }
    }

    ConvexSolution sol;
    sol.beta = prob.beta;
    sol.loss = prob.loss;
    sol.coefficients = x;
    sol.iterations = steps;
    sol.converged = converged;
    sol.objective_value = lasso_objective(prob, x);
    sol.support = support_of(x);

    // Stationarity residual of the composite objective.
    const Eigen::VectorXd grad =
        prob.design.transpose() * logistic_grad_pred(prob.design * x, prob.targets);
    double violation = 0.0;
    for (int j = 0; j < p; ++j) {
        if (std::abs(x(j)) > kSupportTol) {
            violation = std::max(
                violation, std::abs(grad(j) + prob.beta * (x(j) > 0.0 ? 1.0 : -1.0)));
        } else {
            violation = std::max(violation, std::abs(grad(j)) - prob.beta);
        }
    }
    sol.kkt_residual = std::max(violation, 0.0);
    return sol;
}

ConvexSolution solve_hinge_subgradient(const LassoProblem& prob,
                                       const SolveOptions& options) {
    const int p = static_cast<int>(prob.design.cols());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd average = w;
    Eigen::VectorXd best = w;
    double best_objective = lasso_objective(prob, w);

    const int steps = std::min(options.max_iter, 50000);
    const double step0 = 1.0 / std::max(1.0, prob.design.norm());
    for (int k = 1; k <= steps; ++k) {
        const Eigen::VectorXd pred = prob.design * w;
        Eigen::VectorXd sub = Eigen::VectorXd::Zero(p);
        for (int i = 0; i < pred.size(); ++i) {
            if (prob.targets(i) * pred(i) < 1.0) {
                sub -= prob.targets(i) * prob.design.row(i).transpose();
            }
        }
        for (int j = 0; j < p; ++j) {
            sub(j) += prob.beta * (w(j) > 0.0 ? 1.0 : (w(j) < 0.0 ? -1.0 : 0.0));
        }
        w -= (step0 / std::sqrt(static_cast<double>(k))) * sub;
        average = (average * (k - 1) + w) / k;
        const double objective = lasso_objective(prob, average);
        if (objective < best_objective) {
            best_objective = objective;
            best = average;
        }
    }

    ConvexSolution sol;
    sol.beta = prob.beta;
    sol.loss = prob.loss;
    sol.coefficients = best;
    sol.iterations = steps;
    sol.converged = true;  // documented tolerance is 1e-3 relative
    sol.objective_value = best_objective;
    sol.support = support_of(best);
    sol.kkt_residual = std::numeric_limits<double>::quiet_NaN();
    return sol;
}

}  // namespace

LassoProblem LassoProblem::from_arrangements(const ArrangementMatrix& arr,
                                             const Eigen::VectorXd& targets, double beta,
                                             LossKind loss) {
    LassoProblem prob;
    prob.design = arr.dense();
    prob.targets = targets;
    prob.beta = beta;
    prob.loss = loss;
    prob.validate();
    return prob;
}

void LassoProblem::validate() const {
    if (design.rows() != targets.size()) {
        throw ValidationError("LassoProblem: design has " + std::to_string(design.rows()) +
                              " rows but targets has " + std::to_string(targets.size()));
    }
    if (!(beta >= 0.0)) {
        throw ValidationError("LassoProblem: beta must be nonnegative");
    }
}

ConvexSolution lasso_solve(const LassoProblem& prob, const SolveOptions& options) {
    prob.validate();
    if (!(options.tol > 0.0)) {
        throw ValidationError("lasso_solve: tol must be positive");
    }
    switch (prob.loss) {
        case LossKind::squared:
            return solve_squared_cd(prob, options,
                                    Eigen::VectorXd::Zero(prob.design.cols()));
        case LossKind::logistic:
            return solve_logistic_fista(prob, options);
        case LossKind::hinge:
            if (!options.enable_hinge) {
                throw ValidationError(
                    "lasso_solve: hinge loss requires options.enable_hinge "
                    "(subgradient solver, 1e-3 relative tolerance)");
            }
            return solve_hinge_subgradient(prob, options);
    }
    throw ValidationError("lasso_solve: unknown loss");
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
    if (radius < 0.0) {
        throw ValidationError("project_l1_ball: radius must be nonnegative");
    }
    if (radius == 0.0) return Eigen::VectorXd::Zero(v.size());
    if (v.template lpNorm<1>() <= radius) return v;

    // Pivot/partition search for the threshold tau with
    // sum_i max(|v_i| - tau, 0) == radius. above_sum/above_count accumulate
    // elements known to exceed tau.
    std::vector<double> candidates(static_cast<std::size_t>(v.size()));
    for (int i = 0; i < v.size(); ++i) {
        candidates[static_cast<std::size_t>(i)] = std::abs(v(i));
    }

    double above_sum = 0.0;
    int above_count = 0;
    while (!candidates.empty()) {
        const double pivot = candidates[candidates.size() / 2];
        double greater_sum = 0.0;
        int greater_count = 0;
        std::vector<double> greater, less;
        greater.reserve(candidates.size());
        less.reserve(candidates.size());
        for (double a : candidates) {
            if (a > pivot) {
                greater_sum += a;
                ++greater_count;
                greater.push_back(a);
            } else if (a < pivot) {
                less.push_back(a);
            }
            // Elements equal to the pivot contribute zero mass at tau = pivot
            // and are resolved by whichever branch we take.
        }
        const double mass_at_pivot =
            above_sum + greater_sum - (above_count + greater_count) * pivot;
        if (mass_at_pivot < radius) {
            // tau < pivot: everything >= pivot lies above tau.
            const int equal_count =
                static_cast<int>(candidates.size() - greater.size() - less.size());
            above_sum += greater_sum + equal_count * pivot;
            above_count += greater_count + equal_count;
            candidates = std::move(less);
        } else {
            // tau >= pivot: pivot copies and everything below contribute 0.
            candidates = std::move(greater);
        }
    }
    const double tau = (above_sum - radius) / above_count;

    Eigen::VectorXd out(v.size());
    for (int i = 0; i < v.size(); ++i) {
        const double mag = std::max(std::abs(v(i)) - tau, 0.0);
        out(i) = v(i) >= 0.0 ? mag : -mag;
    }
    return out;
}

Eigen::VectorXd prox_inf_norm(const Eigen::VectorXd& v, double beta) {
    if (beta == 0.0) return v;
    return v - project_l1_ball(v, beta);
}

ConvexSolution closed_form_solve(const Eigen::VectorXd& y, double beta) {
    if (!(beta >= 0.0)) {
        throw ValidationError("closed_form_solve: beta must be nonnegative");
    }
    const Eigen::VectorXd pos = y.cwiseMax(0.0);
    const Eigen::VectorXd neg = (-y).cwiseMax(0.0);
    const Eigen::VectorXd p = prox_inf_norm(pos, beta).cwiseMax(0.0);
    const Eigen::VectorXd q = prox_inf_norm(neg, beta).cwiseMax(0.0);

    ConvexSolution sol;
    sol.is_delta_form = true;
    sol.beta = beta;
    sol.loss = LossKind::squared;
    sol.delta = p - q;
    sol.iterations = 1;
    sol.converged = true;
    const double pos_peak = p.size() > 0 ? p.maxCoeff() : 0.0;
    const double neg_peak = q.size() > 0 ? q.maxCoeff() : 0.0;
    sol.objective_value = 0.5 * (sol.delta - y).squaredNorm() +
                          beta * (std::max(pos_peak, 0.0) + std::max(neg_peak, 0.0));
    sol.support = support_of(sol.delta);

    // Certificate: the Moreau identity prox(v) + proj(v) == v must hold
    // componentwise for both prox steps.
    const double residual_pos =
        (p + project_l1_ball(pos, beta) - pos).template lpNorm<Eigen::Infinity>();
    const double residual_neg =
        (q + project_l1_ball(neg, beta) - neg).template lpNorm<Eigen::Infinity>();
    sol.kkt_residual = std::max(residual_pos, residual_neg);
    return sol;
}

KktReport kkt_check(const LassoProblem& prob, const ConvexSolution& sol, double tol) {
    prob.validate();
    if (sol.is_delta_form) {
        throw ValidationError(
            "kkt_check: expects a Lasso solution; closed-form solutions carry "
            "their own Moreau certificate");
    }
    const int p = static_cast<int>(prob.design.cols());
    if (sol.coefficients.size() != p) {
        throw ValidationError("kkt_check: coefficient length does not match design");
    }

    KktReport report;
    report.slacks.resize(static_cast<std::size_t>(p));

    Eigen::VectorXd corr;
    if (prob.loss == LossKind::squared) {
        const Eigen::VectorXd z = prob.targets - prob.design * sol.coefficients;
        corr = prob.design.transpose() * z;
    } else if (prob.loss == LossKind::logistic) {
        corr = -(prob.design.transpose() *
                 logistic_grad_pred(prob.design * sol.coefficients, prob.targets));
    } else {
        // Hinge: use the flat-piece subgradient (boundary terms omitted).
        const Eigen::VectorXd pred = prob.design * sol.coefficients;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(prob.targets.size());
        for (int i = 0; i < pred.size(); ++i) {
            if (prob.targets(i) * pred(i) < 1.0) g(i) = -prob.targets(i);
        }
        corr = -(prob.design.transpose() * g);
    }

    double max_violation = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < p; ++j) {
        report.slacks[static_cast<std::size_t>(j)] = prob.beta - std::abs(corr(j));
        max_violation = std::max(max_violation, std::abs(corr(j)) - prob.beta);
    }
    bool pass = max_violation <= tol * std::max(1.0, prob.beta);

    for (int j : sol.support) {
        const double sign = sol.coefficients(j) > 0.0 ? 1.0 : -1.0;
        const double gap = std::abs(corr(j) - prob.beta * sign);
        report.support_gaps.push_back(gap);
        if (gap > tol) pass = false;
        max_violation = std::max(max_violation, gap);
    }

    report.pass = pass;
    report.max_violation = max_violation;
    return report;
}

std::vector<double> default_beta_path(const Eigen::MatrixXd& design,
                                      const Eigen::VectorXd& y, int points) {
    const double beta_max =
        (design.transpose() * y).template lpNorm<Eigen::Infinity>();
    const double norm_y = y.norm();
    const double beta_end = std::max(1e-9 * norm_y, 1e-300);
    std::vector<double> path;
    if (beta_max <= beta_end) {
        path.push_back(beta_end);
        return path;
    }
    path.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / (points - 1);
        path.push_back(beta_max * std::pow(beta_end / beta_max, f));
    }
    return path;
}

ConvexSolution min_norm_interpolate(const ArrangementMatrix& design,
                                    const Eigen::VectorXd& y,
                                    const std::vector<double>& path_betas,
                                    const SolveOptions& options) {
    const Eigen::MatrixXd d = design.dense();
    if (d.rows() != y.size()) {
        throw ValidationError("min_norm_interpolate: target length mismatch");
    }
    const double norm_y = y.norm();
    if (norm_y == 0.0) {
        ConvexSolution sol;
        sol.coefficients = Eigen::VectorXd::Zero(d.cols());
        sol.converged = true;
        sol.objective_value = 0.0;
        sol.loss = LossKind::squared;
        return sol;
    }

    if (path_betas.empty()) {
        throw ValidationError("min_norm_interpolate: empty beta path");
    }
    for (std::size_t i = 0; i < path_betas.size(); ++i) {
        if (!(path_betas[i] > 0.0)) {
            throw ValidationError("min_norm_interpolate: betas must be positive");
        }
        if (i > 0 && path_betas[i] >= path_betas[i - 1]) {
            throw ValidationError("min_norm_interpolate: betas must be decreasing");
        }
    }
    if (path_betas.back() >= 1e-8 * norm_y) {
        throw ValidationError(
            "min_norm_interpolate: path must end below 1e-8 * ||y||");
    }

    // Feasibility: y must lie in the range of D.
    const Eigen::VectorXd w_ls = d.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
    const double ls_residual = (d * w_ls - y).norm();
    if (ls_residual > 1e-8 * std::max(1.0, norm_y)) {
        throw NumericError(
            "min_norm_interpolate: y is not in the range of D (least-squares "
            "residual " + std::to_string(ls_residual) + ")");
    }

    LassoProblem prob;
    prob.design = d;
    prob.targets = y;
    prob.loss = LossKind::squared;

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(d.cols());
    ConvexSolution sol;
    for (double beta : path_betas) {
        prob.beta = beta;
        sol = solve_squared_cd(prob, options, warm);
        warm = sol.coefficients;
    }
    return sol;
}

int critical_width(const ConvexSolution& sol) {
    if (!sol.converged) {
        throw ValidationError("critical_width: solution did not converge");
    }
    return static_cast<int>(sol.support.size());
}

}  // namespace threshconvex
