#include <doctest.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "threshconvex/io.hpp"
#include "threshconvex/rng.hpp"
#include "threshconvex/solver.hpp"

using namespace threshconvex;

namespace {

LassoProblem make_problem(Eigen::MatrixXd d, Eigen::VectorXd y, double beta,
                          LossKind loss = LossKind::squared) {
    LassoProblem prob;
    prob.design = std::move(d);
    prob.targets = std::move(y);
    prob.beta = beta;
    prob.loss = loss;
    return prob;
}

Eigen::MatrixXd example1_design() {
    Eigen::MatrixXd x(3, 2);
    x << -1, 1, 0, 1, 1, 1;
    return enumerate_exact(x).dense();
}

// 0/1 design with random distinct patterns.
Eigen::MatrixXd random_binary_design(Rng& rng, int n, int p) {
    Eigen::MatrixXd d(n, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < n; ++i) {
            d(i, j) = rng.uniform() < 0.5 ? 1.0 : 0.0;
        }
    }
    return d;
}

}  // namespace

TEST_CASE("soft-threshold example on the identity design") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd y(2);
    y << 3, 1;
    const auto sol = lasso_solve(make_problem(d, y, 1.0));
    CHECK(sol.converged);
    CHECK(sol.coefficients(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sol.coefficients(1) == doctest::Approx(0.0));
    CHECK(sol.objective_value == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(critical_width(sol) == 1);

    // KKT: z = (1,1), the active constraint is tight at beta.
    const auto report = kkt_check(make_problem(d, y, 1.0), sol, 1e-8);
    CHECK(report.pass);
    CHECK(report.max_violation == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("beta 0 on an invertible design is an exact solve") {
    Eigen::MatrixXd d(2, 2);
    d << 1, 1, 0, 1;
    Eigen::VectorXd y(2);
    y << 2, -1;
    SolveOptions options;
    options.tol = 1e-13;
    const auto sol = lasso_solve(make_problem(d, y, 0.0), options);
    CHECK(sol.converged);
    CHECK((d * sol.coefficients - y).norm() < 1e-10);
}

TEST_CASE("golden-design Lasso matches the exhaustive oracle") {
    const Eigen::MatrixXd d = example1_design();
    Eigen::VectorXd y(3);
    y << 0, 1, 1;
    SolveOptions options;
    options.tol = 1e-12;
    const auto sol = lasso_solve(make_problem(d, y, 0.01), options);
    CHECK(sol.converged);

    Eigen::VectorXd oracle_w;
    const double oracle = oracles::lasso_exhaustive_objective(d, y, 0.01, 3, &oracle_w);
    CHECK(sol.objective_value == doctest::Approx(oracle).epsilon(1e-8));

    // The (0,1,1) column carries the solution.
    int column = -1;
    for (int j = 0; j < d.cols(); ++j) {
        if (d(0, j) == 0.0 && d(1, j) == 1.0 && d(2, j) == 1.0) column = j;
    }
    REQUIRE(column >= 0);
    CHECK(std::find(sol.support.begin(), sol.support.end(), column) != sol.support.end());
    CHECK(critical_width(sol) == 1);
}

TEST_CASE("coordinate descent objective is nonincreasing across sweeps") {
    Rng rng(17);
    std::vector<double> sweeps;
    SolveOptions options;
    options.sweep_objectives = &sweeps;
    const Eigen::MatrixXd d = random_binary_design(rng, 10, 40);
    const Eigen::VectorXd y = rng.gaussian_vector(10);
    lasso_solve(make_problem(d, y, 0.05), options);
    REQUIRE(sweeps.size() > 1);
    for (std::size_t i = 1; i < sweeps.size(); ++i) {
        CHECK(sweeps[i] <= sweeps[i - 1] + 1e-12);
    }
}

TEST_CASE("beta beyond the critical value forces w = 0") {
    Rng rng(23);
    const Eigen::MatrixXd d = random_binary_design(rng, 8, 20);
    const Eigen::VectorXd y = rng.gaussian_vector(8);
    const double beta_max = (d.transpose() * y).cwiseAbs().maxCoeff();
    const auto sol = lasso_solve(make_problem(d, y, beta_max * 1.0001));
    CHECK(sol.coefficients.isZero(0.0));
    CHECK(sol.support.empty());
    const auto report = kkt_check(make_problem(d, y, beta_max * 1.0001), sol, 1e-10);
    CHECK(report.pass);
}

TEST_CASE("solution objective is invariant under column permutation") {
    Rng rng(29);
    const Eigen::MatrixXd d = random_binary_design(rng, 7, 15);
    const Eigen::VectorXd y = rng.gaussian_vector(7);
    SolveOptions options;
    options.tol = 1e-12;
    const auto sol = lasso_solve(make_problem(d, y, 0.1), options);

    Eigen::MatrixXd reversed(d.rows(), d.cols());
    for (int j = 0; j < d.cols(); ++j) reversed.col(j) = d.col(d.cols() - 1 - j);
    const auto sol_reversed = lasso_solve(make_problem(reversed, y, 0.1), options);
    CHECK(sol.objective_value ==
          doctest::Approx(sol_reversed.objective_value).epsilon(1e-10));
}

TEST_CASE("converged random instances pass the KKT check") {
    Rng rng(31);
    SolveOptions options;
    options.tol = 1e-12;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(6));
        const int p = 5 + static_cast<int>(rng.below(20));
        const Eigen::MatrixXd d = random_binary_design(rng, n, p);
        const Eigen::VectorXd y = rng.gaussian_vector(n);
        const double beta = std::pow(10.0, -2.0 * rng.uniform());
        const auto prob = make_problem(d, y, beta);
        const auto sol = lasso_solve(prob, options);
        REQUIRE(sol.converged);
        CHECK(kkt_check(prob, sol, 1e-6).pass);
        CHECK(critical_width(sol) <= n + 1);
    }
}

TEST_CASE("non-convergence is flagged when max_iter is tiny") {
    Rng rng(37);
    const Eigen::MatrixXd d = random_binary_design(rng, 10, 50);
    const Eigen::VectorXd y = rng.gaussian_vector(10);
    SolveOptions options;
    options.max_iter = 1;
    options.tol = 1e-14;
    const auto sol = lasso_solve(make_problem(d, y, 1e-6), options);
    CHECK_FALSE(sol.converged);
    CHECK_THROWS_AS(critical_width(sol), ValidationError);
}

TEST_CASE("closed form solves the hand examples") {
    SUBCASE("zero input") {
        const auto sol = closed_form_solve(Eigen::VectorXd::Zero(4), 2.0);
        CHECK(sol.delta.isZero(0.0));
        CHECK(sol.objective_value == 0.0);
    }
    SUBCASE("beta 0 is the identity") {
        Eigen::VectorXd y(3);
        y << 1.5, -0.25, 4.0;
        const auto sol = closed_form_solve(y, 0.0);
        CHECK((sol.delta - y).norm() == 0.0);
    }
    SUBCASE("y=(3,2,-1), beta=1 gives (2,2,0)") {
        Eigen::VectorXd y(3);
        y << 3, 2, -1;
        const auto sol = closed_form_solve(y, 1.0);
        CHECK(sol.delta(0) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(sol.delta(1) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(sol.delta(2) == doctest::Approx(0.0));
        // Oracle cross-check.
        const Eigen::VectorXd oracle = oracles::closed_form_grid_oracle(y, 1.0);
        CHECK((sol.delta - oracle).lpNorm<Eigen::Infinity>() < 1e-4);
    }
}

TEST_CASE("Moreau identity holds to machine precision") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(12));
        const Eigen::VectorXd v = 3.0 * rng.gaussian_vector(n);
        const double beta = 0.05 + 2.0 * rng.uniform();
        const Eigen::VectorXd prox = prox_inf_norm(v, beta);
        const Eigen::VectorXd proj = project_l1_ball(v, beta);
        CHECK((prox + proj - v).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("l1 ball projection properties") {
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(20));
        const Eigen::VectorXd v = 2.0 * rng.gaussian_vector(n);
        const double radius = 0.1 + 3.0 * rng.uniform();
        const Eigen::VectorXd proj = project_l1_ball(v, radius);
        CHECK(proj.lpNorm<1>() <= radius * (1.0 + 1e-12) + 1e-12);
        if (v.lpNorm<1>() <= radius) {
            CHECK((proj - v).norm() == 0.0);
        } else {
            CHECK(proj.lpNorm<1>() == doctest::Approx(radius).epsilon(1e-10));
        }
        // Projection optimality: no sampled point of the ball is closer.
        for (int probe = 0; probe < 10; ++probe) {
            const Eigen::VectorXd other =
                project_l1_ball(rng.gaussian_vector(n), radius);
            CHECK((v - proj).norm() <= (v - other).norm() + 1e-9);
        }
    }
}

TEST_CASE("closed form equals the Lasso on the complete design") {
    Rng rng(47);
    for (int n : {3, 5, 7}) {
        const auto complete = complete_arrangements(n);
        for (double beta : {0.01, 0.1, 1.0}) {
            const Eigen::VectorXd y = rng.gaussian_vector(n);
            const auto direct = closed_form_solve(y, beta);
            SolveOptions options;
            options.tol = 1e-12;
            const auto lasso = lasso_solve(
                LassoProblem::from_arrangements(complete, y, beta), options);
            REQUIRE(lasso.converged);
            CHECK(direct.objective_value ==
                  doctest::Approx(lasso.objective_value)
                      .epsilon(1e-6));
        }
    }
}

TEST_CASE("min-norm interpolation reaches the l1 gauge") {
    const Eigen::MatrixXd d = example1_design();
    ArrangementMatrix arr;
    {
        Eigen::MatrixXd x(3, 2);
        x << -1, 1, 0, 1, 1, 1;
        arr = enumerate_exact(x);
    }

    SUBCASE("y equal to a column has gauge 1") {
        for (int j : {1, 2, 5}) {
            const Eigen::VectorXd y = d.col(j);
            const auto path = default_beta_path(d, y);
            const auto sol = min_norm_interpolate(arr, y, path);
            const double oracle = oracles::min_l1_interpolation_oracle(d, y, 3);
            CHECK(oracle == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(sol.coefficients.lpNorm<1>() == doctest::Approx(oracle).epsilon(1e-6));
        }
    }

    SUBCASE("zero target gives zero gauge") {
        const auto sol = min_norm_interpolate(arr, Eigen::VectorXd::Zero(3), {1.0, 0.5});
        CHECK(sol.coefficients.isZero(0.0));
    }

    SUBCASE("column differences cost at most 2") {
        const Eigen::VectorXd y = d.col(4) - d.col(1);
        const auto path = default_beta_path(d, y);
        const auto sol = min_norm_interpolate(arr, y, path);
        const double oracle = oracles::min_l1_interpolation_oracle(d, y, 3);
        CHECK(sol.coefficients.lpNorm<1>() <= 2.0 + 1e-6);
        CHECK(sol.coefficients.lpNorm<1>() == doctest::Approx(oracle).epsilon(1e-6));
    }

    SUBCASE("infeasible target errors with the residual") {
        // d columns all satisfy bit0 <= bit2 on this design? Use an
        // orthogonal-complement target instead: project noise out of range.
        Eigen::MatrixXd narrow(3, 1);
        narrow << 1, 0, 0;
        const auto narrow_arr = arrangement_from_bits({PackedBits::from_string("100")}, 3);
        Eigen::VectorXd y(3);
        y << 0, 1, 0;
        CHECK_THROWS_AS(
            min_norm_interpolate(narrow_arr, y, {1e-2, 1e-10}),
            NumericError);
    }

    SUBCASE("path validation") {
        const Eigen::VectorXd y = d.col(1);
        CHECK_THROWS_AS(min_norm_interpolate(arr, y, {}), ValidationError);
        CHECK_THROWS_AS(min_norm_interpolate(arr, y, {0.5, 0.5}), ValidationError);
        CHECK_THROWS_AS(min_norm_interpolate(arr, y, {0.5, 0.1}), ValidationError);
    }
}

TEST_CASE("logistic lasso converges and satisfies stationarity") {
    Rng rng(53);
    const int n = 12;
    const Eigen::MatrixXd d = random_binary_design(rng, n, 24);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const auto prob = make_problem(d, y, 0.05, LossKind::logistic);
    SolveOptions options;
    options.tol = 1e-10;
    const auto sol = lasso_solve(prob, options);
    CHECK(sol.converged);
    CHECK(sol.kkt_residual < 1e-5);
    CHECK(kkt_check(prob, sol, 1e-4).pass);

    // Plain ISTA reference: same objective within 1e-6.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d.cols());
    const double lip = d.squaredNorm() / 4.0;
    for (int it = 0; it < 20000; ++it) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d.cols());
        const Eigen::VectorXd p = d * w;
        for (int i = 0; i < n; ++i) {
            const double m = y(i) * p(i);
            const double s = m >= 0.0 ? std::exp(-m) / (1.0 + std::exp(-m))
                                      : 1.0 / (1.0 + std::exp(m));
            g -= y(i) * s * d.row(i).transpose();
        }
        w -= g / lip;
        for (int j = 0; j < w.size(); ++j) {
            const double target = std::abs(w(j)) - 0.05 / lip;
            w(j) = target > 0.0 ? (w(j) > 0 ? target : -target) : 0.0;
        }
    }
    const double reference = loss_value(LossKind::logistic, d * w, y) + 0.05 * w.lpNorm<1>();
    CHECK(sol.objective_value <= reference + 1e-6);
}

TEST_CASE("hinge loss is gated behind enable_hinge") {
    Rng rng(59);
    const Eigen::MatrixXd d = random_binary_design(rng, 6, 10);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) y(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const auto prob = make_problem(d, y, 0.1, LossKind::hinge);
    CHECK_THROWS_AS(lasso_solve(prob), ValidationError);

    SolveOptions options;
    options.enable_hinge = true;
    options.max_iter = 20000;
    const auto sol = lasso_solve(prob, options);
    // Averaged subgradient with the documented loose tolerance.
    const double zero_objective = loss_value(LossKind::hinge, Eigen::VectorXd::Zero(6), y);
    CHECK(sol.objective_value <= zero_objective + 1e-9);
}

TEST_CASE("solution JSON round-trips") {
    Rng rng(61);
    const Eigen::MatrixXd d = random_binary_design(rng, 5, 8);
    const Eigen::VectorXd y = rng.gaussian_vector(5);
    const auto sol = lasso_solve(make_problem(d, y, 0.1));
    const auto restored = solution_from_json(nlohmann::json::parse(to_json(sol).dump()));
    CHECK(restored.objective_value == sol.objective_value);
    CHECK((restored.coefficients - sol.coefficients).norm() == 0.0);
    CHECK(restored.support == sol.support);
    CHECK_FALSE(restored.is_delta_form);

    const auto delta_sol = closed_form_solve(y, 0.3);
    const auto delta_restored =
        solution_from_json(nlohmann::json::parse(to_json(delta_sol).dump()));
    CHECK(delta_restored.is_delta_form);
    CHECK((delta_restored.delta - delta_sol.delta).norm() == 0.0);
}
