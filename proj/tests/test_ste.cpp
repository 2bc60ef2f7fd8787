#include <doctest.h>

#include <nlohmann/json.hpp>

#include "threshconvex/io.hpp"
#include "threshconvex/rng.hpp"
#include "threshconvex/solver.hpp"
#include "threshconvex/ste.hpp"

using namespace threshconvex;

namespace {

Dataset random_dataset(Rng& rng, int n, int d) {
    Dataset data;
    data.features = rng.gaussian_matrix(n, d);
    data.labels = rng.gaussian_vector(n);
    return data;
}

}  // namespace

TEST_CASE("surrogate_backward values") {
    CHECK(surrogate_backward(Surrogate::identity, -5.0) == 1.0);
    CHECK(surrogate_backward(Surrogate::identity, 3.0) == 1.0);
    CHECK(surrogate_backward(Surrogate::relu, -5.0) == 0.0);
    CHECK(surrogate_backward(Surrogate::relu, 2.0) == 1.0);
    CHECK(surrogate_backward(Surrogate::leaky_relu, -1.0, 0.01) == 0.01);
    CHECK(surrogate_backward(Surrogate::leaky_relu, 1.0, 0.01) == 1.0);
    CHECK(surrogate_backward(Surrogate::clipped_relu, 0.5, 0.01, 1.0) == 1.0);
    CHECK(surrogate_backward(Surrogate::clipped_relu, 2.0, 0.01, 1.0) == 0.0);
    CHECK(surrogate_backward(Surrogate::clipped_relu, -0.5, 0.01, 1.0) == 0.0);
}

TEST_CASE("training stays at zero when the initial network already fits") {
    Rng rng(90);
    Dataset data;
    data.features = rng.gaussian_matrix(12, 3);

    SteConfig cfg;
    cfg.beta = 0.0;
    cfg.epochs = 30;
    cfg.batch_size = 4;
    cfg.seed = 17;
    cfg.learning_rate = 0.05;

    // Extract the seed's initial parameters by "training" with a step too
    // small to change any double, then label the data with that network:
    // the real run starts at loss zero and every gradient vanishes.
    data.labels = Eigen::VectorXd::Zero(12);
    SteConfig frozen = cfg;
    frozen.learning_rate = 1e-300;
    frozen.epochs = 1;
    const TrainTrace init = ste_train(data, {1}, frozen);
    data.labels = forward(init.final_network, data.features);

    const TrainTrace trace = ste_train(data, {1}, cfg);
    REQUIRE_FALSE(trace.objectives.empty());
    for (double objective : trace.objectives) {
        CHECK(objective == 0.0);
    }
}

TEST_CASE("fixed seed reproduces the trace bit for bit") {
    Rng rng(91);
    const Dataset data = random_dataset(rng, 16, 4);
    SteConfig cfg;
    cfg.beta = 1e-3;
    cfg.epochs = 25;
    cfg.batch_size = 5;
    cfg.seed = 7;
    cfg.learning_rate = 0.05;

    const TrainTrace a = ste_train(data, {8}, cfg);
    const TrainTrace b = ste_train(data, {8}, cfg);
    REQUIRE(a.objectives.size() == b.objectives.size());
    for (std::size_t i = 0; i < a.objectives.size(); ++i) {
        CHECK(a.objectives[i] == b.objectives[i]);
    }
    const Eigen::MatrixXd probe = Rng(123).gaussian_matrix(10, 4);
    CHECK((forward(a.final_network, probe) - forward(b.final_network, probe)).norm() ==
          0.0);
}

TEST_CASE("forward outputs live in the amplitude lattice") {
    Rng rng(92);
    const Dataset data = random_dataset(rng, 10, 3);
    SteConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 10;
    cfg.seed = 3;
    const TrainTrace trace = ste_train(data, {4}, cfg);

    // Exact threshold forward: every prediction is a subset sum of
    // amplitude * output_weight products.
    const auto& net = trace.final_network;
    std::vector<double> terms;
    for (const auto& sub : net.subnetworks) {
        terms.push_back(sub.output_weight * sub.layers.back().amplitude(0));
    }
    const Eigen::VectorXd pred = forward(net, data.features);
    for (int i = 0; i < pred.size(); ++i) {
        bool matched = false;
        for (unsigned mask = 0; mask < (1u << terms.size()); ++mask) {
            double total = 0.0;
            for (std::size_t j = 0; j < terms.size(); ++j) {
                if ((mask >> j) & 1u) total += terms[j];
            }
            if (std::abs(total - pred(i)) < 1e-12) {
                matched = true;
                break;
            }
        }
        CHECK(matched);
    }
}

TEST_CASE("gradients match central finite differences on the linear debug net") {
    Rng rng(93);
    SteConfig cfg;
    cfg.surrogate = Surrogate::identity;
    cfg.beta = 0.01;
    cfg.seed = 5;

    SUBCASE("two layers") {
        const Dataset data = random_dataset(rng, 8, 3);
        CHECK(ste_gradient_check(data, {4}, cfg) < 1e-5);
    }
    SUBCASE("three layers") {
        const Dataset data = random_dataset(rng, 6, 2);
        CHECK(ste_gradient_check(data, {3, 2}, cfg) < 1e-5);
    }
}

TEST_CASE("learning rate schedule is monotone nonincreasing") {
    Rng rng(94);
    const Dataset data = random_dataset(rng, 12, 3);
    SteConfig cfg;
    cfg.epochs = 80;
    cfg.batch_size = 4;
    cfg.seed = 21;
    cfg.learning_rate = 0.1;
    cfg.lr_patience = 3;
    const TrainTrace trace = ste_train(data, {6}, cfg);
    REQUIRE_FALSE(trace.learning_rates.empty());
    for (std::size_t i = 1; i < trace.learning_rates.size(); ++i) {
        CHECK(trace.learning_rates[i] <= trace.learning_rates[i - 1]);
    }
    CHECK(trace.learning_rates.back() < cfg.learning_rate);
}

TEST_CASE("divergence aborts with the trace so far") {
    Rng rng(95);
    const Dataset data = random_dataset(rng, 10, 3);
    SteConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 10;
    cfg.seed = 2;
    cfg.learning_rate = 1e12;  // guaranteed blowup
    const TrainTrace trace = ste_train(data, {4}, cfg);
    CHECK(trace.diverged);
    CHECK(trace.objectives.size() < 50);
}

TEST_CASE("STE cannot beat the certified convex optimum") {
    // Desk-scale version of the synthetic two-layer comparison: the convex
    // solve over the exact arrangement set lower-bounds every STE trial.
    Rng rng(96);
    Dataset data;
    data.features = rng.gaussian_matrix(10, 2);
    data.labels = rng.gaussian_vector(10);
    const Dataset biased = data.with_bias();

    const auto arr = enumerate_exact(biased);
    SolveOptions options;
    options.tol = 1e-12;
    const auto sol =
        lasso_solve(LassoProblem::from_arrangements(arr, biased.labels, 1e-3), options);
    REQUIRE(sol.converged);

    SteConfig cfg;
    cfg.beta = 1e-3;
    cfg.epochs = 120;
    cfg.batch_size = 10;
    cfg.seed = 11;
    cfg.learning_rate = 0.05;
    const auto result = multi_trial(biased, {16}, cfg, 5);
    REQUIRE(result.traces.size() == 5);
    for (const auto& trace : result.traces) {
        REQUIRE_FALSE(trace.diverged);
        CHECK(sol.objective_value <= trace.final_objective() + 1e-8);
    }
}

TEST_CASE("multi_trial is reproducible and picks the best trial") {
    Rng rng(97);
    const Dataset data = random_dataset(rng, 12, 3);
    SteConfig cfg;
    cfg.beta = 1e-3;
    cfg.epochs = 20;
    cfg.batch_size = 6;
    cfg.seed = 100;
    cfg.learning_rate = 0.05;

    const auto single = multi_trial(data, {5}, cfg, 1);
    CHECK(single.best_index == 0);
    const auto direct = ste_train(data, {5}, cfg);
    CHECK(single.traces[0].final_objective() == direct.final_objective());

    const auto five_a = multi_trial(data, {5}, cfg, 5);
    const auto five_b = multi_trial(data, {5}, cfg, 5);
    for (int t = 0; t < 5; ++t) {
        CHECK(five_a.traces[static_cast<std::size_t>(t)].final_objective() ==
              five_b.traces[static_cast<std::size_t>(t)].final_objective());
        CHECK(five_a.traces[static_cast<std::size_t>(t)].seed == cfg.seed + t);
    }
    CHECK(five_a.best_index == five_b.best_index);
    for (const auto& trace : five_a.traces) {
        CHECK(five_a.traces[static_cast<std::size_t>(five_a.best_index)].final_objective() <=
              trace.final_objective());
    }
}

TEST_CASE("trace JSON round-trips") {
    Rng rng(98);
    const Dataset data = random_dataset(rng, 8, 2);
    SteConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.seed = 9;
    const TrainTrace trace = ste_train(data, {3}, cfg);
    const TrainTrace restored =
        trace_from_json(nlohmann::json::parse(to_json(trace).dump()));
    CHECK(restored.objectives == trace.objectives);
    CHECK(restored.seed == trace.seed);
    CHECK(restored.diverged == trace.diverged);
    CHECK(restored.config.epochs == cfg.epochs);
    const Eigen::MatrixXd probe = rng.gaussian_matrix(6, 2);
    CHECK((forward(restored.final_network, probe) -
           forward(trace.final_network, probe))
              .norm() == 0.0);
}
