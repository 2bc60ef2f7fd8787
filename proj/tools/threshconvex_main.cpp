// Command-line front end: enumerate arrangements, train convex or STE
// models, reconstruct networks, run experiment specs, verify artifacts.
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "threshconvex/harness.hpp"
#include "threshconvex/io.hpp"
#include "threshconvex/reconstruction.hpp"
#include "threshconvex/solver.hpp"

namespace tc = threshconvex;

namespace {

int cmd_enumerate(const std::string& csv, const std::string& label, bool bias,
                  std::uint64_t budget, int sampled, std::uint64_t seed,
                  const std::string& output, const std::string& witnesses_out) {
    Eigen::MatrixXd features = tc::load_csv_matrix(csv, label);
    if (bias) {
        Eigen::MatrixXd with_bias(features.rows(), features.cols() + 1);
        with_bias.leftCols(features.cols()) = features;
        with_bias.col(features.cols()).setOnes();
        features = with_bias;
    }
    tc::ArrangementMatrix arr;
    if (sampled > 0) {
        arr = tc::sample_arrangements(features, sampled, seed);
    } else {
        tc::EnumerateOptions options;
        options.subset_budget = budget;
        arr = tc::enumerate_exact(features, options);
    }
    tc::write_text_file(output, tc::arrangement_to_text(arr));
    if (!witnesses_out.empty()) {
        tc::write_text_file(witnesses_out, tc::witnesses_to_csv(arr));
    }
    std::cout << "n=" << arr.n << " P=" << arr.pattern_count()
              << " layer=" << arr.layer << " -> " << output << "\n";
    return 0;
}

int cmd_train_convex(const std::string& csv, const std::string& label, double beta,
                     const std::string& method, int samples, const std::string& loss,
                     std::uint64_t seed, const std::string& output,
                     const std::string& arrangement_out) {
    const tc::Dataset data = tc::load_csv_full(csv, label);
    tc::ArrangementMatrix arr;
    if (method == "exact") {
        arr = tc::enumerate_exact(data);
    } else if (method == "sampled") {
        arr = tc::sample_arrangements(data, samples, seed);
    } else {
        throw tc::ValidationError("train-convex: method must be exact or sampled");
    }
    const tc::LassoProblem prob = tc::LassoProblem::from_arrangements(
        arr, data.labels, beta, tc::loss_from_string(loss));
    tc::SolveOptions options;
    options.tol = 1e-11;
    const tc::ConvexSolution sol = tc::lasso_solve(prob, options);
    tc::write_text_file(output, tc::to_json(sol).dump(2) + "\n");
    if (!arrangement_out.empty()) {
        tc::write_text_file(arrangement_out, tc::arrangement_to_text(arr));
        tc::write_text_file(arrangement_out + ".witnesses.csv",
                            tc::witnesses_to_csv(arr));
    }
    std::cout << "P=" << arr.pattern_count() << " objective=" << sol.objective_value
              << " support=" << sol.support.size()
              << " converged=" << (sol.converged ? "yes" : "no") << "\n";
    if (!sol.converged) return 2;
    return 0;
}

int cmd_train_ste(const std::string& csv, const std::string& label,
                  const std::string& surrogate, double lr, int epochs, int trials,
                  const std::vector<int>& widths, double beta, int batch_size,
                  std::uint64_t seed, const std::string& output_prefix) {
    const tc::Dataset data = tc::load_csv_full(csv, label);
    tc::SteConfig cfg;
    cfg.surrogate = tc::surrogate_from_string(surrogate);
    cfg.learning_rate = lr;
    cfg.epochs = epochs;
    cfg.batch_size = std::min(batch_size, data.n());
    cfg.beta = beta;
    cfg.seed = seed;
    const tc::MultiTrialResult result = tc::multi_trial(data, widths, cfg, trials);
    for (std::size_t t = 0; t < result.traces.size(); ++t) {
        tc::write_text_file(output_prefix + "_trial" + std::to_string(t) + ".json",
                            tc::to_json(result.traces[t]).dump(2) + "\n");
    }
    std::cout << "best trial " << result.best_index << " objective="
              << result.traces[static_cast<std::size_t>(result.best_index)].final_objective()
              << "\n";
    return 0;
}

int cmd_reconstruct(const std::string& solution_path, const std::string& csv,
                    const std::string& label, const std::string& arrangement_path,
                    const std::string& witnesses_path, const std::string& method,
                    std::uint64_t seed, const std::string& output) {
    const tc::Dataset data = tc::load_csv_full(csv, label);
    const tc::ConvexSolution sol =
        tc::solution_from_json(nlohmann::json::parse(tc::read_text_file(solution_path)));

    tc::ThresholdNetwork net;
    if (sol.is_delta_form) {
        tc::SvmOptions svm_options;
        svm_options.seed = seed;
        net = tc::build_from_delta(data, sol, {},
                                   tc::realize_method_from_string(method), svm_options);
    } else {
        if (arrangement_path.empty()) {
            throw tc::ValidationError("reconstruct: Lasso solutions need --arrangement");
        }
        tc::ArrangementMatrix arr =
            tc::arrangement_from_text(tc::read_text_file(arrangement_path));
        if (!witnesses_path.empty()) {
            tc::attach_witnesses_from_csv(arr, tc::read_text_file(witnesses_path));
        }
        tc::SvmOptions svm_options;
        svm_options.seed = seed;
        net = tc::build_two_layer(data, sol, arr,
                                  tc::realize_method_from_string(method), svm_options);
    }
    tc::write_text_file(output, tc::to_json(net).dump(2) + "\n");
    std::cout << "network with " << net.width() << " subnetworks -> " << output << "\n";
    return 0;
}

int cmd_experiment(const std::string& spec_path, const std::string& output_dir) {
    tc::ExperimentSpec spec = tc::experiment_spec_from_json(
        nlohmann::json::parse(tc::read_text_file(spec_path)));
    if (!output_dir.empty()) spec.output_dir = output_dir;
    const auto rows = tc::run_experiment(spec);
    bool any_error = false;
    for (const auto& row : rows) {
        std::cout << row.method << " seed=" << row.seed;
        if (row.error.empty()) {
            std::cout << " objective=" << row.train_objective
                      << " train_acc=" << row.train_accuracy
                      << " test_acc=" << row.test_accuracy
                      << " converged=" << (row.converged ? "yes" : "no");
        } else {
            std::cout << " ERROR: " << row.error;
            any_error = true;
        }
        std::cout << "\n";
    }
    std::cout << "wrote " << spec.output_dir << "/metrics.csv\n";
    return any_error ? 2 : 0;
}

int cmd_verify(const std::string& network_path, const std::string& csv,
               const std::string& label, double beta, const std::string& loss,
               const std::string& solution_path, const std::string& arrangement_path) {
    const tc::Dataset data = tc::load_csv_full(csv, label);
    const tc::ThresholdNetwork net =
        tc::network_from_json(nlohmann::json::parse(tc::read_text_file(network_path)));

    tc::RegularizedObjective objective_spec;
    objective_spec.beta = beta;
    objective_spec.loss = tc::loss_from_string(loss);
    objective_spec.form = tc::RegularizerForm::weight_decay;
    std::cout << "weight_decay objective: "
              << tc::objective(net, data, objective_spec) << "\n";
    if (net.canonical()) {
        objective_spec.form = tc::RegularizerForm::l1_canonical;
        std::cout << "l1_canonical objective: "
                  << tc::objective(net, data, objective_spec) << "\n";
    }
    std::cout << "train accuracy: "
              << tc::sign_accuracy(tc::forward(net, data), data.labels) << "\n";

    if (!solution_path.empty()) {
        const tc::ConvexSolution sol = tc::solution_from_json(
            nlohmann::json::parse(tc::read_text_file(solution_path)));
        if (sol.is_delta_form) {
            std::cout << "closed-form Moreau residual: " << sol.kkt_residual << "\n";
        } else {
            if (arrangement_path.empty()) {
                throw tc::ValidationError("verify: KKT check needs --arrangement");
            }
            const tc::ArrangementMatrix arr =
                tc::arrangement_from_text(tc::read_text_file(arrangement_path));
            const tc::LassoProblem prob = tc::LassoProblem::from_arrangements(
                arr, data.labels, sol.beta, sol.loss);
            const tc::KktReport report = tc::kkt_check(prob, sol, 1e-6);
            std::cout << "kkt: " << (report.pass ? "pass" : "FAIL")
                      << " max_violation=" << report.max_violation << "\n";
            if (!report.pass) return 2;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convex training of threshold networks"};
    app.require_subcommand(1);

    // enumerate
    auto* enumerate = app.add_subcommand("enumerate", "data -> arrangement pattern file");
    std::string en_csv, en_label, en_output = "arrangements.txt", en_witnesses;
    bool en_bias = false;
    std::uint64_t en_budget = 1u << 20, en_seed = 0;
    int en_sampled = 0;
    enumerate->add_option("--csv", en_csv, "numeric CSV of features")->required();
    enumerate->add_option("--label", en_label, "column to drop before enumerating");
    enumerate->add_flag("--bias", en_bias, "append an all-ones column");
    enumerate->add_option("--budget", en_budget, "subset budget for exact enumeration");
    enumerate->add_option("--sampled", en_sampled, "sample this many Gaussian patterns instead");
    enumerate->add_option("--seed", en_seed, "seed for --sampled");
    enumerate->add_option("--output", en_output, "arrangement file to write");
    enumerate->add_option("--witnesses", en_witnesses, "witness CSV sidecar to write");

    // train-convex
    auto* train_convex = app.add_subcommand("train-convex", "solve the Lasso over arrangements");
    std::string tc_csv, tc_label, tc_method = "exact", tc_loss = "squared";
    std::string tc_output = "solution.json", tc_arr_out;
    double tc_beta = 1e-3;
    int tc_samples = 100;
    std::uint64_t tc_seed = 0;
    train_convex->add_option("--csv", tc_csv)->required();
    train_convex->add_option("--label", tc_label, "label column")->required();
    train_convex->add_option("--beta", tc_beta, "regularization coefficient");
    train_convex->add_option("--method", tc_method, "exact | sampled");
    train_convex->add_option("--samples", tc_samples, "pattern count for --method sampled");
    train_convex->add_option("--loss", tc_loss, "squared | logistic | hinge");
    train_convex->add_option("--seed", tc_seed);
    train_convex->add_option("--output", tc_output, "solution JSON");
    train_convex->add_option("--arrangement-out", tc_arr_out, "also write the arrangement file");

    // train-ste
    auto* train_ste = app.add_subcommand("train-ste", "straight-through-estimator baseline");
    std::string ts_csv, ts_label, ts_surrogate = "identity", ts_prefix = "ste";
    double ts_lr = 0.05, ts_beta = 1e-3;
    int ts_epochs = 200, ts_trials = 1, ts_batch = 32;
    std::vector<int> ts_widths{50};
    std::uint64_t ts_seed = 0;
    train_ste->add_option("--csv", ts_csv)->required();
    train_ste->add_option("--label", ts_label)->required();
    train_ste->add_option("--surrogate", ts_surrogate,
                          "identity | relu | leaky_relu | clipped_relu");
    train_ste->add_option("--lr", ts_lr, "initial learning rate");
    train_ste->add_option("--epochs", ts_epochs);
    train_ste->add_option("--trials", ts_trials, "independent initializations");
    train_ste->add_option("--width", ts_widths, "hidden widths (repeatable)");
    train_ste->add_option("--beta", ts_beta);
    train_ste->add_option("--batch-size", ts_batch);
    train_ste->add_option("--seed", ts_seed);
    train_ste->add_option("--output-prefix", ts_prefix, "trace JSON prefix");

    // reconstruct
    auto* reconstruct = app.add_subcommand("reconstruct", "solution + data -> network JSON");
    std::string rc_solution, rc_csv, rc_label, rc_arrangement, rc_witnesses;
    std::string rc_method = "pinv", rc_output = "network.json";
    std::uint64_t rc_seed = 0;
    reconstruct->add_option("--solution", rc_solution)->required();
    reconstruct->add_option("--csv", rc_csv)->required();
    reconstruct->add_option("--label", rc_label)->required();
    reconstruct->add_option("--arrangement", rc_arrangement, "needed for Lasso solutions");
    reconstruct->add_option("--witnesses", rc_witnesses, "witness CSV for method=witness");
    reconstruct->add_option("--method", rc_method, "witness | pinv | svm");
    reconstruct->add_option("--seed", rc_seed, "seed for the svm route");
    reconstruct->add_option("--output", rc_output);

    // experiment
    auto* experiment = app.add_subcommand("experiment", "run an experiment spec JSON");
    std::string ex_spec, ex_output;
    experiment->add_option("--spec", ex_spec, "experiment spec JSON")->required();
    experiment->add_option("--output-dir", ex_output, "override spec output_dir");

    // verify
    auto* verify = app.add_subcommand("verify", "network JSON + data -> objective/KKT report");
    std::string vf_network, vf_csv, vf_label, vf_loss = "squared";
    std::string vf_solution, vf_arrangement;
    double vf_beta = 1e-3;
    verify->add_option("--network", vf_network)->required();
    verify->add_option("--csv", vf_csv)->required();
    verify->add_option("--label", vf_label)->required();
    verify->add_option("--beta", vf_beta);
    verify->add_option("--loss", vf_loss);
    verify->add_option("--solution", vf_solution, "solution JSON for a KKT check");
    verify->add_option("--arrangement", vf_arrangement, "arrangement file for the KKT check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (enumerate->parsed()) {
            return cmd_enumerate(en_csv, en_label, en_bias, en_budget, en_sampled,
                                 en_seed, en_output, en_witnesses);
        }
        if (train_convex->parsed()) {
            return cmd_train_convex(tc_csv, tc_label, tc_beta, tc_method, tc_samples,
                                    tc_loss, tc_seed, tc_output, tc_arr_out);
        }
        if (train_ste->parsed()) {
            return cmd_train_ste(ts_csv, ts_label, ts_surrogate, ts_lr, ts_epochs,
                                 ts_trials, ts_widths, ts_beta, ts_batch, ts_seed,
                                 ts_prefix);
        }
        if (reconstruct->parsed()) {
            return cmd_reconstruct(rc_solution, rc_csv, rc_label, rc_arrangement,
                                   rc_witnesses, rc_method, rc_seed, rc_output);
        }
        if (experiment->parsed()) {
            return cmd_experiment(ex_spec, ex_output);
        }
        if (verify->parsed()) {
            return cmd_verify(vf_network, vf_csv, vf_label, vf_beta, vf_loss,
                              vf_solution, vf_arrangement);
        }
    } catch (const tc::ValidationError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "failure: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
