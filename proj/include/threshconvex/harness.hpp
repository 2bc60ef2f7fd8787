#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "threshconvex/ste.hpp"
#include "threshconvex/types.hpp"

namespace threshconvex {

struct SplitDataset {
    Dataset train;
    Dataset test;
};

// Numeric CSV with a header row. Seeded shuffle, split_ratio of the rows
// (floored) become training data, features are standardized with training
// statistics, a bias column is appended, and two-valued label columns are
// mapped to {-1, +1}.
SplitDataset load_csv(const std::string& path, const std::string& label_column,
                      double split_ratio, std::uint64_t seed);
SplitDataset load_csv_text(const std::string& text, const std::string& label_column,
                           double split_ratio, std::uint64_t seed);

// Whole file as one standardized training set (used by the single-shot CLI
// commands).
Dataset load_csv_full(const std::string& path, const std::string& label_column);

// Features only (no label column, no standardization), for `enumerate`.
Eigen::MatrixXd load_csv_matrix(const std::string& path,
                                const std::string& drop_column = "");

enum class SyntheticKind { two_layer_gt, three_layer_gt, one_d };

SyntheticKind synthetic_from_string(const std::string& name);
const char* to_string(SyntheticKind kind);

// Ground-truth generators. two_layer_gt: y = sgn(tanh(X W1) w2) with 20
// hidden units; three_layer_gt adds a second tanh layer; one_d is the fixed
// five-point line X = (-2,-1,0,1,2)^T labeled by a seeded random two-neuron
// threshold network.
Dataset gen_synthetic(SyntheticKind kind, int n, int d, std::uint64_t seed);

// Train plus a held-out set drawn from the same ground truth.
SplitDataset gen_synthetic_pair(SyntheticKind kind, int n, int d, int test_n,
                                std::uint64_t seed);

// Random threshold features 1{X H >= 0} with H ~ N(0,1)^{d x M}; a bias
// column is appended and H is kept for test-time reuse.
struct RepresentationTransform {
    Eigen::MatrixXd h;  // d x M

    Dataset apply(const Dataset& data) const;
};

struct TransformedDataset {
    Dataset data;
    RepresentationTransform transform;
};

TransformedDataset representation_transform(const Dataset& data, int m,
                                            std::uint64_t seed);

struct ExperimentSpec {
    std::string name = "experiment";

    // Dataset source: csv_path or synthetic (exactly one).
    std::string csv_path;
    std::string label_column;
    std::string synthetic;  // two_layer_gt | three_layer_gt | one_d
    int n = 0;
    int d = 0;
    int test_samples = 200;

    // convex-lasso | convex-exact | convex-pi | convex-svm | ste:<variant>
    std::vector<std::string> methods;
    double beta = 1e-3;
    LossKind loss = LossKind::squared;
    std::vector<int> widths{50};
    std::vector<std::uint64_t> seeds;
    double split_ratio = 0.8;
    int representation_width = 0;  // 0 = max(64, 2n) for convex-pi/svm

    double learning_rate = 0.05;
    int epochs = 200;
    int batch_size = 32;

    std::string output_dir = "experiment-out";

    void validate() const;
};

nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);

struct MetricsRow {
    std::string method;
    std::uint64_t seed = 0;
    double train_objective = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double wall_seconds = 0.0;
    bool converged = false;
    std::string error;  // empty on success
};

// Executes every method x seed cell (in parallel up to THRESHCONVEX_WORKERS)
// and writes metrics.csv, curves.csv, timings.csv plus per-cell JSON
// artifacts into spec.output_dir. Cell failures are recorded in their row;
// the run continues. metrics.csv and curves.csv are byte-deterministic for
// a fixed spec; wall-clock timings go to the timings.csv sidecar.
std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec);

// Fraction of samples whose prediction sign matches the label sign
// (1{x >= 0} mapped to +-1 on both sides).
double sign_accuracy(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels);

}  // namespace threshconvex
