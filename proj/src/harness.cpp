#include "threshconvex/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "threshconvex/io.hpp"
#include "threshconvex/reconstruction.hpp"
#include "threshconvex/rng.hpp"
#include "threshconvex/solver.hpp"

namespace threshconvex {

namespace {

double sign_of(double x) { return step_at_zero(x) ? 1.0 : -1.0; }

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

CsvTable parse_numeric_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("CSV: empty input");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    CsvTable table;
    {
        std::istringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            table.header.push_back(cell);
        }
    }
    const std::size_t cols = table.header.size();
    if (cols == 0) {
        throw ValidationError("CSV: header row has no columns");
    }

    std::vector<std::vector<double>> rows;
    int line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row_stream(line);
        std::string cell;
        std::vector<double> row;
        row.reserve(cols);
        std::size_t col = 0;
        while (std::getline(row_stream, cell, ',')) {
            ++col;
            try {
                std::size_t used = 0;
                const double value = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                row.push_back(value);
            } catch (const std::exception&) {
                throw ValidationError("CSV: non-numeric cell '" + cell + "' at row " +
                                      std::to_string(line_number) + ", column " +
                                      std::to_string(col));
            }
        }
        if (row.size() != cols) {
            throw ValidationError("CSV: row " + std::to_string(line_number) + " has " +
                                  std::to_string(row.size()) + " cells, expected " +
                                  std::to_string(cols));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ValidationError("CSV: no data rows");
    }

    table.values.resize(static_cast<int>(rows.size()), static_cast<int>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            table.values(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
        }
    }
    return table;
}

int find_column(const CsvTable& table, const std::string& name) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (table.header[j] == name) return static_cast<int>(j);
    }
    throw ValidationError("CSV: missing label column '" + name + "'");
}

Eigen::VectorXd map_binary_labels(const Eigen::VectorXd& raw) {
    std::set<double> distinct(raw.data(), raw.data() + raw.size());
    if (distinct.size() != 2) return raw;
    const double low = *distinct.begin();
    Eigen::VectorXd mapped(raw.size());
    for (int i = 0; i < raw.size(); ++i) {
        mapped(i) = raw(i) == low ? -1.0 : 1.0;
    }
    return mapped;
}

// Standardize with the given statistics; near-constant columns keep scale 1.
void standardize(Eigen::MatrixXd& features, const Eigen::VectorXd& mean,
                 const Eigen::VectorXd& stddev) {
    for (int j = 0; j < features.cols(); ++j) {
        features.col(j) = (features.col(j).array() - mean(j)) / stddev(j);
    }
}

Dataset finalize_dataset(Eigen::MatrixXd features, Eigen::VectorXd labels) {
    Dataset out;
    out.features = std::move(features);
    out.labels = std::move(labels);
    out.has_bias = false;
    return out.with_bias();
}

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        if (c == ':' || c == '/' || c == ' ') c = '-';
    }
    return out;
}

}  // namespace

double sign_accuracy(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels) {
    if (predictions.size() != labels.size() || predictions.size() == 0) {
        throw ValidationError("sign_accuracy: size mismatch");
    }
    int hits = 0;
    for (int i = 0; i < predictions.size(); ++i) {
        if (sign_of(predictions(i)) == sign_of(labels(i))) ++hits;
    }
    return static_cast<double>(hits) / predictions.size();
}

SplitDataset load_csv_text(const std::string& text, const std::string& label_column,
                           double split_ratio, std::uint64_t seed) {
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
        throw ValidationError("load_csv: split_ratio must be in (0, 1)");
    }
    const CsvTable table = parse_numeric_csv(text);
    const int label_index = find_column(table, label_column);
    const int n = static_cast<int>(table.values.rows());
    const int d = static_cast<int>(table.values.cols()) - 1;
    if (d < 1) {
        throw ValidationError("load_csv: need at least one feature column");
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const int train_n = static_cast<int>(std::floor(split_ratio * n));
    if (train_n < 1 || train_n >= n) {
        throw ValidationError("load_csv: split leaves an empty train or test set");
    }

    Eigen::MatrixXd features(n, d);
    Eigen::VectorXd labels(n);
    for (int i = 0; i < n; ++i) {
        const int src = order[static_cast<std::size_t>(i)];
        int out_col = 0;
        for (int j = 0; j < table.values.cols(); ++j) {
            if (j == label_index) continue;
            features(i, out_col++) = table.values(src, j);
        }
        labels(i) = table.values(src, label_index);
    }
    labels = map_binary_labels(labels);

    Eigen::MatrixXd train_features = features.topRows(train_n);
    Eigen::MatrixXd test_features = features.bottomRows(n - train_n);

    const Eigen::VectorXd mean = train_features.colwise().mean();
    Eigen::VectorXd stddev(d);
    for (int j = 0; j < d; ++j) {
        const double var =
            (train_features.col(j).array() - mean(j)).square().sum() / train_n;
        stddev(j) = std::sqrt(var);
        if (stddev(j) < 1e-12) stddev(j) = 1.0;
    }
    standardize(train_features, mean, stddev);
    standardize(test_features, mean, stddev);

    SplitDataset out;
    out.train = finalize_dataset(std::move(train_features), labels.head(train_n));
    out.test = finalize_dataset(std::move(test_features), labels.tail(n - train_n));
    return out;
}

SplitDataset load_csv(const std::string& path, const std::string& label_column,
                      double split_ratio, std::uint64_t seed) {
    return load_csv_text(read_text_file(path), label_column, split_ratio, seed);
}

Dataset load_csv_full(const std::string& path, const std::string& label_column) {
    const CsvTable table = parse_numeric_csv(read_text_file(path));
    const int label_index = find_column(table, label_column);
    const int n = static_cast<int>(table.values.rows());
    const int d = static_cast<int>(table.values.cols()) - 1;
    if (d < 1) {
        throw ValidationError("load_csv: need at least one feature column");
    }
    Eigen::MatrixXd features(n, d);
    Eigen::VectorXd labels(n);
    for (int i = 0; i < n; ++i) {
        int out_col = 0;
        for (int j = 0; j < table.values.cols(); ++j) {
            if (j == label_index) continue;
            features(i, out_col++) = table.values(i, j);
        }
        labels(i) = table.values(i, label_index);
    }
    labels = map_binary_labels(labels);

    const Eigen::VectorXd mean = features.colwise().mean();
    Eigen::VectorXd stddev(d);
    for (int j = 0; j < d; ++j) {
        const double var = (features.col(j).array() - mean(j)).square().sum() / n;
        stddev(j) = std::sqrt(var);
        if (stddev(j) < 1e-12) stddev(j) = 1.0;
    }
    standardize(features, mean, stddev);
    return finalize_dataset(std::move(features), std::move(labels));
}

Eigen::MatrixXd load_csv_matrix(const std::string& path, const std::string& drop_column) {
    const CsvTable table = parse_numeric_csv(read_text_file(path));
    if (drop_column.empty()) {
        return table.values;
    }
    const int drop = find_column(table, drop_column);
    Eigen::MatrixXd out(table.values.rows(), table.values.cols() - 1);
    int out_col = 0;
    for (int j = 0; j < table.values.cols(); ++j) {
        if (j == drop) continue;
        out.col(out_col++) = table.values.col(j);
    }
    return out;
}

SyntheticKind synthetic_from_string(const std::string& name) {
    if (name == "two_layer_gt") return SyntheticKind::two_layer_gt;
    if (name == "three_layer_gt") return SyntheticKind::three_layer_gt;
    if (name == "one_d") return SyntheticKind::one_d;
    throw ValidationError("unknown synthetic generator '" + name + "'");
}

const char* to_string(SyntheticKind kind) {
    switch (kind) {
        case SyntheticKind::two_layer_gt: return "two_layer_gt";
        case SyntheticKind::three_layer_gt: return "three_layer_gt";
        case SyntheticKind::one_d: return "one_d";
    }
    return "unknown";
}

namespace {

constexpr int kGroundTruthWidth = 20;

Eigen::VectorXd sgn_vector(const Eigen::VectorXd& v) {
    Eigen::VectorXd out(v.size());
    for (int i = 0; i < v.size(); ++i) out(i) = sign_of(v(i));
    return out;
}

struct GroundTruth {
    SyntheticKind kind;
    Eigen::MatrixXd w1, w2;
    Eigen::VectorXd w_out;

    Eigen::VectorXd label(const Eigen::MatrixXd& x) const {
        if (kind == SyntheticKind::two_layer_gt) {
            return sgn_vector((x * w1).array().tanh().matrix() * w_out);
        }
        const Eigen::MatrixXd h1 = (x * w1).array().tanh();
        const Eigen::MatrixXd h2 = (h1 * w2).array().tanh();
        return sgn_vector(h2 * w_out);
    }
};

Dataset make_one_d(std::uint64_t seed) {
    Dataset data;
    data.features.resize(5, 1);
    data.features << -2, -1, 0, 1, 2;
    // Labels from a random two-neuron threshold net on [x, 1].
    Rng rng(seed);
    const Eigen::MatrixXd w1 = rng.gaussian_matrix(2, 2);
    const Eigen::VectorXd s = rng.gaussian_vector(2);
    const Eigen::VectorXd w2 = rng.gaussian_vector(2);
    Eigen::MatrixXd augmented(5, 2);
    augmented.col(0) = data.features.col(0);
    augmented.col(1).setOnes();
    const Eigen::MatrixXd pre = augmented * w1;
    Eigen::VectorXd labels = Eigen::VectorXd::Zero(5);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 2; ++j) {
            labels(i) += (step_at_zero(pre(i, j)) ? s(j) : 0.0) * w2(j);
        }
    }
    data.labels = labels;
    return data;
}

}  // namespace

Dataset gen_synthetic(SyntheticKind kind, int n, int d, std::uint64_t seed) {
    return gen_synthetic_pair(kind, n, d, 0, seed).train;
}

SplitDataset gen_synthetic_pair(SyntheticKind kind, int n, int d, int test_n,
                                std::uint64_t seed) {
    SplitDataset out;
    if (kind == SyntheticKind::one_d) {
        out.train = make_one_d(seed);
        out.test = out.train;
        return out;
    }
    if (n < 1 || d < 1) {
        throw ValidationError("gen_synthetic: n and d must be >= 1");
    }
    Rng rng(seed);
    GroundTruth gt;
    gt.kind = kind;
    gt.w1 = rng.gaussian_matrix(d, kGroundTruthWidth);
    if (kind == SyntheticKind::three_layer_gt) {
        gt.w2 = rng.gaussian_matrix(kGroundTruthWidth, kGroundTruthWidth);
    }
    gt.w_out = rng.gaussian_vector(kGroundTruthWidth);

    out.train.features = rng.gaussian_matrix(n, d);
    out.train.labels = gt.label(out.train.features);
    if (test_n > 0) {
        out.test.features = rng.gaussian_matrix(test_n, d);
        out.test.labels = gt.label(out.test.features);
    } else {
        out.test = out.train;
    }
    return out;
}

Dataset RepresentationTransform::apply(const Dataset& data) const {
    if (data.dim() != h.rows()) {
        throw ValidationError("RepresentationTransform: feature dimension " +
                              std::to_string(data.dim()) + " does not match H rows " +
                              std::to_string(h.rows()));
    }
    const Eigen::MatrixXd pre = data.features * h;
    Dataset out;
    out.features.resize(pre.rows(), pre.cols());
    for (int i = 0; i < pre.rows(); ++i) {
        for (int j = 0; j < pre.cols(); ++j) {
            out.features(i, j) = step_at_zero(pre(i, j)) ? 1.0 : 0.0;
        }
    }
    out.labels = data.labels;
    out.has_bias = false;
    return out.with_bias();
}

TransformedDataset representation_transform(const Dataset& data, int m,
                                            std::uint64_t seed) {
    if (m < 1) {
        throw ValidationError("representation_transform: M must be >= 1");
    }
    data.validate();
    Rng rng(seed);
    TransformedDataset out;
    out.transform.h = rng.gaussian_matrix(data.dim(), m);
    out.data = out.transform.apply(data);
    return out;
}

void ExperimentSpec::validate() const {
    if (methods.empty()) {
        throw ValidationError("ExperimentSpec: at least one method required");
    }
    if (seeds.empty()) {
        throw ValidationError("ExperimentSpec: seed list must not be empty");
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
        throw ValidationError("ExperimentSpec: split_ratio must be in (0, 1)");
    }
    const bool has_csv = !csv_path.empty();
    const bool has_synthetic = !synthetic.empty();
    if (has_csv == has_synthetic) {
        throw ValidationError("ExperimentSpec: exactly one of csv_path/synthetic required");
    }
    if (has_csv && label_column.empty()) {
        throw ValidationError("ExperimentSpec: csv datasets need label_column");
    }
    if (has_synthetic) {
        synthetic_from_string(synthetic);
    }
    if (widths.empty()) {
        throw ValidationError("ExperimentSpec: widths must not be empty");
    }
    if (output_dir.empty()) {
        throw ValidationError("ExperimentSpec: output_dir required");
    }
}

nlohmann::json to_json(const ExperimentSpec& spec) {
    nlohmann::json dataset;
    if (!spec.csv_path.empty()) {
        dataset = {{"csv", spec.csv_path},
                   {"label_column", spec.label_column},
                   {"split_ratio", spec.split_ratio}};
    } else {
        dataset = {{"synthetic", spec.synthetic},
                   {"n", spec.n},
                   {"d", spec.d},
                   {"test_samples", spec.test_samples}};
    }
    return {{"name", spec.name},
            {"dataset", dataset},
            {"methods", spec.methods},
            {"beta", spec.beta},
            {"loss", to_string(spec.loss)},
            {"widths", spec.widths},
            {"seeds", spec.seeds},
            {"representation_width", spec.representation_width},
            {"ste", {{"learning_rate", spec.learning_rate},
                     {"epochs", spec.epochs},
                     {"batch_size", spec.batch_size}}},
            {"output_dir", spec.output_dir}};
}

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
    ExperimentSpec spec;
    spec.name = j.value("name", spec.name);
    const auto& dataset = j.at("dataset");
    if (dataset.contains("csv")) {
        spec.csv_path = dataset.at("csv").get<std::string>();
        spec.label_column = dataset.value("label_column", std::string{});
        spec.split_ratio = dataset.value("split_ratio", spec.split_ratio);
    } else {
        spec.synthetic = dataset.at("synthetic").get<std::string>();
        spec.n = dataset.value("n", 0);
        spec.d = dataset.value("d", 0);
        spec.test_samples = dataset.value("test_samples", spec.test_samples);
    }
    spec.methods = j.at("methods").get<std::vector<std::string>>();
    spec.beta = j.value("beta", spec.beta);
    if (j.contains("loss")) spec.loss = loss_from_string(j.at("loss").get<std::string>());
    if (j.contains("widths")) spec.widths = j.at("widths").get<std::vector<int>>();
    spec.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    spec.representation_width = j.value("representation_width", 0);
    if (j.contains("ste")) {
        const auto& ste = j.at("ste");
        spec.learning_rate = ste.value("learning_rate", spec.learning_rate);
        spec.epochs = ste.value("epochs", spec.epochs);
        spec.batch_size = ste.value("batch_size", spec.batch_size);
    }
    spec.output_dir = j.value("output_dir", spec.output_dir);
    return spec;
}

namespace {

struct CurvePoint {
    std::string method;
    std::uint64_t seed;
    int epoch;  // -1 marks the convex reference level
    double objective;
};

struct CellResult {
    MetricsRow row;
    std::vector<CurvePoint> curve;
};

SplitDataset make_datasets(const ExperimentSpec& spec, std::uint64_t seed) {
    if (!spec.csv_path.empty()) {
        return load_csv(spec.csv_path, spec.label_column, spec.split_ratio, seed);
    }
    return gen_synthetic_pair(synthetic_from_string(spec.synthetic), spec.n, spec.d,
                              spec.test_samples, seed);
}

// Hidden layer weight mapping biased inputs to the biased representation:
// [H | 0]; the zero column thresholds to a constant one, reproducing the
// appended bias feature.
Eigen::MatrixXd augmented_transform(const Eigen::MatrixXd& h) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(h.rows(), h.cols() + 1);
    w.leftCols(h.cols()) = h;
    return w;
}

CellResult run_cell(const ExperimentSpec& spec, const std::string& method,
                    std::uint64_t seed, const std::filesystem::path& out_dir) {
    CellResult result;
    result.row.method = method;
    result.row.seed = seed;
    const auto start = std::chrono::steady_clock::now();

    try {
        const SplitDataset split = make_datasets(spec, seed);
        const Dataset train = split.train.with_bias();
        const Dataset test = split.test.with_bias();
        const std::string stem =
            sanitize(method) + "_" + std::to_string(seed);

        ThresholdNetwork net;
        if (method == "convex-exact" || method == "convex-lasso") {
            ArrangementMatrix arr;
            if (method == "convex-exact") {
                arr = enumerate_exact(train);
            } else {
                // Sampled pattern count matches the STE width for a fair
                // comparison.
                arr = sample_arrangements(train, spec.widths.back(), seed);
            }
            const LassoProblem prob =
                LassoProblem::from_arrangements(arr, train.labels, spec.beta, spec.loss);
            SolveOptions options;
            options.tol = 1e-11;
            const ConvexSolution sol = lasso_solve(prob, options);
            bool certified = sol.converged;
            if (spec.loss != LossKind::hinge) {
                certified = certified && kkt_check(prob, sol, 1e-6).pass;
            }
            net = build_two_layer(train, sol, arr, RealizeMethod::witness);
            result.row.train_objective = sol.objective_value;
            result.row.converged = certified;
            write_text_file((out_dir / (stem + ".solution.json")).string(),
                            to_json(sol).dump(2) + "\n");
            result.curve.push_back({method, seed, -1, sol.objective_value});
        } else if (method == "convex-pi" || method == "convex-svm") {
            if (spec.loss != LossKind::squared) {
                throw ValidationError("method " + method + " supports squared loss only");
            }
            const int m = spec.representation_width > 0
                              ? spec.representation_width
                              : std::max(64, 2 * train.n());
            const TransformedDataset transformed =
                representation_transform(train, m, seed);
            const ConvexSolution sol = closed_form_solve(train.labels, spec.beta);
            HiddenStack hidden;
            hidden.weights.push_back(augmented_transform(transformed.transform.h));
            const RealizeMethod realize = method == "convex-pi" ? RealizeMethod::pinv
                                                                : RealizeMethod::svm;
            SvmOptions svm_options;
            svm_options.seed = seed;
            net = build_from_delta(train, sol, hidden, realize, svm_options);
            result.row.train_objective = sol.objective_value;
            result.row.converged = sol.kkt_residual <= 1e-9;
            write_text_file((out_dir / (stem + ".solution.json")).string(),
                            to_json(sol).dump(2) + "\n");
            result.curve.push_back({method, seed, -1, sol.objective_value});
        } else if (method.rfind("ste:", 0) == 0) {
            SteConfig cfg;
            cfg.surrogate = surrogate_from_string(method.substr(4));
            cfg.learning_rate = spec.learning_rate;
            cfg.epochs = spec.epochs;
            cfg.batch_size = std::min(spec.batch_size, train.n());
            cfg.beta = spec.beta;
            cfg.seed = seed;
            const TrainTrace trace = ste_train(train, spec.widths, cfg);
            net = trace.final_network;
            result.row.train_objective = trace.final_objective();
            result.row.converged = !trace.diverged;
            write_text_file((out_dir / (stem + ".trace.json")).string(),
                            to_json(trace).dump(2) + "\n");
            for (std::size_t e = 0; e < trace.objectives.size(); ++e) {
                result.curve.push_back(
                    {method, seed, static_cast<int>(e), trace.objectives[e]});
            }
        } else {
            throw ValidationError("unknown method '" + method + "'");
        }

        result.row.train_accuracy = sign_accuracy(forward(net, train), train.labels);
        result.row.test_accuracy = sign_accuracy(forward(net, test), test.labels);
        write_text_file((out_dir / (sanitize(method) + "_" + std::to_string(seed) +
                                    ".network.json"))
                            .string(),
                        to_json(net).dump(2) + "\n");
    } catch (const std::exception& err) {
        result.row.error = err.what();
        result.row.train_objective = std::numeric_limits<double>::quiet_NaN();
        result.row.train_accuracy = std::numeric_limits<double>::quiet_NaN();
        result.row.test_accuracy = std::numeric_limits<double>::quiet_NaN();
        result.row.converged = false;
    }

    result.row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

int worker_count(std::size_t cells) {
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (const char* env = std::getenv("THRESHCONVEX_WORKERS")) {
        try {
            workers = std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            throw ValidationError("THRESHCONVEX_WORKERS is not an integer");
        }
    }
    return std::min<int>(workers, static_cast<int>(cells));
}

}  // namespace

std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const std::filesystem::path out_dir(spec.output_dir);
    std::filesystem::create_directories(out_dir);

    const std::string spec_echo = to_json(spec).dump(2) + "\n";
    write_text_file((out_dir / "spec.json").string(), spec_echo);
    const std::string spec_line = "# spec " + to_json(spec).dump() + "\n";

    struct Cell {
        std::string method;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& method : spec.methods) {
        for (std::uint64_t seed : spec.seeds) {
            cells.push_back({method, seed});
        }
    }

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    const int workers = worker_count(cells.size());
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t index = next.fetch_add(1);
                if (index >= cells.size()) break;
                results[index] =
                    run_cell(spec, cells[index].method, cells[index].seed, out_dir);
            }
        });
    }
    for (auto& thread : pool) thread.join();

    // metrics.csv: deterministic cell order, no wall-clock fields (those go
    // to timings.csv so reruns stay byte-identical).
    std::ostringstream metrics;
    metrics << spec_line;
    metrics << "method,seed,train_objective,train_accuracy,test_accuracy,converged,error\n";
    std::ostringstream timings;
    timings << "method,seed,wall_seconds\n";
    std::ostringstream curves;
    curves << spec_line;
    curves << "method,seed,epoch,objective\n";

    std::vector<MetricsRow> rows;
    rows.reserve(results.size());
    for (const auto& result : results) {
        const auto& row = result.row;
        metrics << row.method << ',' << row.seed << ','
                << format_double(row.train_objective) << ','
                << format_double(row.train_accuracy) << ','
                << format_double(row.test_accuracy) << ','
                << (row.converged ? "true" : "false") << ',' << row.error << '\n';
        timings << row.method << ',' << row.seed << ','
                << format_double(row.wall_seconds) << '\n';
        for (const auto& point : result.curve) {
            curves << point.method << ',' << point.seed << ',' << point.epoch << ','
                   << format_double(point.objective) << '\n';
        }
        rows.push_back(row);
    }
    write_text_file((out_dir / "metrics.csv").string(), metrics.str());
    write_text_file((out_dir / "timings.csv").string(), timings.str());
    write_text_file((out_dir / "curves.csv").string(), curves.str());
    return rows;
}

}  // namespace threshconvex
