#include "threshconvex/io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace threshconvex {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const int rows = static_cast<int>(j.size());
    const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int c = 0; c < cols; ++c) {
            m(i, c) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<int>(j.size()));
    for (int i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

}  // namespace

nlohmann::json to_json(const ThresholdNetwork& net) {
    json subnets = json::array();
    for (const auto& sub : net.subnetworks) {
        json layers = json::array();
        for (const auto& layer : sub.layers) {
            layers.push_back({{"weight", matrix_to_json(layer.weight)},
                              {"amplitude", vector_to_json(layer.amplitude)},
                              {"shift", vector_to_json(layer.shift)}});
        }
        subnets.push_back({{"layers", std::move(layers)},
                           {"output_weight", sub.output_weight}});
    }
    return {{"input_dim", net.input_dim},
            {"depth", net.depth},
            {"subnetworks", std::move(subnets)}};
}

ThresholdNetwork network_from_json(const nlohmann::json& j) {
    ThresholdNetwork net;
    net.input_dim = j.at("input_dim").get<int>();
    net.depth = j.at("depth").get<int>();
    for (const auto& jsub : j.at("subnetworks")) {
        Subnetwork sub;
        for (const auto& jlayer : jsub.at("layers")) {
            sub.layers.push_back(NetworkLayer::make(
                matrix_from_json(jlayer.at("weight")),
                vector_from_json(jlayer.at("amplitude")),
                vector_from_json(jlayer.at("shift"))));
        }
        sub.output_weight = jsub.at("output_weight").get<double>();
        net.subnetworks.push_back(std::move(sub));
    }
    net.validate();
    return net;
}

nlohmann::json to_json(const ConvexSolution& sol) {
    json j = {{"objective", sol.objective_value},
              {"beta", sol.beta},
              {"loss", to_string(sol.loss)},
              {"support", sol.support},
              {"kkt_residual", sol.kkt_residual},
              {"iterations", sol.iterations},
              {"converged", sol.converged}};
    if (sol.is_delta_form) {
        j["delta"] = vector_to_json(sol.delta);
    } else {
        j["coefficients"] = vector_to_json(sol.coefficients);
    }
    return j;
}

ConvexSolution solution_from_json(const nlohmann::json& j) {
    ConvexSolution sol;
    sol.objective_value = j.at("objective").get<double>();
    sol.beta = j.at("beta").get<double>();
    sol.loss = loss_from_string(j.at("loss").get<std::string>());
    sol.support = j.at("support").get<std::vector<int>>();
    sol.kkt_residual = j.at("kkt_residual").get<double>();
    sol.iterations = j.at("iterations").get<int>();
    sol.converged = j.at("converged").get<bool>();
    if (j.contains("delta")) {
        sol.delta = vector_from_json(j.at("delta"));
        sol.is_delta_form = true;
    } else {
        sol.coefficients = vector_from_json(j.at("coefficients"));
    }
    return sol;
}

nlohmann::json to_json(const SteConfig& cfg) {
    return {{"surrogate", to_string(cfg.surrogate)},
            {"leaky_slope", cfg.leaky_slope},
            {"clip_cap", cfg.clip_cap},
            {"learning_rate", cfg.learning_rate},
            {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"beta", cfg.beta},
            {"seed", cfg.seed},
            {"lr_decay_factor", cfg.lr_decay_factor},
            {"lr_patience", cfg.lr_patience},
            {"lr_threshold", cfg.lr_threshold}};
}

SteConfig ste_config_from_json(const nlohmann::json& j) {
    SteConfig cfg;
    cfg.surrogate = surrogate_from_string(j.at("surrogate").get<std::string>());
    cfg.leaky_slope = j.value("leaky_slope", cfg.leaky_slope);
    cfg.clip_cap = j.value("clip_cap", cfg.clip_cap);
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.beta = j.at("beta").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.lr_decay_factor = j.value("lr_decay_factor", cfg.lr_decay_factor);
    cfg.lr_patience = j.value("lr_patience", cfg.lr_patience);
    cfg.lr_threshold = j.value("lr_threshold", cfg.lr_threshold);
    return cfg;
}

nlohmann::json to_json(const TrainTrace& trace) {
    return {{"objectives", trace.objectives},
            {"learning_rates", trace.learning_rates},
            {"final_network", to_json(trace.final_network)},
            {"wall_seconds", trace.wall_seconds},
            {"seed", trace.seed},
            {"diverged", trace.diverged},
            {"config", to_json(trace.config)}};
}

TrainTrace trace_from_json(const nlohmann::json& j) {
    TrainTrace trace;
    trace.objectives = j.at("objectives").get<std::vector<double>>();
    trace.learning_rates = j.value("learning_rates", std::vector<double>{});
    trace.final_network = network_from_json(j.at("final_network"));
    trace.wall_seconds = j.at("wall_seconds").get<double>();
    trace.seed = j.at("seed").get<std::uint64_t>();
    trace.diverged = j.at("diverged").get<bool>();
    trace.config = ste_config_from_json(j.at("config"));
    return trace;
}

std::string arrangement_to_text(const ArrangementMatrix& arr) {
    std::ostringstream out;
    out << arr.n << ' ' << arr.pattern_count() << ' ' << arr.layer << '\n';
    for (const auto& pattern : arr.patterns) {
        out << pattern.bits.to_string() << '\n';
    }
    return out.str();
}

ArrangementMatrix arrangement_from_text(const std::string& text) {
    std::istringstream in(text);
    int n = 0, p = 0, layer = 0;
    if (!(in >> n >> p >> layer)) {
        throw ValidationError("arrangement_from_text: bad header, expected 'n P layer'");
    }
    std::vector<PackedBits> bits;
    bits.reserve(static_cast<std::size_t>(p));
    std::string line;
    std::getline(in, line);  // consume rest of header line
    for (int i = 0; i < p; ++i) {
        if (!std::getline(in, line)) {
            throw ValidationError("arrangement_from_text: expected " + std::to_string(p) +
                                  " pattern lines, got " + std::to_string(i));
        }
        if (static_cast<int>(line.size()) != n) {
            throw ValidationError("arrangement_from_text: line " + std::to_string(i + 1) +
                                  " has length " + std::to_string(line.size()) +
                                  ", expected " + std::to_string(n));
        }
        bits.push_back(PackedBits::from_string(line));
    }
    ArrangementMatrix arr = arrangement_from_bits(bits, n, layer);
    if (arr.pattern_count() != p) {
        throw ValidationError("arrangement_from_text: duplicate patterns in file");
    }
    return arr;
}

std::string witnesses_to_csv(const ArrangementMatrix& arr) {
    std::ostringstream out;
    out << "pattern";
    int dim = 0;
    for (const auto& pattern : arr.patterns) {
        if (pattern.witness.has_value()) {
            dim = static_cast<int>(pattern.witness->size());
            break;
        }
    }
    for (int j = 0; j < dim; ++j) out << ",w_" << j;
    out << '\n';
    char buffer[64];
    for (int i = 0; i < arr.pattern_count(); ++i) {
        const auto& witness = arr.patterns[static_cast<std::size_t>(i)].witness;
        if (!witness.has_value()) continue;
        out << i;
        for (int j = 0; j < witness->size(); ++j) {
            std::snprintf(buffer, sizeof(buffer), "%.17g", (*witness)(j));
            out << ',' << buffer;
        }
        out << '\n';
    }
    return out.str();
}

void attach_witnesses_from_csv(ArrangementMatrix& arr, const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) return;  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        const int index = std::stoi(cell);
        std::vector<double> values;
        while (std::getline(row, cell, ',')) {
            values.push_back(std::stod(cell));
        }
        if (index < 0 || index >= arr.pattern_count()) {
            throw ValidationError("attach_witnesses_from_csv: pattern index " +
                                  std::to_string(index) + " out of range");
        }
        Eigen::VectorXd w(static_cast<int>(values.size()));
        for (std::size_t j = 0; j < values.size(); ++j) {
            w(static_cast<int>(j)) = values[j];
        }
        arr.patterns[static_cast<std::size_t>(index)].witness = w;
    }
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open '" + path + "' for writing");
    }
    out << contents;
    if (!out) {
        throw ValidationError("failed writing '" + path + "'");
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace threshconvex
