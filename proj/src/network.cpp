#include "threshconvex/network.hpp"

#include <cmath>

namespace threshconvex {

NetworkLayer NetworkLayer::make(Eigen::MatrixXd w, Eigen::VectorXd amp) {
    Eigen::VectorXd zero_shift = Eigen::VectorXd::Zero(amp.size());
    return make(std::move(w), std::move(amp), std::move(zero_shift));
}

NetworkLayer NetworkLayer::make(Eigen::MatrixXd w, Eigen::VectorXd amp,
                                Eigen::VectorXd shift) {
    NetworkLayer layer;
    layer.weight = std::move(w);
    layer.amplitude = std::move(amp);
    layer.shift = std::move(shift);
    if (layer.amplitude.size() != layer.weight.cols() ||
        layer.shift.size() != layer.weight.cols()) {
        throw ValidationError("NetworkLayer: amplitude/shift length must equal width");
    }
    return layer;
}

void ThresholdNetwork::validate() const {
    if (depth < 2) {
        throw ValidationError("ThresholdNetwork: depth must be at least 2");
    }
    for (std::size_t k = 0; k < subnetworks.size(); ++k) {
        const auto& sub = subnetworks[k];
        if (static_cast<int>(sub.layers.size()) != depth - 1) {
            throw ValidationError("ThresholdNetwork: subnetwork " + std::to_string(k) +
                                  " has " + std::to_string(sub.layers.size()) +
                                  " layers, expected " + std::to_string(depth - 1));
        }
        int expected = input_dim;
        for (std::size_t l = 0; l < sub.layers.size(); ++l) {
            const auto& layer = sub.layers[l];
            if (layer.fan_in() != expected) {
                throw ValidationError(
                    "ThresholdNetwork: subnetwork " + std::to_string(k) + " layer " +
                    std::to_string(l + 1) + " expects fan-in " +
                    std::to_string(layer.fan_in()) + ", previous width is " +
                    std::to_string(expected));
            }
            if (layer.amplitude.size() != layer.width() ||
                layer.shift.size() != layer.width()) {
                throw ValidationError("ThresholdNetwork: subnetwork " + std::to_string(k) +
                                      " layer " + std::to_string(l + 1) +
                                      " amplitude/shift size mismatch");
            }
            expected = layer.width();
        }
        if (expected != 1) {
            throw ValidationError("ThresholdNetwork: subnetwork " + std::to_string(k) +
                                  " must end in a single neuron, got width " +
                                  std::to_string(expected));
        }
    }
}

bool ThresholdNetwork::canonical() const {
    for (const auto& sub : subnetworks) {
        if (sub.layers.empty()) return false;
        if (std::abs(sub.layers.back().amplitude(0)) != 1.0) return false;
    }
    return true;
}

ThresholdNetwork ThresholdNetwork::two_layer(const Eigen::MatrixXd& hidden_weights,
                                             const Eigen::VectorXd& amplitudes,
                                             const Eigen::VectorXd& output_weights) {
    return two_layer(hidden_weights, amplitudes, output_weights,
                     Eigen::VectorXd::Zero(amplitudes.size()));
}

ThresholdNetwork ThresholdNetwork::two_layer(const Eigen::MatrixXd& hidden_weights,
                                             const Eigen::VectorXd& amplitudes,
                                             const Eigen::VectorXd& output_weights,
                                             const Eigen::VectorXd& shifts) {
    const int m = static_cast<int>(hidden_weights.cols());
    if (amplitudes.size() != m || output_weights.size() != m || shifts.size() != m) {
        throw ValidationError("two_layer: column/amplitude/output/shift counts differ");
    }
    ThresholdNetwork net;
    net.input_dim = static_cast<int>(hidden_weights.rows());
    net.depth = 2;
    net.subnetworks.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        Subnetwork sub;
        sub.layers.push_back(NetworkLayer::make(hidden_weights.col(j),
                                                amplitudes.segment(j, 1),
                                                shifts.segment(j, 1)));
        sub.output_weight = output_weights(j);
        net.subnetworks.push_back(std::move(sub));
    }
    return net;
}

namespace {

Eigen::MatrixXd apply_layer(const NetworkLayer& layer, const Eigen::MatrixXd& input) {
    Eigen::MatrixXd pre = input * layer.weight;
    for (int j = 0; j < pre.cols(); ++j) {
        const double amp = layer.amplitude(j);
        const double shift = layer.shift(j);
        for (int i = 0; i < pre.rows(); ++i) {
            pre(i, j) = step_at_zero(pre(i, j) - shift) ? amp : 0.0;
        }
    }
    return pre;
}

}  // namespace

Eigen::VectorXd forward(const ThresholdNetwork& net, const Eigen::MatrixXd& features) {
    if (static_cast<int>(features.cols()) != net.input_dim) {
        throw ValidationError("forward: input has " + std::to_string(features.cols()) +
                              " features, network expects " +
                              std::to_string(net.input_dim));
    }
    net.validate();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(features.rows());
    for (const auto& sub : net.subnetworks) {
        Eigen::MatrixXd z = features;
        for (const auto& layer : sub.layers) {
            z = apply_layer(layer, z);
        }
        for (int i = 0; i < out.size(); ++i) {
            out(i) += sub.output_weight * z(i, 0);
        }
    }
    return out;
}

Eigen::VectorXd forward(const ThresholdNetwork& net, const Dataset& data) {
    return forward(net, data.features);
}

double weight_decay_penalty(const ThresholdNetwork& net, double beta) {
    double sum = 0.0;
    for (const auto& sub : net.subnetworks) {
        for (const auto& layer : sub.layers) {
            sum += layer.weight.squaredNorm() + layer.amplitude.squaredNorm();
        }
        sum += sub.output_weight * sub.output_weight;
    }
    return 0.5 * beta * sum;
}

double l1_canonical_penalty(const ThresholdNetwork& net, double beta) {
    double sum = 0.0;
    for (const auto& sub : net.subnetworks) {
        sum += std::abs(sub.output_weight);
    }
    return beta * sum;
}

double objective(const ThresholdNetwork& net, const Dataset& data,
                 const RegularizedObjective& obj) {
    obj.validate();
    data.validate();
    if (obj.form == RegularizerForm::l1_canonical && !net.canonical()) {
        throw ValidationError(
            "objective: l1_canonical form requires a canonical network "
            "(run canonicalize first)");
    }
    const double fit = loss_value(obj.loss, forward(net, data), data.labels);
    const double penalty = obj.form == RegularizerForm::weight_decay
                               ? weight_decay_penalty(net, obj.beta)
                               : l1_canonical_penalty(net, obj.beta);
    return fit + penalty;
}

ThresholdNetwork canonicalize(const ThresholdNetwork& net, CanonicalizeReport* report) {
    net.validate();
    ThresholdNetwork out;
    out.input_dim = net.input_dim;
    out.depth = net.depth;
    int dropped = 0;
    for (const auto& sub : net.subnetworks) {
        const double s = sub.layers.back().amplitude(0);
        if (s == 0.0) {
            ++dropped;
            continue;
        }
        Subnetwork copy = sub;
        copy.layers.back().amplitude(0) = s > 0.0 ? 1.0 : -1.0;
        copy.output_weight = sub.output_weight * std::abs(s);
        out.subnetworks.push_back(std::move(copy));
    }
    if (report != nullptr) {
        report->dropped_zero_amplitude = dropped;
    }
    return out;
}

}  // namespace threshconvex
