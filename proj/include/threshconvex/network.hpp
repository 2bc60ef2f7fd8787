#pragma once

#include <vector>

#include "threshconvex/types.hpp"

namespace threshconvex {

// One layer inside a subnetwork: preactivation Z * weight, then per neuron
// sigma_s(x) = amplitude * 1{x - shift >= 0}. Shifts default to zero; the
// reconstruction module uses 0.5 shifts for pseudo-inverse neurons.
struct NetworkLayer {
    Eigen::MatrixXd weight;     // fan_in x width
    Eigen::VectorXd amplitude;  // width
    Eigen::VectorXd shift;      // width

    int fan_in() const { return static_cast<int>(weight.rows()); }
    int width() const { return static_cast<int>(weight.cols()); }

    static NetworkLayer make(Eigen::MatrixXd w, Eigen::VectorXd amp);
    static NetworkLayer make(Eigen::MatrixXd w, Eigen::VectorXd amp,
                             Eigen::VectorXd shift);
};

// A parallel subnetwork. Its layer stack narrows to a single neuron whose
// activation (0 or its amplitude) is scaled by output_weight.
struct Subnetwork {
    std::vector<NetworkLayer> layers;  // depth-1 layers, last width 1
    double output_weight = 0.0;
};

// Sum of parallel subnetworks. A two-layer network is the special case
// where every subnetwork is a single hidden neuron. Instances are treated
// as immutable once built; forward/objective are pure.
struct ThresholdNetwork {
    int input_dim = 0;
    int depth = 2;  // weight layers per subnetwork + 1; kept explicit so an
                    // empty network still knows its shape
    std::vector<Subnetwork> subnetworks;

    int width() const { return static_cast<int>(subnetworks.size()); }

    void validate() const;

    // True when every subnetwork's last amplitude has absolute value 1.
    bool canonical() const;

    // Two-layer convenience constructor: hidden weight columns, amplitudes,
    // output weights, optional per-neuron shifts.
    static ThresholdNetwork two_layer(const Eigen::MatrixXd& hidden_weights,
                                      const Eigen::VectorXd& amplitudes,
                                      const Eigen::VectorXd& output_weights);
    static ThresholdNetwork two_layer(const Eigen::MatrixXd& hidden_weights,
                                      const Eigen::VectorXd& amplitudes,
                                      const Eigen::VectorXd& output_weights,
                                      const Eigen::VectorXd& shifts);
};

Eigen::VectorXd forward(const ThresholdNetwork& net, const Eigen::MatrixXd& features);
Eigen::VectorXd forward(const ThresholdNetwork& net, const Dataset& data);

double objective(const ThresholdNetwork& net, const Dataset& data,
                 const RegularizedObjective& obj);

// Regularizer terms on their own (no data fit).
double weight_decay_penalty(const ThresholdNetwork& net, double beta);
double l1_canonical_penalty(const ThresholdNetwork& net, double beta);

struct CanonicalizeReport {
    int dropped_zero_amplitude = 0;
};

// Rescales each subnetwork so the last amplitude is +-1 and the magnitude
// moves into the output weight. Forward outputs are bit-identical;
// subnetworks with zero last amplitude contribute nothing and are dropped.
ThresholdNetwork canonicalize(const ThresholdNetwork& net,
                              CanonicalizeReport* report = nullptr);

}  // namespace threshconvex
