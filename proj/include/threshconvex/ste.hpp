#pragma once

#include <cstdint>
#include <vector>

#include "threshconvex/network.hpp"
#include "threshconvex/types.hpp"

namespace threshconvex {

// Backward-pass replacement for the threshold activation's zero derivative.
enum class Surrogate { identity, relu, leaky_relu, clipped_relu };

const char* to_string(Surrogate surrogate);
Surrogate surrogate_from_string(const std::string& name);

struct SteConfig {
    Surrogate surrogate = Surrogate::identity;
    double leaky_slope = 0.01;
    double clip_cap = 1.0;
    double learning_rate = 0.01;
    int epochs = 200;
    int batch_size = 32;
    double beta = 0.0;
    std::uint64_t seed = 0;
    // Plateau decay: halve the rate after `patience` epochs without a
    // relative improvement of at least `threshold`.
    double lr_decay_factor = 0.5;
    int lr_patience = 10;
    double lr_threshold = 1e-4;

    void validate() const;
};

struct TrainTrace {
    std::vector<double> objectives;  // weight-decay objective after each epoch
    std::vector<double> learning_rates;
    ThresholdNetwork final_network;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    bool diverged = false;
    SteConfig config;

    double final_objective() const {
        return objectives.empty() ? std::numeric_limits<double>::quiet_NaN()
                                  : objectives.back();
    }
};

// Derivative substituted for d/dx 1{x >= 0} during backprop.
double surrogate_backward(const SteConfig& cfg, double preactivation);
double surrogate_backward(Surrogate s, double preactivation, double slope = 0.01,
                          double cap = 1.0);

// SGD training of a standard threshold MLP with a straight-through backward
// pass. The forward pass always uses the exact threshold; widths are the
// hidden layer sizes [m_1, ..., m_{L-1}]. For L >= 3 the exported parallel
// network duplicates the shared trunk into every subnetwork, so its
// parallel-form weight-decay penalty counts each copy; trace objectives are
// computed on the trained (shared-trunk) parameters.
TrainTrace ste_train(const Dataset& data, const std::vector<int>& widths,
                     const SteConfig& cfg);

struct MultiTrialResult {
    std::vector<TrainTrace> traces;
    int best_index = -1;  // smallest final objective among finished trials
};

// Repeats ste_train with seeds cfg.seed + 0 .. trials-1. A diverged trial is
// flagged in its trace and does not cancel the others.
MultiTrialResult multi_trial(const Dataset& data, const std::vector<int>& widths,
                             const SteConfig& cfg, int trials);

// Test hook: trains nothing, but runs one backward pass of the same
// machinery on a smooth debug network (activation s*x instead of the
// threshold) and compares against central finite differences. Returns the
// maximum relative gradient error.
double ste_gradient_check(const Dataset& data, const std::vector<int>& widths,
                          const SteConfig& cfg, double fd_step = 1e-6);

}  // namespace threshconvex
