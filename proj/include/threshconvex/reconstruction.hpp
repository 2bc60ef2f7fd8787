#pragma once

#include <cstdint>
#include <vector>

#include "threshconvex/arrangements.hpp"
#include "threshconvex/network.hpp"
#include "threshconvex/solver.hpp"

namespace threshconvex {

enum class RealizeMethod { witness, pinv, svm };

const char* to_string(RealizeMethod method);
RealizeMethod realize_method_from_string(const std::string& name);

// A hidden weight vector realizing an activation pattern on the training
// features: 1{Xw - shift >= 0} equals the pattern bits. Verified when built.
struct PatternRealization {
    PackedBits pattern;
    Eigen::VectorXd weight;
    double shift = 0.0;
    RealizeMethod method = RealizeMethod::witness;
};

// Least-squares route: w solves Xw ~ bits (minimum-norm solution, same as
// the pseudo-inverse), evaluated with a 0.5 threshold so preactivations that
// land near 0 or 1 snap to the intended side.
PatternRealization realize_pinv(const Eigen::MatrixXd& features,
                                const ArrangementPattern& pattern);
PatternRealization realize_pinv(const Dataset& data, const ArrangementPattern& pattern);

struct SvmOptions {
    int iterations = 20000;
    std::uint64_t seed = 0;
    double cost = 1e4;  // margin-violation penalty
};

// Max-margin route: labels are 2*bits - 1 and a linear classifier through
// the origin is trained by seeded stochastic subgradient descent with
// averaging. Only sign correctness is guaranteed; margin quality is
// best-effort.
PatternRealization realize_svm(const Eigen::MatrixXd& features,
                               const ArrangementPattern& pattern,
                               const SvmOptions& options = {});
PatternRealization realize_svm(const Dataset& data, const ArrangementPattern& pattern,
                               const SvmOptions& options = {});

// Uses the pattern's stored witness directly.
PatternRealization realize_witness(const Eigen::MatrixXd& features,
                                   const ArrangementPattern& pattern);

// Superlevel-set decomposition of a nonnegative vector:
//   v = scale * sum_i gamma_i * atom_i,  gamma >= 0,  sum gamma = 1,
// with binary atoms 1{v >= value_k} over the distinct positive values.
struct CaratheodoryDecomposition {
    double scale = 0.0;
    std::vector<PackedBits> atoms;
    std::vector<double> gammas;

    Eigen::VectorXd recombine(int n) const;
};

CaratheodoryDecomposition caratheodory_decompose(const Eigen::VectorXd& v);

// Builds the two-layer network matching a Lasso solution: one neuron per
// support index, hidden weight from the chosen realization route, amplitude
// 1, output weight equal to the coefficient. The canonical l1 objective of
// the result equals the convex objective.
ThresholdNetwork build_two_layer(const Dataset& data, const ConvexSolution& sol,
                                 const ArrangementMatrix& arr, RealizeMethod method,
                                 const SvmOptions& svm_options = {});

// Fixed random threshold layers producing the representation the final
// neurons are realized on (empty = realize directly on the data).
struct HiddenStack {
    std::vector<Eigen::MatrixXd> weights;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

// Builds a network reproducing the closed-form solution delta exactly:
// the positive and negative parts are Caratheodory-decomposed and each atom
// becomes one neuron (amplitude +1 for positive atoms, -1 for negative
// ones, checked by evaluation). Uses at most n+2 neurons.
ThresholdNetwork build_from_delta(const Dataset& data, const ConvexSolution& sol,
                                  const HiddenStack& hidden = {},
                                  RealizeMethod method = RealizeMethod::pinv,
                                  const SvmOptions& svm_options = {});

}  // namespace threshconvex
