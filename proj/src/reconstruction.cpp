#include "threshconvex/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "threshconvex/rng.hpp"

namespace threshconvex {

namespace {

// Indices where 1{Xw - shift >= 0} disagrees with the pattern.
std::vector<int> verify_realization(const Eigen::MatrixXd& features,
                                    const PackedBits& pattern,
                                    const Eigen::VectorXd& weight, double shift) {
    std::vector<int> mismatched;
    const Eigen::VectorXd pre = features * weight;
    for (int i = 0; i < pre.size(); ++i) {
        if (step_at_zero(pre(i) - shift) != pattern.get(i)) {
            mismatched.push_back(i);
        }
    }
    return mismatched;
}

std::string index_list(const std::vector<int>& indices) {
    std::string out;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(indices[i]);
    }
    return out;
}

Eigen::VectorXd pattern_as_vector(const PackedBits& bits) {
    Eigen::VectorXd v(bits.size());
    for (int i = 0; i < bits.size(); ++i) {
        v(i) = bits.get(i) ? 1.0 : 0.0;
    }
    return v;
}

PatternRealization realize_on(const Eigen::MatrixXd& features,
                              const ArrangementPattern& pattern, RealizeMethod method,
                              const SvmOptions& svm_options) {
    switch (method) {
        case RealizeMethod::witness: return realize_witness(features, pattern);
        case RealizeMethod::pinv: return realize_pinv(features, pattern);
        case RealizeMethod::svm: return realize_svm(features, pattern, svm_options);
    }
    throw ValidationError("realize: unknown method");
}

}  // namespace

const char* to_string(RealizeMethod method) {
    switch (method) {
        case RealizeMethod::witness: return "witness";
        case RealizeMethod::pinv: return "pinv";
        case RealizeMethod::svm: return "svm";
    }
    return "unknown";
}

RealizeMethod realize_method_from_string(const std::string& name) {
    if (name == "witness") return RealizeMethod::witness;
    if (name == "pinv") return RealizeMethod::pinv;
    if (name == "svm") return RealizeMethod::svm;
    throw ValidationError("unknown realization method '" + name + "'");
}

PatternRealization realize_pinv(const Eigen::MatrixXd& features,
                                const ArrangementPattern& pattern) {
    if (pattern.bits.size() != features.rows()) {
        throw ValidationError("realize_pinv: pattern length does not match samples");
    }
    const Eigen::VectorXd target = pattern_as_vector(pattern.bits);
    // Minimum-norm least-squares solution, the same vector the pseudo-inverse
    // would produce, without forming it explicitly.
    const Eigen::VectorXd weight =
        features.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(target);

    const double shift = 0.5;
    const auto mismatched = verify_realization(features, pattern.bits, weight, shift);
    if (!mismatched.empty()) {
        throw NumericError("realize_pinv: pattern " + pattern.bits.to_string() +
                           " not reproduced at samples [" + index_list(mismatched) + "]");
    }
    return PatternRealization{pattern.bits, weight, shift, RealizeMethod::pinv};
}

PatternRealization realize_pinv(const Dataset& data, const ArrangementPattern& pattern) {
    return realize_pinv(data.features, pattern);
}

PatternRealization realize_svm(const Eigen::MatrixXd& features,
                               const ArrangementPattern& pattern,
                               const SvmOptions& options) {
    const int n = static_cast<int>(features.rows());
    const int d = static_cast<int>(features.cols());
    if (pattern.bits.size() != n) {
        throw ValidationError("realize_svm: pattern length does not match samples");
    }

    // Zero entries become -1 labels; the classifier runs through the origin.
    Eigen::VectorXd labels(n);
    for (int i = 0; i < n; ++i) {
        labels(i) = pattern.bits.get(i) ? 1.0 : -1.0;
    }

    // Soft-margin primal (lambda/2)||w||^2 + (1/n) sum_i max(0, 1 - t_i x_i'w)
    // with lambda = 1/(cost * n), solved by seeded pegasos-style stochastic
    // subgradient steps with suffix averaging. The iterate (raw or averaged)
    // with the best minimum margin is kept.
    Rng rng(options.seed);
    const double lambda = 1.0 / (options.cost * n);
    const double ball = 1.0 / std::sqrt(lambda);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd average = Eigen::VectorXd::Zero(d);
    int averaged = 0;
    Eigen::VectorXd best = w;
    double best_margin = -std::numeric_limits<double>::infinity();

    const auto min_margin = [&](const Eigen::VectorXd& cand) {
        const double norm = cand.norm();
        if (norm == 0.0) return -std::numeric_limits<double>::infinity();
        return (labels.array() * (features * cand).array()).minCoeff() / norm;
    };
    const auto consider = [&](const Eigen::VectorXd& cand) {
        const double margin = min_margin(cand);
        if (margin > best_margin) {
            best_margin = margin;
            best = cand;
        }
    };

    for (int k = 1; k <= options.iterations; ++k) {
        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const double step = 1.0 / (lambda * k);
        w *= 1.0 - step * lambda;
        if (labels(i) * features.row(i).dot(w) < 1.0) {
            w += (step / n) * labels(i) * features.row(i).transpose();
        }
        const double norm = w.norm();
        if (norm > ball) {
            w *= ball / norm;
        }
        if (2 * k >= options.iterations) {  // suffix average
            average = (average * averaged + w) / (averaged + 1);
            ++averaged;
        }
        if (k % 100 == 0 || k == options.iterations) {
            consider(w);
            if (averaged > 0) consider(average);
        }
    }

    // Sign agreement under the exact threshold semantics: bit 1 needs
    // x_i'w >= 0, bit 0 needs x_i'w < 0.
    const auto mismatched = verify_realization(features, pattern.bits, best, 0.0);
    if (!mismatched.empty()) {
        throw NumericError(
            "realize_svm: pattern " + pattern.bits.to_string() +
            " not separated after " + std::to_string(options.iterations) +
            " iterations (samples [" + index_list(mismatched) +
            "]); pattern may not be linearly separable");
    }
    return PatternRealization{pattern.bits, best, 0.0, RealizeMethod::svm};
}

PatternRealization realize_svm(const Dataset& data, const ArrangementPattern& pattern,
                               const SvmOptions& options) {
    return realize_svm(data.features, pattern, options);
}

PatternRealization realize_witness(const Eigen::MatrixXd& features,
                                   const ArrangementPattern& pattern) {
    if (!pattern.witness.has_value()) {
        throw ValidationError("realize_witness: pattern carries no witness");
    }
    const auto mismatched =
        verify_realization(features, pattern.bits, *pattern.witness, 0.0);
    if (!mismatched.empty()) {
        throw NumericError("realize_witness: stored witness does not reproduce "
                           "pattern at samples [" + index_list(mismatched) + "]");
    }
    return PatternRealization{pattern.bits, *pattern.witness, 0.0,
                              RealizeMethod::witness};
}

Eigen::VectorXd CaratheodoryDecomposition::recombine(int n) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        for (int i = 0; i < n; ++i) {
            if (atoms[k].get(i)) out(i) += scale * gammas[k];
        }
    }
    return out;
}

CaratheodoryDecomposition caratheodory_decompose(const Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) {
        if (v(i) < 0.0) {
            throw ValidationError("caratheodory_decompose: negative entry at index " +
                                  std::to_string(i));
        }
    }
    CaratheodoryDecomposition out;
    const double peak = v.size() > 0 ? v.maxCoeff() : 0.0;
    if (peak == 0.0) {
        return out;  // zero vector: scale 0, no atoms
    }
    out.scale = peak;

    // Distinct positive values, descending. Atom k is 1{v >= value_k} and its
    // weight is the gap down to the next value, so the telescoping sum
    // rebuilds each entry exactly.
    std::vector<double> values;
    for (int i = 0; i < v.size(); ++i) {
        if (v(i) > 0.0) values.push_back(v(i));
    }
    std::sort(values.begin(), values.end(), std::greater<double>());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    for (std::size_t k = 0; k < values.size(); ++k) {
        PackedBits atom(static_cast<int>(v.size()));
        for (int i = 0; i < v.size(); ++i) {
            if (v(i) >= values[k]) atom.set(i, true);
        }
        const double next = k + 1 < values.size() ? values[k + 1] : 0.0;
        out.atoms.push_back(std::move(atom));
        out.gammas.push_back((values[k] - next) / peak);
    }
    return out;
}

ThresholdNetwork build_two_layer(const Dataset& data, const ConvexSolution& sol,
                                 const ArrangementMatrix& arr, RealizeMethod method,
                                 const SvmOptions& svm_options) {
    data.validate();
    if (sol.is_delta_form) {
        throw ValidationError("build_two_layer: expected a Lasso solution; use "
                              "build_from_delta for closed-form solutions");
    }
    if (sol.coefficients.size() != arr.pattern_count()) {
        throw ValidationError("build_two_layer: coefficient count " +
                              std::to_string(sol.coefficients.size()) +
                              " does not match arrangement columns " +
                              std::to_string(arr.pattern_count()));
    }

    ThresholdNetwork net;
    net.input_dim = data.dim();
    net.depth = 2;
    for (int j : sol.support) {
        const auto realization =
            realize_on(data.features, arr.patterns[static_cast<std::size_t>(j)], method,
                       svm_options);
        Subnetwork sub;
        Eigen::VectorXd amp(1), shift(1);
        amp(0) = 1.0;
        shift(0) = realization.shift;
        sub.layers.push_back(NetworkLayer::make(realization.weight, amp, shift));
        sub.output_weight = sol.coefficients(j);
        net.subnetworks.push_back(std::move(sub));
    }
    return net;
}

Eigen::MatrixXd HiddenStack::apply(const Eigen::MatrixXd& features) const {
    Eigen::MatrixXd z = features;
    for (const auto& w : weights) {
        Eigen::MatrixXd pre = z * w;
        for (int i = 0; i < pre.rows(); ++i) {
            for (int j = 0; j < pre.cols(); ++j) {
                pre(i, j) = step_at_zero(pre(i, j)) ? 1.0 : 0.0;
            }
        }
        z = std::move(pre);
    }
    return z;
}

ThresholdNetwork build_from_delta(const Dataset& data, const ConvexSolution& sol,
                                  const HiddenStack& hidden, RealizeMethod method,
                                  const SvmOptions& svm_options) {
    data.validate();
    if (!sol.is_delta_form) {
        throw ValidationError("build_from_delta: solution does not carry delta");
    }
    if (sol.delta.size() != data.n()) {
        throw ValidationError("build_from_delta: delta length does not match samples");
    }

    const Eigen::MatrixXd representation = hidden.apply(data.features);

    const auto positive = caratheodory_decompose(sol.delta.cwiseMax(0.0));
    const auto negative = caratheodory_decompose((-sol.delta).cwiseMax(0.0));

    ThresholdNetwork net;
    net.input_dim = data.dim();
    net.depth = 2 + static_cast<int>(hidden.weights.size());

    std::vector<std::string> failed;
    const auto add_neurons = [&](const CaratheodoryDecomposition& part, double sign) {
        for (std::size_t k = 0; k < part.atoms.size(); ++k) {
            ArrangementPattern pattern{part.atoms[k], std::nullopt};
            PatternRealization realization;
            try {
                realization = realize_on(representation, pattern, method, svm_options);
            } catch (const NumericError&) {
                failed.push_back(part.atoms[k].to_string());
                continue;
            }
            Subnetwork sub;
            for (const auto& w : hidden.weights) {
                sub.layers.push_back(NetworkLayer::make(
                    w, Eigen::VectorXd::Ones(w.cols())));
            }
            Eigen::VectorXd amp(1), shift(1);
            amp(0) = sign;
            shift(0) = realization.shift;
            sub.layers.push_back(NetworkLayer::make(realization.weight, amp, shift));
            sub.output_weight = part.scale * part.gammas[k];
            net.subnetworks.push_back(std::move(sub));
        }
    };

    // Nonnegative output weights scale*gamma; the amplitude sign decides
    // whether a neuron contributes to the positive or negative part.
    add_neurons(positive, 1.0);
    add_neurons(negative, -1.0);

    if (!failed.empty()) {
        std::string atoms;
        for (std::size_t i = 0; i < failed.size(); ++i) {
            if (i > 0) atoms += ", ";
            atoms += failed[i];
        }
        throw NumericError("build_from_delta: unrealizable atoms: [" + atoms + "]");
    }

    // The sign convention is verified by evaluation, not assumed.
    const Eigen::VectorXd output = forward(net, data.features);
    const double err = (output - sol.delta).template lpNorm<Eigen::Infinity>();
    if (err > 1e-9 * std::max(1.0, sol.delta.template lpNorm<Eigen::Infinity>())) {
        throw NumericError("build_from_delta: assembled network deviates from delta by " +
                           std::to_string(err));
    }
    return net;
}

}  // namespace threshconvex
