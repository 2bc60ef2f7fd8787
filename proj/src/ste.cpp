#include "threshconvex/ste.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "threshconvex/rng.hpp"

namespace threshconvex {

namespace {

constexpr double kDivergenceLimit = 1e12;

// Standard (shared-trunk) MLP parameters: hidden layers plus the output
// weight vector.
struct MlpParams {
    std::vector<Eigen::MatrixXd> weights;     // W^l, fan_in x width
    std::vector<Eigen::VectorXd> amplitudes;  // s^l
    Eigen::VectorXd output;                   // w^L

    static MlpParams init(int input_dim, const std::vector<int>& widths, Rng& rng) {
        MlpParams p;
        int fan_in = input_dim;
        for (int width : widths) {
            p.weights.push_back(rng.gaussian_matrix(fan_in, width) /
                                std::sqrt(static_cast<double>(fan_in)));
            p.amplitudes.push_back(Eigen::VectorXd::Ones(width));
            fan_in = width;
        }
        p.output = rng.gaussian_vector(fan_in) / std::sqrt(static_cast<double>(fan_in));
        return p;
    }

    double squared_norm() const {
        double sum = output.squaredNorm();
        for (std::size_t l = 0; l < weights.size(); ++l) {
            sum += weights[l].squaredNorm() + amplitudes[l].squaredNorm();
        }
        return sum;
    }
};

struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;          // preactivations per layer
    std::vector<Eigen::MatrixXd> activations;  // layer outputs, [0] = input
    Eigen::VectorXd output;
};

// linear_debug replaces the threshold with s*x so the exact chain rule is
// testable against finite differences.
ForwardCache mlp_forward(const MlpParams& p, const Eigen::MatrixXd& batch,
                         bool linear_debug) {
    ForwardCache cache;
    cache.activations.push_back(batch);
    Eigen::MatrixXd z = batch;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        Eigen::MatrixXd pre = z * p.weights[l];
        cache.pre.push_back(pre);
        Eigen::MatrixXd act(pre.rows(), pre.cols());
        for (int j = 0; j < pre.cols(); ++j) {
            const double amp = p.amplitudes[l](j);
            for (int i = 0; i < pre.rows(); ++i) {
                act(i, j) = linear_debug ? amp * pre(i, j)
                                         : (step_at_zero(pre(i, j)) ? amp : 0.0);
            }
        }
        cache.activations.push_back(act);
        z = cache.activations.back();
    }
    cache.output = z * p.output;
    return cache;
}

struct MlpGrads {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> amplitudes;
    Eigen::VectorXd output;
};

// Backward pass for the squared loss on one batch. The activation
// derivative w.r.t. its input is replaced by the surrogate; the derivative
// w.r.t. the amplitude uses the exact activation indicator. decay_fraction
// scales the weight-decay gradient so one epoch applies it once.
MlpGrads mlp_backward(const MlpParams& p, const ForwardCache& cache,
                      const Eigen::VectorXd& targets, const SteConfig& cfg,
                      double decay_fraction, bool linear_debug) {
    MlpGrads g;
    g.weights.resize(p.weights.size());
    g.amplitudes.resize(p.amplitudes.size());

    const Eigen::VectorXd dout = cache.output - targets;
    const Eigen::MatrixXd& last = cache.activations.back();
    g.output = last.transpose() * dout + decay_fraction * cfg.beta * p.output;

    Eigen::MatrixXd dz = dout * p.output.transpose();
    for (int l = static_cast<int>(p.weights.size()) - 1; l >= 0; --l) {
        const Eigen::MatrixXd& pre = cache.pre[static_cast<std::size_t>(l)];
        const Eigen::VectorXd& amp = p.amplitudes[static_cast<std::size_t>(l)];

        Eigen::VectorXd damp = Eigen::VectorXd::Zero(amp.size());
        Eigen::MatrixXd dpre(pre.rows(), pre.cols());
        for (int j = 0; j < pre.cols(); ++j) {
            for (int i = 0; i < pre.rows(); ++i) {
                const double x = pre(i, j);
                if (linear_debug) {
                    damp(j) += dz(i, j) * x;
                    dpre(i, j) = dz(i, j) * amp(j);
                } else {
                    damp(j) += dz(i, j) * (step_at_zero(x) ? 1.0 : 0.0);
                    dpre(i, j) = dz(i, j) * amp(j) * surrogate_backward(cfg, x);
                }
            }
        }
        damp += decay_fraction * cfg.beta * amp;

        const Eigen::MatrixXd& below = cache.activations[static_cast<std::size_t>(l)];
        g.weights[static_cast<std::size_t>(l)] =
            below.transpose() * dpre +
            decay_fraction * cfg.beta * p.weights[static_cast<std::size_t>(l)];
        g.amplitudes[static_cast<std::size_t>(l)] = damp;
        if (l > 0) {
            dz = dpre * p.weights[static_cast<std::size_t>(l)].transpose();
        }
    }
    return g;
}

double full_objective(const MlpParams& p, const Dataset& data, const SteConfig& cfg,
                      bool linear_debug) {
    const ForwardCache cache = mlp_forward(p, data.features, linear_debug);
    return 0.5 * (cache.output - data.labels).squaredNorm() +
           0.5 * cfg.beta * p.squared_norm();
}

ThresholdNetwork to_parallel_network(const MlpParams& p, int input_dim) {
    ThresholdNetwork net;
    net.input_dim = input_dim;
    net.depth = static_cast<int>(p.weights.size()) + 1;
    const int last = static_cast<int>(p.weights.size()) - 1;
    const int fanout = static_cast<int>(p.weights[static_cast<std::size_t>(last)].cols());
    for (int k = 0; k < fanout; ++k) {
        Subnetwork sub;
        for (int l = 0; l < last; ++l) {
            sub.layers.push_back(NetworkLayer::make(p.weights[static_cast<std::size_t>(l)],
                                                    p.amplitudes[static_cast<std::size_t>(l)]));
        }
        Eigen::VectorXd amp(1);
        amp(0) = p.amplitudes[static_cast<std::size_t>(last)](k);
        sub.layers.push_back(
            NetworkLayer::make(p.weights[static_cast<std::size_t>(last)].col(k), amp));
        sub.output_weight = p.output(k);
        net.subnetworks.push_back(std::move(sub));
    }
    return net;
}

}  // namespace

const char* to_string(Surrogate surrogate) {
    switch (surrogate) {
        case Surrogate::identity: return "identity";
        case Surrogate::relu: return "relu";
        case Surrogate::leaky_relu: return "leaky_relu";
        case Surrogate::clipped_relu: return "clipped_relu";
    }
    return "unknown";
}

Surrogate surrogate_from_string(const std::string& name) {
    if (name == "identity") return Surrogate::identity;
    if (name == "relu") return Surrogate::relu;
    if (name == "leaky_relu" || name == "lrelu") return Surrogate::leaky_relu;
    if (name == "clipped_relu" || name == "crelu") return Surrogate::clipped_relu;
    throw ValidationError("unknown surrogate '" + name + "'");
}

void SteConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("SteConfig: learning_rate must be positive");
    if (epochs < 1) throw ValidationError("SteConfig: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("SteConfig: batch_size must be >= 1");
    if (!(beta >= 0.0)) throw ValidationError("SteConfig: beta must be nonnegative");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) {
        throw ValidationError("SteConfig: lr_decay_factor must be in (0, 1]");
    }
    if (lr_patience < 1) throw ValidationError("SteConfig: lr_patience must be >= 1");
}

double surrogate_backward(Surrogate s, double x, double slope, double cap) {
    switch (s) {
        case Surrogate::identity: return 1.0;
        case Surrogate::relu: return x > 0.0 ? 1.0 : 0.0;
        case Surrogate::leaky_relu: return x > 0.0 ? 1.0 : slope;
        case Surrogate::clipped_relu: return (x > 0.0 && x < cap) ? 1.0 : 0.0;
    }
    return 0.0;
}

double surrogate_backward(const SteConfig& cfg, double x) {
    return surrogate_backward(cfg.surrogate, x, cfg.leaky_slope, cfg.clip_cap);
}

TrainTrace ste_train(const Dataset& data, const std::vector<int>& widths,
                     const SteConfig& cfg) {
    data.validate();
    cfg.validate();
    if (widths.empty()) {
        throw ValidationError("ste_train: need at least one hidden layer width");
    }
    for (int w : widths) {
        if (w < 1) throw ValidationError("ste_train: widths must be positive");
    }

    const auto start = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    MlpParams params = MlpParams::init(data.dim(), widths, rng);

    TrainTrace trace;
    trace.seed = cfg.seed;
    trace.config = cfg;

    const int n = data.n();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    double lr = cfg.learning_rate;
    double best = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int offset = 0; offset < n; offset += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - offset);
            Eigen::MatrixXd batch(count, data.dim());
            Eigen::VectorXd targets(count);
            for (int i = 0; i < count; ++i) {
                batch.row(i) = data.features.row(order[static_cast<std::size_t>(offset + i)]);
                targets(i) = data.labels(order[static_cast<std::size_t>(offset + i)]);
            }
            const ForwardCache cache = mlp_forward(params, batch, false);
            const double fraction = static_cast<double>(count) / n;
            const MlpGrads grads =
                mlp_backward(params, cache, targets, cfg, fraction, false);
            for (std::size_t l = 0; l < params.weights.size(); ++l) {
                params.weights[l] -= lr * grads.weights[l];
                params.amplitudes[l] -= lr * grads.amplitudes[l];
            }
            params.output -= lr * grads.output;
        }

        const double objective = full_objective(params, data, cfg, false);
        trace.objectives.push_back(objective);
        trace.learning_rates.push_back(lr);
        if (!std::isfinite(objective) || objective > kDivergenceLimit) {
            trace.diverged = true;
            break;
        }

        // ReduceLROnPlateau-style relative threshold.
        if (objective < best * (1.0 - cfg.lr_threshold)) {
            best = objective;
            stale_epochs = 0;
        } else {
            best = std::min(best, objective);
            if (++stale_epochs >= cfg.lr_patience) {
                lr *= cfg.lr_decay_factor;
                stale_epochs = 0;
            }
        }
    }

    trace.final_network = to_parallel_network(params, data.dim());
    trace.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

MultiTrialResult multi_trial(const Dataset& data, const std::vector<int>& widths,
                             const SteConfig& cfg, int trials) {
    if (trials < 1) {
        throw ValidationError("multi_trial: trials must be >= 1");
    }
    MultiTrialResult result;
    result.traces.reserve(static_cast<std::size_t>(trials));
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        SteConfig trial_cfg = cfg;
        trial_cfg.seed = cfg.seed + static_cast<std::uint64_t>(t);
        result.traces.push_back(ste_train(data, widths, trial_cfg));
        const auto& trace = result.traces.back();
        if (!trace.diverged && trace.final_objective() < best) {
            best = trace.final_objective();
            result.best_index = t;
        }
    }
    if (result.best_index < 0) result.best_index = 0;
    return result;
}

double ste_gradient_check(const Dataset& data, const std::vector<int>& widths,
                          const SteConfig& cfg, double fd_step) {
    data.validate();
    Rng rng(cfg.seed);
    MlpParams params = MlpParams::init(data.dim(), widths, rng);

    const ForwardCache cache = mlp_forward(params, data.features, true);
    const MlpGrads grads = mlp_backward(params, cache, data.labels, cfg, 1.0, true);

    double worst = 0.0;
    const auto compare = [&](double* value, double analytic) {
        const double saved = *value;
        *value = saved + fd_step;
        const double up = full_objective(params, data, cfg, true);
        *value = saved - fd_step;
        const double down = full_objective(params, data, cfg, true);
        *value = saved;
        const double numeric = (up - down) / (2.0 * fd_step);
        const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
    };

    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (int j = 0; j < params.weights[l].cols(); ++j) {
            for (int i = 0; i < params.weights[l].rows(); ++i) {
                compare(&params.weights[l](i, j), grads.weights[l](i, j));
            }
        }
        for (int j = 0; j < params.amplitudes[l].size(); ++j) {
            compare(&params.amplitudes[l](j), grads.amplitudes[l](j));
        }
    }
    for (int j = 0; j < params.output.size(); ++j) {
        compare(&params.output(j), grads.output(j));
    }
    return worst;
}

}  // namespace threshconvex
