#include "threshconvex/types.hpp"

#include <cmath>

namespace threshconvex {

void Dataset::validate() const {
    if (features.rows() < 1 || features.cols() < 1) {
        throw ValidationError("Dataset: need at least one sample and one feature");
    }
    if (labels.size() != features.rows()) {
        throw ValidationError("Dataset: labels length " + std::to_string(labels.size()) +
                              " does not match sample count " +
                              std::to_string(features.rows()));
    }
    if (has_bias) {
        const auto last = features.col(features.cols() - 1);
        for (int i = 0; i < last.size(); ++i) {
            if (last(i) != 1.0) {
                throw ValidationError("Dataset: has_bias set but column " +
                                      std::to_string(features.cols() - 1) +
                                      " is not all ones (row " + std::to_string(i) + ")");
            }
        }
    }
}

Dataset Dataset::with_bias() const {
    if (has_bias) return *this;
    Dataset out;
    out.features.resize(features.rows(), features.cols() + 1);
    out.features.leftCols(features.cols()) = features;
    out.features.col(features.cols()).setOnes();
    out.labels = labels;
    out.has_bias = true;
    return out;
}

void RegularizedObjective::validate() const {
    if (!(beta >= 0.0)) {
        throw ValidationError("RegularizedObjective: beta must be nonnegative");
    }
}

double loss_value(LossKind kind, const Eigen::VectorXd& predictions,
                  const Eigen::VectorXd& targets) {
    if (predictions.size() != targets.size()) {
        throw ValidationError("loss_value: prediction/target length mismatch");
    }
    switch (kind) {
        case LossKind::squared:
            return 0.5 * (predictions - targets).squaredNorm();
        case LossKind::logistic: {
            double total = 0.0;
            for (int i = 0; i < predictions.size(); ++i) {
                const double margin = targets(i) * predictions(i);
                // log(1 + exp(-margin)) without overflow
                total += margin > 0.0 ? std::log1p(std::exp(-margin))
                                      : -margin + std::log1p(std::exp(margin));
            }
            return total;
        }
        case LossKind::hinge: {
            double total = 0.0;
            for (int i = 0; i < predictions.size(); ++i) {
                total += std::max(0.0, 1.0 - targets(i) * predictions(i));
            }
            return total;
        }
    }
    throw ValidationError("loss_value: unknown loss kind");
}

const char* to_string(LossKind kind) {
    switch (kind) {
        case LossKind::squared: return "squared";
        case LossKind::logistic: return "logistic";
        case LossKind::hinge: return "hinge";
    }
    return "unknown";
}

LossKind loss_from_string(const std::string& name) {
    if (name == "squared") return LossKind::squared;
    if (name == "logistic") return LossKind::logistic;
    if (name == "hinge") return LossKind::hinge;
    throw ValidationError("unknown loss kind '" + name + "'");
}

}  // namespace threshconvex
