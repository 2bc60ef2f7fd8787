#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace threshconvex {

// Bad inputs or contract violations detectable up front. CLI exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failures: non-convergence, infeasibility, unrealizable
// patterns. CLI exit code 2.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The one threshold predicate shared by every module: 1{x >= 0}, returning
// true at exactly zero.
inline bool step_at_zero(double x) {
    return x >= 0.0;
}

struct Dataset {
    Eigen::MatrixXd features;  // n x d, rows are samples
    Eigen::VectorXd labels;    // length n
    bool has_bias = false;     // trailing all-ones column present

    int n() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }

    void validate() const;

    // Returns a copy with an all-ones column appended; no-op when has_bias
    // is already set.
    Dataset with_bias() const;
};

enum class LossKind { squared, logistic, hinge };
enum class RegularizerForm { weight_decay, l1_canonical };

struct RegularizedObjective {
    double beta = 0.0;
    LossKind loss = LossKind::squared;
    RegularizerForm form = RegularizerForm::weight_decay;

    void validate() const;
};

// Data-fit term only. Squared is (1/2)||p - y||^2; logistic and hinge treat
// targets as +-1 labels.
double loss_value(LossKind kind, const Eigen::VectorXd& predictions,
                  const Eigen::VectorXd& targets);

const char* to_string(LossKind kind);
LossKind loss_from_string(const std::string& name);

}  // namespace threshconvex
