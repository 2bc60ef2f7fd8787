#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "threshconvex/bits.hpp"
#include "threshconvex/types.hpp"

namespace threshconvex {

// One activation pattern 1{Xw >= 0} together with a weight vector that
// achieves it (when known). Witnesses are verified against the generating
// matrix at construction time.
struct ArrangementPattern {
    PackedBits bits;
    std::optional<Eigen::VectorXd> witness;
};

// Deduplicated pattern set, columns of the design matrix D. Patterns are
// kept in lexicographic bit order so identical inputs always produce the
// same matrix.
struct ArrangementMatrix {
    std::vector<ArrangementPattern> patterns;
    int n = 0;
    int layer = 1;

    int pattern_count() const { return static_cast<int>(patterns.size()); }

    // Dense n x P copy of the 0/1 design matrix.
    Eigen::MatrixXd dense() const;

    bool contains(const PackedBits& bits) const;
};

struct EnumerateOptions {
    // enumerate_exact refuses when C(n, rank-1) exceeds this.
    std::uint64_t subset_budget = 1u << 20;
    // Singular values below rank_tolerance * largest are treated as zero.
    double rank_tolerance = 1e-10;
};

// Every pattern 1{Xw >= 0} achievable over w, found by walking the rays of
// the central hyperplane arrangement: for each (rank-1)-subset of samples
// spanning a hyperplane, take the +-normal direction inside the row space
// and resolve the samples on the hyperplane by perturbing tangentially
// (recursively when the on-hyperplane samples are dependent). The w = 0
// pattern (all ones) is always included.
ArrangementMatrix enumerate_exact(const Eigen::MatrixXd& features,
                                  const EnumerateOptions& options = {});
ArrangementMatrix enumerate_exact(const Dataset& data,
                                  const EnumerateOptions& options = {});

// Patterns of `count` i.i.d. standard normal weight columns, deduplicated;
// the drawn weights are kept as witnesses (they become hidden-layer weights
// downstream).
ArrangementMatrix sample_arrangements(const Dataset& data, int count,
                                      std::uint64_t seed);
ArrangementMatrix sample_arrangements(const Eigen::MatrixXd& features, int count,
                                      std::uint64_t seed);

struct DeepConstructOptions {
    // Number of size-`width` column subsets allowed before erroring.
    std::uint64_t subset_budget = 1u << 20;
    // When > 0, sample this many subsets uniformly (seeded) instead of
    // enumerating them all; this is the escape hatch for budget overruns.
    int sampled_subsets = 0;
    std::uint64_t subset_seed = 0;
    EnumerateOptions enumerate;
};

// Grows the arrangement set one layer: every size-`width` subset of prev's
// columns is treated as an n x width data matrix, enumerated exactly, and
// the results are unioned. Witnesses are dropped (they would be relative to
// a per-subset matrix, not to shared data).
ArrangementMatrix deep_construct(const ArrangementMatrix& prev, int width,
                                 const DeepConstructOptions& options = {});

// True iff the pattern set is all of {0,1}^n. Guarded at n <= 30 because
// the answer is exponential in n by definition.
bool is_complete(const ArrangementMatrix& arr);

// Exact value of the arrangement count bound 2 * sum_{k<r} C(n-1, k).
std::uint64_t count_bound(int n, int r);

// Numerical rank with the same tolerance rule used by enumerate_exact.
int matrix_rank(const Eigen::MatrixXd& m, double tolerance = 1e-10);

// Builds an ArrangementMatrix from explicit bit vectors (sorted, deduped).
ArrangementMatrix arrangement_from_bits(const std::vector<PackedBits>& bits, int n,
                                        int layer = 1);

// The complete design: all 2^n patterns, n <= 20.
ArrangementMatrix complete_arrangements(int n);

}  // namespace threshconvex
