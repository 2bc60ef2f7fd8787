#include "threshconvex/arrangements.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "threshconvex/rng.hpp"

namespace threshconvex {

namespace {

constexpr double kActiveTol = 1e-9;   // |dot| below this (relative) counts as on-hyperplane
constexpr double kEpsRel = 1e-6;      // tangential perturbation relative to smallest off-plane margin
constexpr double kEpsFloor = 1e-12;

// C(n, k) saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 result = 1;
    for (std::uint64_t i = 0; i < k; ++i) {
        result = result * (n - i) / (i + 1);
        if (result > std::numeric_limits<std::uint64_t>::max()) {
            return std::numeric_limits<std::uint64_t>::max();
        }
    }
    return static_cast<std::uint64_t>(result);
}

// Collects verified (bits, witness) pairs; keeps track of bit vectors whose
// witness construction failed so we can fail loudly if they never verify.
class PatternSink {
public:
    explicit PatternSink(const Eigen::MatrixXd& features) : features_(features) {}

    bool contains(const PackedBits& bits) const { return found_.count(bits) != 0; }

    PackedBits evaluate(const Eigen::VectorXd& w) const {
        PackedBits bits(static_cast<int>(features_.rows()));
        const Eigen::VectorXd dots = features_ * w;
        for (int i = 0; i < dots.size(); ++i) {
            bits.set(i, step_at_zero(dots(i)));
        }
        return bits;
    }

    // Returns true when the witness reproduces the bits and is stored.
    bool offer(const PackedBits& bits, const Eigen::VectorXd& witness) {
        if (found_.count(bits)) return true;
        if (evaluate(witness) == bits) {
            found_.emplace(bits, witness);
            return true;
        }
        missed_.insert(bits);
        return false;
    }

    std::vector<ArrangementPattern> finalize() const {
        for (const auto& bits : missed_) {
            if (!found_.count(bits)) {
                throw NumericError(
                    "enumerate_exact: pattern " + bits.to_string() +
                    " requires an exact tie that cannot be witnessed in floating "
                    "point (degenerate input, e.g. antipodal samples)");
            }
        }
        std::vector<ArrangementPattern> out;
        out.reserve(found_.size());
        for (const auto& [bits, witness] : found_) {
            out.push_back(ArrangementPattern{bits, witness});
        }
        return out;
    }

private:
    const Eigen::MatrixXd& features_;
    std::map<PackedBits, Eigen::VectorXd> found_;
    std::set<PackedBits> missed_;
};

// One enumeration level: `rows` holds the coordinates of the still
// undecided samples inside the current subspace, `lift` maps subspace
// coordinates back to a global weight direction, `base` is the witness
// accumulated so far and `scale` the magnitude available to this level.
struct LevelContext {
    const EnumerateOptions& options;
    PatternSink& sink;
};

void enumerate_level(LevelContext& ctx, const Eigen::MatrixXd& rows,
                     const std::vector<int>& ids, const Eigen::MatrixXd& lift,
                     const Eigen::VectorXd& base, double scale, PackedBits fixed);

// Attempts a witness around direction u with a tangential nudge, retrying
// over a small epsilon ladder when floating point flips a boundary sample.
void offer_with_retries(LevelContext& ctx, const PackedBits& bits,
                        const Eigen::VectorXd& base, const Eigen::MatrixXd& lift,
                        double scale, const Eigen::VectorXd& direction,
                        const Eigen::VectorXd& tangent, double eps) {
    if (ctx.sink.contains(bits)) return;
    static constexpr double kLadder[] = {1.0, 1e-2, 1e2, 1e-4, 1e4, 1e-6};
    for (double mult : kLadder) {
        Eigen::VectorXd w = base + scale * (lift * (direction + eps * mult * tangent));
        if (ctx.sink.offer(bits, w)) return;
    }
}

// Samples exactly on the current ray get resolved here. When their row
// vectors are independent every +-1 margin assignment is reachable with one
// tangent solve; otherwise we recurse into the ray's orthogonal complement.
void resolve_actives(LevelContext& ctx, const Eigen::MatrixXd& rows,
                     const std::vector<int>& ids, const Eigen::MatrixXd& lift,
                     const Eigen::VectorXd& base, double scale,
                     const PackedBits& fixed, const Eigen::VectorXd& sigma,
                     const std::vector<int>& active, double off_margin) {
    const int a = static_cast<int>(active.size());
    Eigen::MatrixXd active_rows(a, rows.cols());
    for (int i = 0; i < a; ++i) {
        active_rows.row(i) = rows.row(active[i]);
    }

    const double eps = std::max(kEpsRel * off_margin, kEpsFloor);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(active_rows,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double top_sv = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
    const bool independent =
        a <= rows.cols() && top_sv > 0.0 &&
        svd.singularValues()(a - 1) > ctx.options.rank_tolerance * top_sv;

    if (independent && a <= 24) {
        for (std::uint32_t combo = 0; combo < (1u << a); ++combo) {
            PackedBits bits = fixed;
            Eigen::VectorXd target(a);
            for (int i = 0; i < a; ++i) {
                const bool positive = (combo >> i) & 1u;
                target(i) = positive ? 1.0 : -1.0;
                bits.set(ids[static_cast<std::size_t>(active[i])], positive);
            }
            if (ctx.sink.contains(bits)) continue;
            Eigen::VectorXd tangent = svd.solve(target);
            const double reach = (rows * tangent).cwiseAbs().maxCoeff();
            offer_with_retries(ctx, bits, base, lift, scale, sigma, tangent,
                               eps / std::max(1.0, reach));
        }
        return;
    }

    // Dependent actives: recurse inside sigma's orthogonal complement.
    const int rho = static_cast<int>(rows.cols());
    Eigen::MatrixXd sigma_mat = sigma;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(sigma_mat);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd complement = q.rightCols(rho - 1);

    std::vector<int> sub_ids(static_cast<std::size_t>(a));
    for (int i = 0; i < a; ++i) {
        sub_ids[static_cast<std::size_t>(i)] = ids[static_cast<std::size_t>(active[i])];
    }
    const double max_norm = rows.rowwise().norm().maxCoeff();
    const double sub_scale = scale * std::max(kEpsRel * off_margin, kEpsFloor) /
                             std::max(1.0, max_norm);
    enumerate_level(ctx, active_rows * complement, sub_ids, lift * complement,
                    base + scale * (lift * sigma), sub_scale, fixed);
}

void enumerate_level(LevelContext& ctx, const Eigen::MatrixXd& rows,
                     const std::vector<int>& ids, const Eigen::MatrixXd& lift,
                     const Eigen::VectorXd& base, double scale, PackedBits fixed) {
    // Samples with (numerically) zero coordinates in this subspace sit on
    // every hyperplane we can still build: their bit is 1 under >= 0.
    const Eigen::VectorXd norms = rows.rowwise().norm();
    const double max_norm = norms.size() > 0 ? norms.maxCoeff() : 0.0;

    std::vector<int> live;
    for (int i = 0; i < rows.rows(); ++i) {
        if (max_norm == 0.0 || norms(i) <= ctx.options.rank_tolerance * max_norm) {
            fixed.set(ids[static_cast<std::size_t>(i)], true);
        } else {
            live.push_back(i);
        }
    }
    if (live.empty()) {
        ctx.sink.offer(fixed, base);
        return;
    }

    Eigen::MatrixXd live_rows(static_cast<int>(live.size()), rows.cols());
    std::vector<int> live_ids(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
        live_rows.row(static_cast<int>(i)) = rows.row(live[i]);
        live_ids[i] = ids[static_cast<std::size_t>(live[i])];
    }

    // Essentialize: restrict to the row space of the remaining samples.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(live_rows, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) > ctx.options.rank_tolerance * sv(0)) ++rank;
    }
    const Eigen::MatrixXd basis = svd.matrixV().leftCols(rank);
    const Eigen::MatrixXd coords = live_rows * basis;
    const Eigen::MatrixXd sub_lift = lift * basis;
    const int k = static_cast<int>(coords.rows());

    if (rank == 1) {
        for (double direction : {1.0, -1.0}) {
            PackedBits bits = fixed;
            double margin = std::numeric_limits<double>::infinity();
            for (int i = 0; i < k; ++i) {
                const double dot = coords(i, 0) * direction;
                bits.set(live_ids[static_cast<std::size_t>(i)], dot > 0.0);
                margin = std::min(margin, std::abs(dot));
            }
            if (!ctx.sink.contains(bits)) {
                Eigen::VectorXd u(1);
                u(0) = direction;
                ctx.sink.offer(bits, base + scale * (sub_lift * u));
            }
        }
        // The on-ray pattern (every remaining bit 1) needs an exact tie; it
        // deduplicates against a strict pattern unless the data is degenerate.
        PackedBits ties = fixed;
        for (int i = 0; i < k; ++i) {
            ties.set(live_ids[static_cast<std::size_t>(i)], true);
        }
        if (!ctx.sink.contains(ties)) {
            ctx.sink.offer(ties, base);
        }
        return;
    }

    // Walk every ray: null directions of (rank-1)-subsets of samples.
    std::vector<int> subset(static_cast<std::size_t>(rank - 1));
    for (int i = 0; i < rank - 1; ++i) subset[static_cast<std::size_t>(i)] = i;

    while (true) {
        Eigen::MatrixXd section(rank - 1, rank);
        for (int i = 0; i < rank - 1; ++i) {
            section.row(i) = coords.row(subset[static_cast<std::size_t>(i)]);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> ssvd(section, Eigen::ComputeFullV);
        const auto& ssv = ssvd.singularValues();
        const bool spanning = ssv(rank - 2) > ctx.options.rank_tolerance * ssv(0);
        if (spanning) {
            const Eigen::VectorXd normal = ssvd.matrixV().col(rank - 1);
            for (double sign : {1.0, -1.0}) {
                const Eigen::VectorXd sigma = sign * normal;
                const Eigen::VectorXd dots = coords * sigma;
                PackedBits bits = fixed;
                std::vector<int> active;
                double off_margin = std::numeric_limits<double>::infinity();
                for (int i = 0; i < k; ++i) {
                    const double limit =
                        kActiveTol * std::max(coords.row(i).norm(), 1e-300);
                    if (std::abs(dots(i)) <= limit) {
                        active.push_back(i);
                    } else {
                        bits.set(live_ids[static_cast<std::size_t>(i)], dots(i) > 0.0);
                        off_margin = std::min(off_margin, std::abs(dots(i)));
                    }
                }
                if (active.empty()) {
                    // Subset samples were pushed off the ray by tolerance —
                    // treat as a plain strict pattern.
                    if (!ctx.sink.contains(bits)) {
                        ctx.sink.offer(bits, base + scale * (sub_lift * sigma));
                    }
                    continue;
                }
                if (!std::isfinite(off_margin)) off_margin = 1.0;
                resolve_actives(ctx, coords, live_ids, sub_lift, base, scale, bits,
                                sigma, active, off_margin);
            }
        }

        // Next (rank-1)-subset in lexicographic order.
        int pos = rank - 2;
        while (pos >= 0 &&
               subset[static_cast<std::size_t>(pos)] == k - (rank - 1) + pos) {
            --pos;
        }
        if (pos < 0) break;
        ++subset[static_cast<std::size_t>(pos)];
        for (int j = pos + 1; j < rank - 1; ++j) {
            subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
}

std::vector<ArrangementPattern> sorted_patterns(std::vector<ArrangementPattern> patterns) {
    std::sort(patterns.begin(), patterns.end(),
              [](const ArrangementPattern& a, const ArrangementPattern& b) {
                  return a.bits < b.bits;
              });
    return patterns;
}

}  // namespace

Eigen::MatrixXd ArrangementMatrix::dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, pattern_count());
    for (int j = 0; j < pattern_count(); ++j) {
        for (int i = 0; i < n; ++i) {
            if (patterns[static_cast<std::size_t>(j)].bits.get(i)) d(i, j) = 1.0;
        }
    }
    return d;
}

bool ArrangementMatrix::contains(const PackedBits& bits) const {
    return std::binary_search(
        patterns.begin(), patterns.end(), bits,
        [](const auto& lhs, const auto& rhs) {
            if constexpr (std::is_same_v<std::decay_t<decltype(lhs)>, PackedBits>) {
                return lhs < rhs.bits;
            } else {
                return lhs.bits < rhs;
            }
        });
}

int matrix_rank(const Eigen::MatrixXd& m, double tolerance) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) > tolerance * sv(0)) ++rank;
    }
    return rank;
}

ArrangementMatrix enumerate_exact(const Eigen::MatrixXd& features,
                                  const EnumerateOptions& options) {
    const int n = static_cast<int>(features.rows());
    const int d = static_cast<int>(features.cols());
    if (n < 1 || d < 1) {
        throw ValidationError("enumerate_exact: empty feature matrix");
    }

    ArrangementMatrix out;
    out.n = n;
    out.layer = 1;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(features, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    if (sv.size() > 0 && sv(0) > 0.0) {
        for (int i = 0; i < sv.size(); ++i) {
            if (sv(i) > options.rank_tolerance * sv(0)) ++rank;
        }
    }

    PatternSink sink(features);
    sink.offer(PackedBits::ones(n), Eigen::VectorXd::Zero(d));

    if (rank > 0) {
        const std::uint64_t subsets = binomial(static_cast<std::uint64_t>(n),
                                               static_cast<std::uint64_t>(rank - 1));
        if (subsets > options.subset_budget) {
            throw ValidationError(
                "enumerate_exact: C(" + std::to_string(n) + ", " +
                std::to_string(rank - 1) + ") = " + std::to_string(subsets) +
                " candidate subsets exceeds the budget of " +
                std::to_string(options.subset_budget) +
                "; use sample_arrangements instead");
        }
        const Eigen::MatrixXd basis = svd.matrixV().leftCols(rank);
        std::vector<int> ids(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
        LevelContext ctx{options, sink};
        enumerate_level(ctx, features * basis, ids, basis, Eigen::VectorXd::Zero(d),
                        1.0, PackedBits(n));
    }

    out.patterns = sorted_patterns(sink.finalize());
    return out;
}

ArrangementMatrix enumerate_exact(const Dataset& data, const EnumerateOptions& options) {
    data.validate();
    return enumerate_exact(data.features, options);
}

ArrangementMatrix sample_arrangements(const Eigen::MatrixXd& features, int count,
                                      std::uint64_t seed) {
    if (count < 1) {
        throw ValidationError("sample_arrangements: count must be >= 1");
    }
    const int n = static_cast<int>(features.rows());
    const int d = static_cast<int>(features.cols());

    Rng rng(seed);
    std::map<PackedBits, Eigen::VectorXd> unique;
    for (int c = 0; c < count; ++c) {
        const Eigen::VectorXd g = rng.gaussian_vector(d);
        const Eigen::VectorXd dots = features * g;
        PackedBits bits(n);
        for (int i = 0; i < n; ++i) {
            bits.set(i, step_at_zero(dots(i)));
        }
        unique.emplace(bits, g);  // first witness wins
    }

    ArrangementMatrix out;
    out.n = n;
    out.layer = 1;
    out.patterns.reserve(unique.size());
    for (const auto& [bits, witness] : unique) {
        out.patterns.push_back(ArrangementPattern{bits, witness});
    }
    return out;
}

ArrangementMatrix sample_arrangements(const Dataset& data, int count,
                                      std::uint64_t seed) {
    data.validate();
    return sample_arrangements(data.features, count, seed);
}

ArrangementMatrix deep_construct(const ArrangementMatrix& prev, int width,
                                 const DeepConstructOptions& options) {
    const int p = prev.pattern_count();
    if (width < 1 || width > p) {
        throw ValidationError("deep_construct: width must be in [1, P], got " +
                              std::to_string(width) + " with P = " + std::to_string(p));
    }
    const std::uint64_t total = binomial(static_cast<std::uint64_t>(p),
                                         static_cast<std::uint64_t>(width));

    std::vector<std::vector<int>> subsets;
    if (options.sampled_subsets > 0) {
        Rng rng(options.subset_seed);
        subsets.reserve(static_cast<std::size_t>(options.sampled_subsets));
        for (int s = 0; s < options.sampled_subsets; ++s) {
            // Floyd's algorithm: uniform width-subset of [0, p).
            std::set<int> chosen;
            for (int j = p - width; j < p; ++j) {
                const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
                if (!chosen.insert(t).second) chosen.insert(j);
            }
            subsets.emplace_back(chosen.begin(), chosen.end());
        }
    } else {
        if (total > options.subset_budget) {
            throw ValidationError(
                "deep_construct: C(" + std::to_string(p) + ", " + std::to_string(width) +
                ") = " + std::to_string(total) + " column subsets exceeds the budget of " +
                std::to_string(options.subset_budget) +
                "; set sampled_subsets to subsample them");
        }
        std::vector<int> subset(static_cast<std::size_t>(width));
        for (int i = 0; i < width; ++i) subset[static_cast<std::size_t>(i)] = i;
        while (true) {
            subsets.push_back(subset);
            int pos = width - 1;
            while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == p - width + pos) {
                --pos;
            }
            if (pos < 0) break;
            ++subset[static_cast<std::size_t>(pos)];
            for (int j = pos + 1; j < width; ++j) {
                subset[static_cast<std::size_t>(j)] =
                    subset[static_cast<std::size_t>(j - 1)] + 1;
            }
        }
    }

    std::set<PackedBits> unique;
    for (const auto& subset : subsets) {
        Eigen::MatrixXd sub(prev.n, width);
        for (int j = 0; j < width; ++j) {
            const auto& bits = prev.patterns[static_cast<std::size_t>(subset[static_cast<std::size_t>(j)])].bits;
            for (int i = 0; i < prev.n; ++i) {
                sub(i, j) = bits.get(i) ? 1.0 : 0.0;
            }
        }
        const ArrangementMatrix local = enumerate_exact(sub, options.enumerate);
        for (const auto& pattern : local.patterns) {
            unique.insert(pattern.bits);
        }
    }

    ArrangementMatrix out;
    out.n = prev.n;
    out.layer = prev.layer + 1;
    out.patterns.reserve(unique.size());
    for (const auto& bits : unique) {
        out.patterns.push_back(ArrangementPattern{bits, std::nullopt});
    }
    return out;
}

bool is_complete(const ArrangementMatrix& arr) {
    if (arr.n > 30) {
        throw ValidationError(
            "is_complete: n = " + std::to_string(arr.n) +
            " exceeds 30; the completeness check is exponential by definition");
    }
    return static_cast<std::uint64_t>(arr.pattern_count()) ==
           (std::uint64_t{1} << arr.n);
}

std::uint64_t count_bound(int n, int r) {
    if (r < 1 || r > n) {
        throw ValidationError("count_bound: need 1 <= r <= n, got n = " +
                              std::to_string(n) + ", r = " + std::to_string(r));
    }
    unsigned __int128 sum = 0;
    for (int k = 0; k <= r - 1; ++k) {
        sum += binomial(static_cast<std::uint64_t>(n - 1), static_cast<std::uint64_t>(k));
    }
    sum *= 2;
    if (sum > std::numeric_limits<std::uint64_t>::max()) {
        throw NumericError("count_bound: value overflows 64 bits");
    }
    return static_cast<std::uint64_t>(sum);
}

ArrangementMatrix arrangement_from_bits(const std::vector<PackedBits>& bits, int n,
                                        int layer) {
    std::set<PackedBits> unique;
    for (const auto& b : bits) {
        if (b.size() != n) {
            throw ValidationError("arrangement_from_bits: inconsistent pattern length");
        }
        unique.insert(b);
    }
    ArrangementMatrix out;
    out.n = n;
    out.layer = layer;
    for (const auto& b : unique) {
        out.patterns.push_back(ArrangementPattern{b, std::nullopt});
    }
    return out;
}

ArrangementMatrix complete_arrangements(int n) {
    if (n < 1 || n > 20) {
        throw ValidationError("complete_arrangements: n must be in [1, 20]");
    }
    std::vector<PackedBits> all;
    all.reserve(std::size_t{1} << n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        PackedBits bits(n);
        for (int i = 0; i < n; ++i) {
            bits.set(i, (mask >> i) & 1u);
        }
        all.push_back(bits);
    }
    return arrangement_from_bits(all, n);
}

}  // namespace threshconvex
