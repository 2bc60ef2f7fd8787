#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "threshconvex/arrangements.hpp"
#include "threshconvex/io.hpp"
#include "threshconvex/rng.hpp"

using namespace threshconvex;

namespace {

Eigen::MatrixXd example1_matrix() {
    Eigen::MatrixXd x(3, 2);
    x << -1, 1, 0, 1, 1, 1;
    return x;
}

std::set<std::string> pattern_strings(const ArrangementMatrix& arr) {
    std::set<std::string> out;
    for (const auto& p : arr.patterns) out.insert(p.bits.to_string());
    return out;
}

void check_witnesses(const ArrangementMatrix& arr, const Eigen::MatrixXd& x) {
    for (const auto& pattern : arr.patterns) {
        REQUIRE(pattern.witness.has_value());
        const Eigen::VectorXd dots = x * *pattern.witness;
        for (int i = 0; i < dots.size(); ++i) {
            CHECK(step_at_zero(dots(i)) == pattern.bits.get(i));
        }
    }
}

Eigen::MatrixXd gaussian_with_bias(Rng& rng, int n, int d_gauss) {
    Eigen::MatrixXd x(n, d_gauss + 1);
    x.leftCols(d_gauss) = rng.gaussian_matrix(n, d_gauss);
    x.col(d_gauss).setOnes();
    return x;
}

}  // namespace

TEST_CASE("enumerate_exact reproduces the three-point golden set") {
    const auto arr = enumerate_exact(example1_matrix());
    CHECK(arr.pattern_count() == 6);
    CHECK(pattern_strings(arr) ==
          std::set<std::string>{"000", "001", "011", "100", "110", "111"});
    check_witnesses(arr, example1_matrix());
}

TEST_CASE("enumerate_exact on a single sample") {
    Eigen::MatrixXd x(1, 1);
    x << 1;
    const auto arr = enumerate_exact(x);
    CHECK(pattern_strings(arr) == std::set<std::string>{"0", "1"});
}

TEST_CASE("enumerate_exact on the zero matrix returns only all-ones") {
    const auto arr = enumerate_exact(Eigen::MatrixXd::Zero(4, 3));
    CHECK(arr.pattern_count() == 1);
    CHECK(arr.patterns[0].bits == PackedBits::ones(4));
}

TEST_CASE("enumerate_exact matches the angular-grid oracle in two dimensions") {
    Rng rng(123);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXd x = rng.gaussian_matrix(8, 2);
        const auto arr = enumerate_exact(x);
        CHECK(pattern_strings(arr) == oracles::angular_grid_patterns(x));
        check_witnesses(arr, x);
    }
}

TEST_CASE("enumerate_exact respects the Cover bound on biased Gaussian data") {
    Rng rng(5);
    const Eigen::MatrixXd x = gaussian_with_bias(rng, 8, 1);
    const auto arr = enumerate_exact(x);
    const int rank = matrix_rank(x);
    CHECK(rank == 2);
    CHECK(static_cast<std::uint64_t>(arr.pattern_count()) <= count_bound(8, rank));
    CHECK(pattern_strings(arr) == oracles::angular_grid_patterns(x));
}

TEST_CASE("enumerate_exact enforces the subset budget") {
    Rng rng(9);
    const Eigen::MatrixXd x = rng.gaussian_matrix(30, 4);
    EnumerateOptions options;
    options.subset_budget = 10;
    CHECK_THROWS_WITH_AS(enumerate_exact(x, options),
                         doctest::Contains("sample_arrangements"), ValidationError);
}

TEST_CASE("sample_arrangements basics") {
    Dataset data;
    data.features = example1_matrix();
    data.labels = Eigen::VectorXd::Zero(3);

    SUBCASE("count=1 yields the drawn pattern") {
        const auto arr = sample_arrangements(data, 1, 77);
        CHECK(arr.pattern_count() == 1);
        check_witnesses(arr, data.features);
    }

    SUBCASE("same seed twice gives identical matrices") {
        const auto a = sample_arrangements(data, 50, 3);
        const auto b = sample_arrangements(data, 50, 3);
        CHECK(arrangement_to_text(a) == arrangement_to_text(b));
        CHECK(witnesses_to_csv(a) == witnesses_to_csv(b));
    }

    SUBCASE("sampled patterns are a subset of the exact set") {
        const auto exact = enumerate_exact(data.features);
        const auto sampled = sample_arrangements(data, 500, 11);
        for (const auto& pattern : sampled.patterns) {
            CHECK(exact.contains(pattern.bits));
        }
    }
}

TEST_CASE("sampling recovers the exact pattern count on small Gaussian data") {
    Rng rng(2024);
    const Eigen::MatrixXd x = rng.gaussian_matrix(5, 5);
    const auto exact = enumerate_exact(x);
    const auto sampled = sample_arrangements(x, 10000, 99);
    for (const auto& pattern : sampled.patterns) {
        CHECK(exact.contains(pattern.bits));
    }
    // 10000 Gaussian draws cover every cone except the zero-measure w=0 tie
    // pattern when it is not otherwise reachable.
    CHECK(sampled.pattern_count() >= exact.pattern_count() - 1);
}

TEST_CASE("deep_construct reproduces the golden second layer") {
    const auto d1 = enumerate_exact(example1_matrix());
    const auto d2 = deep_construct(d1, 2);
    CHECK(d2.layer == 2);
    CHECK(d2.pattern_count() == 8);
    CHECK(is_complete(d2));
    CHECK_FALSE(is_complete(d1));
}

TEST_CASE("deep_construct on a single all-ones column") {
    const auto prev = arrangement_from_bits({PackedBits::ones(4)}, 4);
    const auto next = deep_construct(prev, 1);
    CHECK(pattern_strings(next) == std::set<std::string>{"0000", "1111"});
}

TEST_CASE("deep_construct stays under the per-subset bound total") {
    Rng rng(31);
    const Eigen::MatrixXd x = rng.gaussian_matrix(6, 2);
    const auto d1 = enumerate_exact(x);
    const auto d2 = deep_construct(d1, 2);

    // Union never exceeds the sum of per-subset pattern counts, each of
    // which obeys the rank bound.
    std::uint64_t total = 0;
    const int p = d1.pattern_count();
    for (int a = 0; a < p; ++a) {
        for (int b = a + 1; b < p; ++b) {
            Eigen::MatrixXd sub(6, 2);
            for (int i = 0; i < 6; ++i) {
                sub(i, 0) = d1.patterns[static_cast<std::size_t>(a)].bits.get(i) ? 1.0 : 0.0;
                sub(i, 1) = d1.patterns[static_cast<std::size_t>(b)].bits.get(i) ? 1.0 : 0.0;
            }
            const auto local = enumerate_exact(sub);
            const int rank = std::max(1, matrix_rank(sub));
            CHECK(static_cast<std::uint64_t>(local.pattern_count()) <=
                  count_bound(6, rank));
            total += static_cast<std::uint64_t>(local.pattern_count());
        }
    }
    CHECK(static_cast<std::uint64_t>(d2.pattern_count()) <= total);
}

TEST_CASE("deep_construct is monotone in width on the golden data") {
    const auto d1 = enumerate_exact(example1_matrix());
    const auto narrow = deep_construct(d1, 1);
    const auto wide = deep_construct(d1, 2);
    for (const auto& pattern : narrow.patterns) {
        CHECK(wide.contains(pattern.bits));
    }
}

TEST_CASE("deep_construct budget and sampling escape hatch") {
    const auto d1 = enumerate_exact(example1_matrix());
    DeepConstructOptions options;
    options.subset_budget = 2;
    CHECK_THROWS_WITH_AS(deep_construct(d1, 2, options),
                         doctest::Contains("sampled_subsets"), ValidationError);

    options.sampled_subsets = 40;
    options.subset_seed = 4;
    const auto sampled = deep_construct(d1, 2, options);
    const auto full = deep_construct(d1, 2);
    for (const auto& pattern : sampled.patterns) {
        CHECK(full.contains(pattern.bits));
    }
    // Deterministic under a fixed subset seed.
    const auto again = deep_construct(d1, 2, options);
    CHECK(arrangement_to_text(sampled) == arrangement_to_text(again));
}

TEST_CASE("is_complete guards exponential inputs") {
    ArrangementMatrix arr;
    arr.n = 31;
    CHECK_THROWS_AS(is_complete(arr), ValidationError);

    const auto tiny = arrangement_from_bits(
        {PackedBits::from_string("0"), PackedBits::from_string("1")}, 1);
    CHECK(is_complete(tiny));
}

TEST_CASE("count_bound values") {
    CHECK(count_bound(3, 2) == 6);
    CHECK(count_bound(8, 2) == 16);
    for (int n : {1, 2, 5, 10}) {
        CHECK(count_bound(n, n) == (std::uint64_t{1} << n));
    }
    CHECK_THROWS_AS(count_bound(3, 0), ValidationError);
    CHECK_THROWS_AS(count_bound(3, 4), ValidationError);
}

TEST_CASE("enumeration is deterministic including column order") {
    Rng rng(8);
    const Eigen::MatrixXd x = rng.gaussian_matrix(7, 3);
    const auto a = enumerate_exact(x);
    const auto b = enumerate_exact(x);
    CHECK(arrangement_to_text(a) == arrangement_to_text(b));
    // Lexicographic column order.
    for (int j = 1; j < a.pattern_count(); ++j) {
        CHECK(a.patterns[static_cast<std::size_t>(j - 1)].bits <
              a.patterns[static_cast<std::size_t>(j)].bits);
    }
}

TEST_CASE("arrangement text format round-trips") {
    const auto arr = enumerate_exact(example1_matrix());
    const auto restored = arrangement_from_text(arrangement_to_text(arr));
    CHECK(restored.n == arr.n);
    CHECK(restored.layer == arr.layer);
    CHECK(pattern_strings(restored) == pattern_strings(arr));

    // Witness sidecar attaches back on.
    auto stripped = restored;
    attach_witnesses_from_csv(stripped, witnesses_to_csv(arr));
    check_witnesses(stripped, example1_matrix());
}

TEST_CASE("rank-3 enumeration agrees with a dense sphere oracle") {
    Rng rng(55);
    const Eigen::MatrixXd x = rng.gaussian_matrix(6, 3);
    const auto arr = enumerate_exact(x);
    check_witnesses(arr, x);

    // Dense-direction oracle on the sphere (plus w = 0). Every oracle
    // pattern must be found; enumerate may additionally hold boundary
    // patterns the grid misses.
    std::set<std::string> oracle;
    {
        std::string bits(6, '1');
        oracle.insert(bits);  // w = 0
    }
    const int steps = 120;
    for (int a = 0; a < steps; ++a) {
        for (int b = 0; b < steps; ++b) {
            const double theta = M_PI * (a + 0.5) / steps;
            const double phi = 2.0 * M_PI * b / steps;
            Eigen::VectorXd w(3);
            w << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                std::cos(theta);
            std::string bits(6, '0');
            const Eigen::VectorXd dots = x * w;
            for (int i = 0; i < 6; ++i) {
                if (dots(i) >= 0.0) bits[static_cast<std::size_t>(i)] = '1';
            }
            oracle.insert(bits);
        }
    }
    const auto found = pattern_strings(arr);
    for (const auto& bits : oracle) {
        CHECK(found.count(bits) == 1);
    }
    CHECK(static_cast<std::uint64_t>(arr.pattern_count()) <=
          count_bound(6, 3) + 1);  // +1 for the w=0 tie pattern
}
