#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace threshconvex {

// Deterministic random stream. Gaussian variates use Box-Muller on top of
// mt19937_64 because std::normal_distribution is implementation-defined and
// seeds must reproduce bit-identical results everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        spare_ = radius * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return radius * std::cos(2.0 * kPi * u2);
    }

    // Uniform integer in [0, bound), bound >= 1. Rejection sampling, no
    // modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
        std::uint64_t raw;
        do {
            raw = engine_();
        } while (raw >= limit);
        return raw % bound;
    }

    Eigen::MatrixXd gaussian_matrix(int rows, int cols) {
        Eigen::MatrixXd out(rows, cols);
        for (int c = 0; c < cols; ++c) {
            for (int r = 0; r < rows; ++r) {
                out(r, c) = gaussian();
            }
        }
        return out;
    }

    Eigen::VectorXd gaussian_vector(int size) {
        Eigen::VectorXd out(size);
        for (int i = 0; i < size; ++i) {
            out(i) = gaussian();
        }
        return out;
    }

    // Fisher-Yates; std::shuffle is not reproducible across standard
    // libraries.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace threshconvex
