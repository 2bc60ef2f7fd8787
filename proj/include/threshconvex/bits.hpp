#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace threshconvex {

// Fixed-length bit vector packed into 64-bit words. Bit i is sample i;
// ordering comparisons are lexicographic with sample 0 most significant.
class PackedBits {
public:
    PackedBits() = default;

    explicit PackedBits(int size)
        : size_(size), words_((static_cast<std::size_t>(size) + 63) / 64, 0) {}

    static PackedBits ones(int size) {
        PackedBits b(size);
        for (auto& w : b.words_) w = ~std::uint64_t{0};
        b.mask_tail();
        return b;
    }

    static PackedBits from_string(const std::string& text) {
        PackedBits b(static_cast<int>(text.size()));
        for (int i = 0; i < b.size_; ++i) {
            if (text[i] == '1') {
                b.set(i, true);
            } else if (text[i] != '0') {
                throw std::invalid_argument("PackedBits: expected '0'/'1', got '" +
                                            std::string(1, text[i]) + "'");
            }
        }
        return b;
    }

    int size() const { return size_; }

    bool get(int i) const {
        return (words_[static_cast<std::size_t>(i) / 64] >> (i % 64)) & 1u;
    }

    void set(int i, bool value) {
        const std::uint64_t mask = std::uint64_t{1} << (i % 64);
        auto& word = words_[static_cast<std::size_t>(i) / 64];
        if (value) {
            word |= mask;
        } else {
            word &= ~mask;
        }
    }

    int count() const {
        int total = 0;
        for (auto w : words_) total += std::popcount(w);
        return total;
    }

    std::string to_string() const {
        std::string out(static_cast<std::size_t>(size_), '0');
        for (int i = 0; i < size_; ++i) {
            if (get(i)) out[static_cast<std::size_t>(i)] = '1';
        }
        return out;
    }

    bool operator==(const PackedBits& other) const {
        return size_ == other.size_ && words_ == other.words_;
    }
    bool operator!=(const PackedBits& other) const { return !(*this == other); }

    // Lexicographic over samples: the first differing sample decides, and
    // a 0 there sorts first. Within a word the lowest-index sample sits in
    // the least significant bit, so the first difference is countr_zero of
    // the xor.
    bool operator<(const PackedBits& other) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            const std::uint64_t diff = words_[w] ^ other.words_[w];
            if (diff != 0) {
                const int bit = std::countr_zero(diff);
                return ((words_[w] >> bit) & 1u) == 0;
            }
        }
        return false;
    }

private:
    void mask_tail() {
        const int tail = size_ % 64;
        if (tail != 0 && !words_.empty()) {
            words_.back() &= (std::uint64_t{1} << tail) - 1;
        }
    }

    int size_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace threshconvex
