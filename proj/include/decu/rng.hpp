#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace decu {

// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64_bytes(const void* data, std::size_t n) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Counter-based random stream. Draw i is a pure function of (key, i), so any
// draw can be produced out of order, and sub-streams can be split off without
// carrying mutable generator state around. Identical (key, counter) gives the
// identical word on every platform.
class SeededStream {
public:
    explicit SeededStream(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }

    std::uint64_t word_at(std::uint64_t ctr) const noexcept {
        return mix64(key_ + 0x9E3779B97F4A7C15ULL * (ctr + 1));
    }

    // Uniform in [0, 1), 53 mantissa bits.
    double uniform_at(std::uint64_t ctr) const noexcept {
        return static_cast<double>(word_at(ctr) >> 11) * 0x1.0p-53;
    }

    // Child stream for a (purpose tag, index) pair. Distinct pairs map to
    // distinct keys; children are independent of this stream's counter.
    std::uint64_t derive_key(std::string_view tag, std::uint64_t index = 0) const noexcept {
        return mix64(mix64(key_ ^ fnv1a64(tag)) + 0x9E3779B97F4A7C15ULL * (index + 1));
    }
    SeededStream derive(std::string_view tag, std::uint64_t index = 0) const noexcept {
        return SeededStream(derive_key(tag, index));
    }

    // Stateful conveniences. Call order is part of the caller's contract.
    double uniform() noexcept { return uniform_at(counter_++); }

    // Box-Muller from two consecutive counter slots (no rejection, so the
    // counter advance per draw is fixed).
    double normal() noexcept {
        const double u1 = 1.0 - uniform_at(counter_++); // (0, 1], keeps the log finite
        const double u2 = uniform_at(counter_++);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::vector<double> normals(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) v = normal();
        return out;
    }

    // Uniform integer in [0, n). n must be >= 1.
    std::uint64_t index_below(std::uint64_t n) noexcept {
        const auto i = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace decu
