#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "dbpa/errors.hpp"

namespace dbpa {

// Deterministic random-number core. Every draw is specified bit-for-bit so
// results are identical across platforms, standard libraries and runs
// (std::uniform_*_distribution is implementation-defined and unusable here).

// splitmix64 finalizer (Stafford / Steele et al.).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Splittable seed derivation: mix(seed, n) yields the seed of the n-th
// child stream. Used for per-permutation, per-arm and per-sample streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t n) {
    return splitmix64(seed ^ splitmix64(n + 0x6A09E667F3BCC909ULL));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

// FNV-1a, for hashing identifiers and payload strings into the seed chain.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xCBF29CE484222325ULL) {
    std::uint64_t h = basis;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Uniform double in [0, 1), 53 bits of precision.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n) via rejection on the top range.
    std::uint64_t below(std::uint64_t n) {
        require(n > 0, ErrorCode::InvalidConfig, "Rng::below requires n > 0");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; pairs are generated together and the
    // second value is stashed for the next call.
    double normal() {
        if (have_stash_) {
            have_stash_ = false;
            return stash_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        stash_ = r * std::sin(theta);
        have_stash_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    double stash_ = 0.0;
    bool have_stash_ = false;
};

// First k entries of a Fisher-Yates shuffle of {0, ..., n-1}: a uniformly
// random size-k subset, returned in shuffle order.
inline std::vector<std::size_t> choose_k_of_n(Rng& rng, std::size_t n, std::size_t k) {
    require(k <= n, ErrorCode::InvalidConfig, "choose_k_of_n requires k <= n");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

} // namespace dbpa
