#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace bsl {

// =====================================================================
// Deterministic random streams.
//
// Every stochastic draw in the library flows through a named substream
// derived from (root seed, purpose label, integer indices). Streams are
// stateless to construct, so any consumer can rebuild exactly the stream
// it needs from the root seed alone; nothing depends on draw order
// elsewhere in the program.
//
// mt19937_64 is seeded with the derived key. Uniform/bounded/normal
// helpers are hand-rolled because std::*_distribution output is
// implementation-defined and would break cross-compiler determinism.
// =====================================================================

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/** Derive a stream key from a root seed, a purpose label, and indices. */
inline std::uint64_t derive_key(std::uint64_t seed, std::string_view label,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t k = splitmix64(seed ^ fnv1a64(label));
    k = splitmix64(k ^ a);
    k = splitmix64(k ^ b);
    return k;
}

/** One deterministic random stream. */
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : eng_(key) {}

    static RngStream derive(std::uint64_t seed, std::string_view label,
                            std::uint64_t a = 0, std::uint64_t b = 0) {
        return RngStream(derive_key(seed, label, a, b));
    }

    std::uint64_t u64() { return eng_(); }

    /** Uniform double in [0, 1) with 53-bit resolution. */
    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    /** Unbiased integer in [0, n) via rejection sampling. */
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw validation_error("RngStream::bounded: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = u64();
            if (r >= threshold) return r % n;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    /** Standard normal via Box-Muller (one value per two uniforms). */
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /** In-place Fisher-Yates shuffle. */
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /** Random permutation of {0, ..., n-1}; perm[new] = old. */
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace bsl
