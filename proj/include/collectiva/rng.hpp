#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace collectiva {

// All randomness in the library flows through these two generators so that
// output is bit-identical across standard library implementations:
//  - std::mt19937_64, whose output sequence is fixed by the standard;
//  - splitmix64, used as a counter-based hash for per-position coins.
// Distribution objects from <random> are avoided on purpose: their output is
// implementation-defined.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, bound) by rejection, bound > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

private:
    std::mt19937_64 engine_;
};

/// n fair bits drawn 64 at a time, least significant bit first.
inline std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> bits(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) word = rng.next();
        bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
    }
    return bits;
}

}  // namespace collectiva
