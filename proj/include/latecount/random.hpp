#pragma once

#include <cstdint>

namespace latecount::rng {

// Finalizer of the splitmix64 generator.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

// k-th output of the splitmix64 stream started at `seed`, as a pure
// function of (seed, k). Replicate k of a resampling run is driven by a
// generator seeded with stream_at(seed, k), so replicates can be computed
// in any order (or in parallel) with identical results.
inline std::uint64_t stream_at(std::uint64_t seed, std::uint64_t k) {
    return splitmix64_mix(seed + (k + 1) * kSplitMixGamma);
}

// Plain splitmix64 generator.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kSplitMixGamma;
        return splitmix64_mix(state_);
    }

    // Uniform in [0, 1), 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be > 0. Uses the widening-multiply
    // trick; bias is negligible for the n used here (< 2^32).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    std::uint64_t state_;
};

}  // namespace latecount::rng
