#pragma once

#include <cstdint>

namespace qpwalk {

/// Counter-based SplitMix64 stream: output k is a fixed hash of seed + k*gamma,
/// so a (seed, counter) pair fully determines every draw on any platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Stream for replica `r` of a base seed, per the documented seed derivation.
    static SplitMix64 replica(std::uint64_t seed, std::uint64_t r) {
        return SplitMix64(seed + r);
    }

private:
    std::uint64_t state_;
};

}  // namespace qpwalk
