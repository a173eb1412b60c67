#pragma once

#include <cstdint>

namespace armsim {

// SplitMix64 (Steele/Lea/Vigna). The output sequence is fully determined by
// the algorithm below, with no dependence on the standard library's
// distribution implementations, so seeded runs reproduce byte-identically
// on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 significant bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

private:
    std::uint64_t state_;
};

}  // namespace armsim
