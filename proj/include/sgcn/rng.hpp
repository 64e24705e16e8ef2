#pragma once

#include <cstdint>
#include <vector>

namespace sgcn {

// SplitMix64. Implemented here so that seeded runs produce identical
// streams on every platform; std::mt19937 distributions are not portable
// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) using the top 53 bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Uniform integer in [0, n). Modulo bias is irrelevant here and the
    // result is the same on every platform.
    std::uint64_t next_below(std::uint64_t n) {
        return next_u64() % n;
    }

    // Fisher-Yates, driven by next_below so shuffles are portable.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent stream, e.g. one per subsystem.
    Rng split(std::uint64_t salt) {
        return Rng(next_u64() ^ (0xD1B54A32D192ED03ULL * salt));
    }

private:
    std::uint64_t state_;
};

} // namespace sgcn
