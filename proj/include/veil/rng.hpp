#pragma once

// Deterministic 64-bit PRNG (splitmix64) and the shuffle/sampling helpers
// built on it. Every seeded operation in the library routes through these
// so that results are reproducible across platforms and implementations.

#include <cstdint>
#include <string_view>
#include <vector>

namespace veil {

// splitmix64: state advances by the golden-gamma constant, output is the
// finalized mix. Reference sequence for seed 0 starts with
// 0xe220a8397b1dcdaf.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased-enough bounded draw for shuffling (modulo; bound << 2^64).
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

    double next_unit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// FNV-1a, used to derive per-key deterministic seeds and hash buckets.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Fisher-Yates over [0, n), highest index first: for i = n-1 .. 1,
// j = next_below(i + 1), swap a[i] and a[j].
inline std::vector<std::size_t> shuffled_indices(std::size_t n,
                                                 std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    SplitMix64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace veil
