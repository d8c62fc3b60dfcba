// rng.hpp
// Counter-based deterministic RNG used everywhere randomness is needed.
//
// The generator is splitmix64 (Steele et al., "Fast Splittable Pseudorandom
// Number Generators"): output n = finalize(key + n * GAMMA). It is stateless
// apart from the counter, so a stream is fully described by its 64-bit key,
// and independent streams are derived by hashing the key with a stream id.
// Cross-language replication contract: any implementation of splitmix64 with
// the same key, the same split rule, and the same Fisher-Yates/bounded-draw
// conventions below reproduces the exact sample sequences.

#pragma once

#include <cstdint>
#include <vector>

namespace atmask {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t key) : key_(key) {}

    /// Next 64-bit output; advances the counter.
    std::uint64_t next() { return finalize(key_ + (++counter_) * kGamma); }

    /// Independent stream derived from the original key and a stream id.
    /// Does not depend on how much of this stream has been consumed.
    SplitMix64 split(std::uint64_t stream) const {
        return SplitMix64(finalize(key_ ^ finalize(stream + kStreamSalt)));
    }

    /// Uniform integer in [0, n). n must be > 0. Modulo of a 64-bit draw;
    /// the bias is < n / 2^64 and irrelevant at the n used here.
    std::uint64_t bounded(std::uint64_t n) { return next() % n; }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform float in [lo, hi).
    float uniform(float lo, float hi) {
        return lo + (hi - lo) * static_cast<float>(uniform01());
    }

    /// In-place Fisher-Yates shuffle: for i = n-1 .. 1, j = bounded(i+1), swap.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t key() const { return key_; }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
    static constexpr std::uint64_t kStreamSalt = 0xA0761D6478BD642Full;

    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace atmask
