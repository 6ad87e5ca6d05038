#pragma once

#include <cmath>
#include <cstdint>

namespace hrw {

// SplitMix64; used to expand a user seed into generator state.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// Xoshiro256++ with counter-based stream splitting: replica k of seed s gets
// a state expanded from (s, k), so parallel schedules cannot change draws.
class Rng {
public:
    Rng() : Rng(0, 0) {}

    Rng(std::uint64_t seed, std::uint64_t stream) {
        SplitMix64 sm(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
        s0_ = sm.next();
        s1_ = sm.next();
        s2_ = sm.next();
        s3_ = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s0_ + s3_, 23) + s0_;
        const std::uint64_t t = s1_ << 17;
        s2_ ^= s0_;
        s3_ ^= s1_;
        s1_ ^= s2_;
        s0_ ^= s3_;
        s2_ ^= t;
        s3_ = rotl(s3_, 45);
        return result;
    }

    // Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform double in (0, 1).
    double uniform01_open() {
        std::uint64_t x;
        do {
            x = next() >> 11;
        } while (x == 0);
        return static_cast<double>(x) * 0x1.0p-53;
    }

    // Unbiased uniform integer in [0, n) (Lemire rejection).
    std::uint64_t below(std::uint64_t n) {
        using u128 = unsigned __int128;
        std::uint64_t x = next();
        u128 m = static_cast<u128>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = next();
                m = static_cast<u128>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double exponential() { return -std::log1p(-uniform01()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s0_, s1_, s2_, s3_;
};

} // namespace hrw
