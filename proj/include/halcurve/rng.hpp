#pragma once

// Deterministic random number generation.
//
// Simulation replications must be reproducible bit-for-bit for a given master
// seed regardless of how many worker threads run them, and the standard
// library's distributions are implementation-defined. So we carry our own
// small generator: splitmix64 to derive per-task seeds from (master, counter)
// pairs, xoshiro256++ as the stream generator, and Box-Muller for normals.

#include <cmath>
#include <cstdint>

namespace halcurve {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Counter-based seed derivation: independent streams for (master, 0),
// (master, 1), ... without sequential state. Used to give every replication
// (and every sub-task within one) its own seed up front, which is what makes
// job-count-independent scheduling deterministic.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ull * (counter + 1));
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        // Seed expansion per the xoshiro authors' recommendation.
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller. Draws a fixed two uniforms per call and
    // returns one variate; no cached spare, so call sites consume a predictable
    // amount of the stream.
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();  // guard log(0)
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Uniform integer in [0, bound) by rejection (no modulo bias).
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace halcurve
