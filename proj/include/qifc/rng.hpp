#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qifc {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// One top-level seed, independent streams per label. A run derives e.g.
// "currents", "connectivity", "initial-state" streams; replacing one
// ingredient leaves the others untouched.
class StreamRng {
  public:
    StreamRng(std::uint64_t seed, std::string_view label) {
        std::uint64_t x = seed ^ fnv1a64(label);
        // burn a few rounds so nearby seeds decorrelate
        splitmix64(x);
        engine_.seed(splitmix64(x));
    }

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1); bit-deterministic across platforms
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::uint64_t uniform_below(std::uint64_t n) {
        // rejection to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace qifc
