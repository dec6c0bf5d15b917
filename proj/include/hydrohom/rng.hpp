////////////////////////////////////////////////////////////////////////////////
// rng.hpp
////////////////////////////////////////////////////////////////////////////////
// Counter-based randomness: every draw is a pure function of (seed, counter),
// so parallel generation is deterministic and identical across runs and
// platforms.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_RNG_HPP
#define HYDROHOM_RNG_HPP

#include <cstdint>

namespace hydrohom {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
    return splitmix64(seed ^ splitmix64(v));
}

// Uniform double in [0, 1) from a hashed counter.
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(splitmix64(splitmix64(seed) ^ counter) >> 11) * 0x1.0p-53;
}

// Uniform double in [-1, 1).
inline double uniform_sym(std::uint64_t seed, std::uint64_t counter) {
    return 2.0 * uniform01(seed, counter) - 1.0;
}

// Counter stream: convenience for drawing a sequence from one logical key.
struct RngStream {
    std::uint64_t seed;
    std::uint64_t counter = 0;
    explicit RngStream(std::uint64_t s) : seed(s) {}
    double u01() { return uniform01(seed, counter++); }
    double sym() { return uniform_sym(seed, counter++); }
};

} // namespace hydrohom

#endif
