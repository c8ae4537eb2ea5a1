#pragma once

#include <cstdint>
#include <random>

namespace taskfarm::rng {

// One splitmix64 step. Used to derive independent seed streams from a
// scenario seed without correlating the resulting mt19937_64 engines.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for sub-stream `stream` of a master seed.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 1));
}

inline std::mt19937_64 engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

// Uniform index in [0, k). Contract relied on by the dispatcher/tuple-space
// equivalence oracle: consumes exactly one engine draw when k >= 2 and none
// when k <= 1. The modulo bias (~k / 2^64) is far below anything the
// frequency tests can observe.
inline std::size_t uniform_index(std::mt19937_64& eng, std::size_t k) {
    if (k <= 1) {
        return 0;
    }
    return static_cast<std::size_t>(eng() % static_cast<std::uint64_t>(k));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace taskfarm::rng
