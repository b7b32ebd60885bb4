#pragma once

#include <cstdint>
#include <random>

namespace hhfs {

using rng_engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for task `index` under `master`. Streams depend only on (master, index),
// never on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ ((index + 1) * 0xd1b54a32d192ed03ULL);
    return splitmix64(s);
}

inline rng_engine make_engine(std::uint64_t master, std::uint64_t index) {
    return rng_engine(derive_seed(master, index));
}

} // namespace hhfs
