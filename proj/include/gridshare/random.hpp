#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gridshare {

using Rng = std::mt19937_64;

/// Derives a 64-bit stream seed from a list of keys (master seed, stream tag,
/// agent id, round, ...). Distinct key tuples give independent-looking seeds.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
    // splitmix64 finalizer folded over the keys
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (std::uint64_t k : keys) {
        h ^= k + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        h += 0x9E3779B97F4A7C15ull;
        h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ull;
        h = (h ^ (h >> 27)) * 0x94D049BB133111EBull;
        h ^= h >> 31;
    }
    return h;
}

enum class StreamTag : std::uint64_t {
    Generation = 1,
    Agent = 2,
    Oracle = 3,
};

}  // namespace gridshare
