#pragma once

#include <cstdint>
#include <random>

namespace suremap {

// Mixing step of the SplitMix64 generator.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Key of the independent stream for one (seed, trial, rate, task) cell.
// Each coordinate is folded in with its own mixing round, so neighbouring
// cells get unrelated keys and the key does not depend on evaluation order.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t trial, std::uint64_t rate,
                                   std::uint64_t task) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ splitmix64(trial + 0x1000));
    h = splitmix64(h ^ splitmix64(rate + 0x2000));
    h = splitmix64(h ^ splitmix64(task + 0x3000));
    return h;
}

// Task slot reserved for draws shared by every task (the synthetic center).
inline constexpr std::uint64_t kSharedStream = ~std::uint64_t{0};

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t trial, std::uint64_t rate, std::uint64_t task) {
    return std::mt19937_64(stream_key(seed, trial, rate, task));
}

}  // namespace suremap
