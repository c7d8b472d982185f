#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pbtme {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for an independent stream identified by a path of tags under a master seed.
/// The same (master, tags) always yields the same seed, whatever else was drawn before.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = splitmix64(master);
    for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632BE59BD9B4E019ULL));
    return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    return Rng(derive_seed(master, tags));
}

// Stream tags used across the orchestrator.
namespace stream {
inline constexpr std::uint64_t init_params = 1;
inline constexpr std::uint64_t init_phi = 2;
inline constexpr std::uint64_t hyperparams = 3;
inline constexpr std::uint64_t slot = 4;
inline constexpr std::uint64_t selection = 5;
inline constexpr std::uint64_t variation = 6;
inline constexpr std::uint64_t cvt = 7;
inline constexpr std::uint64_t population = 8;
inline constexpr std::uint64_t random_agent = 9;
inline constexpr std::uint64_t evaluation = 10;
inline constexpr std::uint64_t injection = 11;
} // namespace stream

} // namespace pbtme
