#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace pspin::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

// 53-bit uniform in the open interval (0,1); never returns 0 or 1.
inline double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Standard normal indexed by (key, counter). Counter-based so that tensor
// entries can be generated in any order (or in parallel) and still be
// bit-identical for a given key.
inline double gaussian_at(std::uint64_t key, std::uint64_t counter) {
    const std::uint64_t k = mix(key, counter);
    const double u1 = to_unit(splitmix64(k ^ 0x5851f42d4c957f2dULL));
    const double u2 = to_unit(splitmix64(k ^ 0x14057b7ef767814fULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline constexpr std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable per-task seed: hash of (master seed, task tag, task index).
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                           std::uint64_t index) {
    return mix(mix(master, hash_string(tag)), index);
}

}  // namespace pspin::rng
