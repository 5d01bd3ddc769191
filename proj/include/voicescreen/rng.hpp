#pragma once

// Seeded randomness. Every random draw in the library goes through these
// helpers so results depend only on the 64-bit seed, not on the standard
// library's distribution implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace voicescreen {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Named-stream splitter: derive_seed(seed, "init") and derive_seed(seed, "shuffle")
/// are independent streams of the same root seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept {
    return splitmix64(seed ^ splitmix64(fnv1a(stream)));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t value) noexcept {
    return splitmix64(seed ^ splitmix64(value + 0x632be59bd9b4e019ULL));
}

template <typename... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view first, Parts&&... rest) noexcept
    requires(sizeof...(Parts) > 0)
{
    return derive_seed(derive_seed(seed, first), std::forward<Parts>(rest)...);
}

template <typename... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t first, Parts&&... rest) noexcept
    requires(sizeof...(Parts) > 0)
{
    return derive_seed(derive_seed(seed, first), std::forward<Parts>(rest)...);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform in [0, 1) with 53 bits of resolution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n) by rejection (no modulo bias).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = 0;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

/// Standard normal via Box-Muller; consumes exactly two draws.
inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double normal(Rng& rng, double mean, double sd) {
    return mean + sd * standard_normal(rng);
}

inline double exponential(Rng& rng, double mean) {
    return -mean * std::log(1.0 - uniform01(rng));
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace voicescreen
