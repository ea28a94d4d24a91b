#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace merge3 {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used for counter-based streams where the value at a
/// coordinate must not depend on evaluation order.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from a 64-bit hash.
constexpr double unit_from_bits(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Derives an independent generator for a (seed, stream...) tuple.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (stream.size() + 1));
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffULL));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto s : stream) {
        push(s);
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Stable 64-bit seed for a sub-stream, e.g. a DARE mask for one endpoint.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
    return mix64(mix64(seed ^ mix64(a)) ^ mix64(b + 0x632be59bd9b4e019ULL));
}

} // namespace merge3
