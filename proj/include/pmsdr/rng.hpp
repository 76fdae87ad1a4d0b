#pragma once

#include <cstdint>
#include <random>

namespace pmsdr {

// Deterministic seed derivation. Every randomized routine in the library
// draws from an engine seeded by mixing (base seed, stream tag, index), so
// that per-column / per-trial work can be farmed out to threads in any order
// while producing bit-identical results.
//
// The mixer is splitmix64, which is a bijection on 64-bit words with good
// avalanche behaviour; feeding it the running state three times separates
// the (seed, tag, index) coordinates.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    auto splitmix = [](std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t state = seed;
    std::uint64_t h = splitmix(state);
    state ^= tag;
    h ^= splitmix(state);
    state ^= index;
    h ^= splitmix(state);
    return h;
}

// Stream tags for the library's independent random streams. Keeping them in
// one place documents which subsystems deliberately share a stream.
namespace stream {
constexpr std::uint64_t basis = 0x42;        // subspace basis generation
constexpr std::uint64_t coeffs = 0x43;       // per-column coefficient draws
constexpr std::uint64_t permutation = 0x50;  // per-column partial permutations
constexpr std::uint64_t outlier_pick = 0x4f; // per-group outlier index subsets
constexpr std::uint64_t noise = 0x4e;        // additive noise
constexpr std::uint64_t kmeans = 0x4b;       // k-means++ restarts
constexpr std::uint64_t trial = 0x54;        // Monte Carlo trial batches
} // namespace stream

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return Rng(mix_seed(seed, tag, index));
}

} // namespace pmsdr
