#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace densecode {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Derives an independent child seed from a base seed and a path of stream
/// indices, e.g. derive_seed(seed, {profile, restart}). Stable across runs.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = detail::splitmix64(base);
    for (std::uint64_t p : path) s = detail::splitmix64(s ^ detail::splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

/// Standard complex Gaussian: real and imaginary parts N(0, 1/2).
inline std::complex<double> complex_gaussian(Rng& rng) {
    std::normal_distribution<double> n(0.0, 0.7071067811865476);
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

}  // namespace densecode
