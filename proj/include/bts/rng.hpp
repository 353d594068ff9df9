#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bts {

// mt19937_64 output is fixed by the standard, so every stream below is
// reproducible across toolchains. The distributions are implemented here for
// the same reason: std::gamma_distribution and friends are not portable.
using Engine = std::mt19937_64;

/// splitmix64 finalizer applied to (seed, stream); used to derive independent
/// child seeds from one master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// 64-bit FNV-1a.
std::uint64_t hash_id(std::string_view id) noexcept;

/// Uniform on [0, 1) with 53 bits of resolution.
inline double uniform01(Engine& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via the Marsaglia polar method. The second variate of the
/// pair is discarded so each call is self-contained.
double standard_normal(Engine& rng) noexcept;

/// Gamma(shape, 1) via Marsaglia-Tsang. Shapes below 1 use the
/// Gamma(shape + 1) * U^(1/shape) boost.
double sample_gamma(double shape, Engine& rng) noexcept;

/// Beta(a, b) as X / (X + Y) with X ~ Gamma(a), Y ~ Gamma(b).
double sample_beta(double a, double b, Engine& rng) noexcept;

}  // namespace bts
