#include "bts/rng.hpp"

#include <cmath>

namespace bts {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_id(std::string_view id) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : id) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

double standard_normal(Engine& rng) noexcept {
    double u, v, s;
    do {
        u = 2.0 * uniform01(rng) - 1.0;
        v = 2.0 * uniform01(rng) - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
}

double sample_gamma(double shape, Engine& rng) noexcept {
    if (shape < 1.0) {
        const double g = sample_gamma(shape + 1.0, rng);
        // 1 - U keeps the base strictly positive.
        return g * std::pow(1.0 - uniform01(rng), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = standard_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01(rng);
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double sample_beta(double a, double b, Engine& rng) noexcept {
    const double x = sample_gamma(a, rng);
    const double y = sample_gamma(b, rng);
    return x / (x + y);
}

}  // namespace bts
