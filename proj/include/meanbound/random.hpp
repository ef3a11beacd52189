// random.hpp
//
// Reproducible random streams. Every Monte-Carlo draw j of a computation seeded
// with `seed` reads from its own generator, seeded by substream_seed(seed, j),
// so results do not depend on how draws are scheduled across workers.
//
// Stability contract (version 1): substream_seed is the SplitMix64 finalizer
// applied to seed + (j + 1) * 0x9E3779B97F4A7C15, and unit doubles take the top
// 53 bits of each SplitMix64 output. Changing either bumps kSubstreamVersion.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

#include <boost/math/special_functions/erf.hpp>

namespace meanbound::random {

inline constexpr int kSubstreamVersion = 1;

inline constexpr std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix_finalize(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Seed for a named sub-purpose (trial index, method, sample size) of a parent seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                           std::uint64_t c = 0) noexcept {
    return substream_seed(substream_seed(substream_seed(seed, a), b), c);
}

/// SplitMix64; satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return splitmix_finalize(state_);
    }

private:
    std::uint64_t state_;
};

/// Uniform on [0,1).
inline double uniform01(SplitMix64& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0,1), for transforms that cannot take 0.
inline double uniform_open(SplitMix64& rng) noexcept {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Fills `out` with the sorted uniforms of draw `stream`.
inline void sorted_uniform_draw(std::uint64_t seed, std::uint64_t stream, std::span<double> out) noexcept {
    SplitMix64 rng(substream_seed(seed, stream));
    for (double& u : out) u = uniform01(rng);
    std::sort(out.begin(), out.end());
}

// ---- samplers used by the simulation harness -------------------------------

inline double standard_normal(SplitMix64& rng) {
    // Inverse transform: Phi^{-1}(u) = -sqrt(2) erfc^{-1}(2u).
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * uniform_open(rng));
}

/// Gamma(shape, 1) by Marsaglia & Tsang, with the u^{1/shape} boost for shape < 1.
inline double gamma(SplitMix64& rng, double shape) {
    if (shape < 1.0) {
        const double g = gamma(rng, shape + 1.0);
        return g * std::pow(uniform_open(rng), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z = 0.0;
        double v = 0.0;
        do {
            z = standard_normal(rng);
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open(rng);
        if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
        if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
    }
}

/// Beta(a, b) as a gamma ratio.
inline double beta(SplitMix64& rng, double a, double b) {
    const double x = gamma(rng, a);
    const double y = gamma(rng, b);
    return x / (x + y);
}

/// Binomial(trials, p) as a sum of Bernoulli draws.
inline double binomial(SplitMix64& rng, unsigned trials, double p) {
    unsigned k = 0;
    for (unsigned i = 0; i < trials; ++i)
        if (uniform01(rng) < p) ++k;
    return static_cast<double>(k);
}

/// Poisson(lambda) by Knuth's product method; adequate for lambda <= 50.
inline double poisson(SplitMix64& rng, double lambda) {
    const double limit = std::exp(-lambda);
    double prod = uniform01(rng);
    unsigned k = 0;
    while (prod > limit) {
        prod *= uniform01(rng);
        ++k;
    }
    return static_cast<double>(k);
}

inline double lognormal(SplitMix64& rng, double mu, double sigma) {
    return std::exp(mu + sigma * standard_normal(rng));
}

}  // namespace meanbound::random
