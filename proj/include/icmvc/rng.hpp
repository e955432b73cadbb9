#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace icmvc {

/// SplitMix64 (Steele, Lea & Flood 2014). Every random draw in the library
/// goes through this generator so that masks, synthetic data and parameter
/// initializations are reproducible from a seed on any platform.
/// Derived quantities use fixed recipes: 53-bit mantissa uniforms,
/// rejection-sampled bounded integers and one-sided Box-Muller normals.
class SplitMix64 {
public:
    static constexpr const char* kAlgorithm = "splitmix64";

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Independent child stream; advances this generator by one draw.
    SplitMix64 split() { return SplitMix64(next()); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % bound;
    }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

/// Seed for a named sub-stream of a run seed (mask, model init, k-means...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return g.next();
}

}  // namespace icmvc
