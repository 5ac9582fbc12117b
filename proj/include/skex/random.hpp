#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace skex {

/// Seedable generator with platform-independent output.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// Distributions are implemented here because the standard library ones are
/// implementation-defined, which would make datasets differ across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Derive an independent stream for a labelled sub-task.
    static Rng derived(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
        std::uint64_t h = mix(seed ^ 0x9e3779b97f4a7c15ULL);
        h = mix(h ^ a);
        h = mix(h ^ (b + 0x632be59bd9b4e019ULL));
        h = mix(h ^ (c + 0x85ebca6b0c2b2ae3ULL));
        return Rng(h);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n), n > 0.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

} // namespace skex
