#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace hawkes {

// Every variate is produced from raw engine output by the formulas below, so
// streams are bit-identical across standard libraries (std:: distributions are
// implementation-defined and are never used).
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+splitmix64/v1";

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based seed derivation: derive_seed(master, {a, b, c}) hashes the
/// path component by component, so any node of a seed tree can be recomputed
/// without replaying its siblings.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) {
        s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
    }
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Poisson variate by multiplication of uniforms; large means are split
    /// into chunks using additivity of the Poisson law.
    std::uint64_t poisson(double mean) {
        constexpr double kChunk = 30.0;
        std::uint64_t total = 0;
        while (mean > kChunk) {
            total += poisson_small(kChunk);
            mean -= kChunk;
        }
        return total + poisson_small(mean);
    }

private:
    std::uint64_t poisson_small(double mean) {
        if (mean <= 0.0) {
            return 0;
        }
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = 1.0 - uniform();
        while (prod > limit) {
            ++k;
            prod *= 1.0 - uniform();
        }
        return k;
    }

    std::mt19937_64 engine_;
};

} // namespace hawkes
