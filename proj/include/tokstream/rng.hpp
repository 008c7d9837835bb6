#pragma once

#include <cstdint>
#include <random>

namespace tokstream {

/// Seedable, splittable generator.
///
/// Algorithm: std::mt19937_64 seeded with the SplitMix64 finalizer of the seed.
/// `split()` draws one 64-bit word from the parent and seeds the child with its
/// SplitMix64 mix, so child streams are reproducible from the parent seed alone.
/// `uniform()` uses the top 53 bits of one draw, which makes it bit-exact across
/// standard libraries; `normal()` defers to std::normal_distribution and is only
/// reproducible within one standard library implementation.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : engine_(mix(seed)) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive. Unbiased via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(engine_());
        const std::uint64_t limit = max() - (max() % span + 1) % span;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x > limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    double normal() { return normal_(engine_); }

    Rng split() { return Rng(engine_()); }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace tokstream
