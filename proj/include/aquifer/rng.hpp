#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace aquifer {

// Splittable deterministic generator. Every stochastic component takes one
// explicit seed and derives independent streams via split(); no global RNG.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::seed_seq seq{seed};
        engine_.seed(seq);
    }

    // Independent child stream; a pure function of (seed, stream), so results
    // do not depend on thread schedule or draw order elsewhere.
    Rng split(std::uint64_t stream) const { return Rng(seed_, stream); }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, bound) without modulo bias.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = -bound % bound;
        for (;;) {
            std::uint64_t x = engine_();
            if (x >= threshold) return x % bound;
        }
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller; avoids implementation-defined std::normal_distribution.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates.
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed) {
        std::seed_seq seq{seed, stream};
        engine_.seed(seq);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace aquifer
