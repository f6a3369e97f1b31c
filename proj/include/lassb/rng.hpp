#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "lassb/common.hpp"

namespace lassb {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// One deterministic stream per (seed, stream_id); replicate workloads own
// disjoint streams, so results do not depend on scheduling or thread count.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0)
        : eng_(splitmix64(splitmix64(seed) ^ splitmix64(stream_id ^ 0xA3C59AC2ULL))) {}

    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }  // [0,1)

    double uniform_pos() {
        double u;
        do { u = uniform(); } while (u <= 0.0);
        return u;
    }

    double normal() {
        std::normal_distribution<double> d;
        return d(eng_);
    }

    // Marsaglia-Tsang squeeze for shape >= 1; smaller shapes are boosted to
    // shape+1 and scaled back by U^(1/shape). Unit rate.
    double gamma(double shape) {
        require_internal(shape > 0 && std::isfinite(shape), "gamma draw: shape must be positive");
        if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform_pos(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Ratio of two gamma draws, reusing the kernel above.
    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        const double s = x + y;
        return s > 0.0 ? x / s : a / (a + b);
    }

    long poisson(double mean) {
        require_internal(mean >= 0 && mean < 1e9, "poisson draw: mean out of range");
        if (mean == 0.0) return 0;
        std::poisson_distribution<long> d(mean);
        return d(eng_);
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace lassb
