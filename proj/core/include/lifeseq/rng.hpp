#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "lifeseq/common.hpp"

namespace lifeseq {

// splitmix64 step; the backbone of the seed-derivation tree.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives a child seed from (parent, label...). Every module draws its
// randomness from a seed derived off the single run seed, so parallel
// schedules can never reorder the streams.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) {
    std::uint64_t s = parent ^ (0x9e3779b97f4a7c15ull + (label << 1));
    return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
    return derive_seed(parent, fnv1a64(label.data(), label.size()));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(parent, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t n) {
    return derive_seed(derive_seed(parent, label), n);
}

// Deterministic generator. mt19937_64 is pinned by the standard; the
// distributions below are hand-rolled because the <random> distributions are
// implementation-defined and would break cross-platform reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    real uniform() { return static_cast<real>(next_u64() >> 11) * 0x1.0p-53; }

    real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n); masking rejection keeps the draw unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t mask = ~std::uint64_t{0} >> __builtin_clzll((n - 1) | 1);
        std::uint64_t v;
        do {
            v = next_u64() & mask;
        } while (v >= n);
        return v;
    }

    int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

    bool bernoulli(real p) { return uniform() < p; }

    // Box-Muller with a cached spare.
    real normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const real u1 = 1.0 - uniform();  // avoid log(0)
        const real u2 = uniform();
        const real r = std::sqrt(-2.0 * std::log(u1));
        const real theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    real normal(real mean, real stddev) { return mean + stddev * normal(); }

    // Standard logistic variate (ordered-logit noise).
    real logistic() {
        const real u = std::min(std::max(uniform(), 1e-15), 1.0 - 1e-15);
        return std::log(u / (1.0 - u));
    }

    int poisson(real lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) {  // Knuth product method
            const real limit = std::exp(-lambda);
            real prod = uniform();
            int k = 0;
            while (prod > limit) {
                prod *= uniform();
                ++k;
            }
            return k;
        }
        // Normal approximation for large rates; exactness is not needed there.
        const int k = static_cast<int>(std::lround(normal(lambda, std::sqrt(lambda))));
        return k < 0 ? 0 : k;
    }

    // Marsaglia-Tsang for shape >= 1; boosted for shape < 1.
    real gamma(real shape, real scale) {
        if (shape < 1.0) {
            const real u = std::max(uniform(), 1e-15);
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const real d = shape - 1.0 / 3.0;
        const real c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            real x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const real u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(std::max(u, 1e-15)) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    int categorical(const Vec& weights) {
        real total = 0.0;
        for (real w : weights) total += w;
        real t = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            t -= weights[i];
            if (t < 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    real spare_ = 0.0;
};

}  // namespace lifeseq
