#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "medfuse/error.hpp"
#include "medfuse/util.hpp"

namespace medfuse {

// Deterministic RNG. mt19937_64 is fully specified by the standard and all
// distributions below are implemented here rather than via std::*_distribution,
// so streams are reproducible across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw ConfigError("Rng::below: n must be positive");
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller, no spare caching: consumes exactly two uniforms per draw.
    double normal(double mu = 0.0, double sigma = 1.0) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Normal conditioned on [lo, hi] via rejection.
    double truncated_normal(double mu, double sigma, double lo, double hi) {
        for (int i = 0; i < 1000000; ++i) {
            const double v = normal(mu, sigma);
            if (v >= lo && v <= hi) return v;
        }
        throw ConfigError("truncated_normal: acceptance region has negligible mass");
    }

    // Index draw proportional to non-negative weights.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw ConfigError("categorical: negative weight");
            total += w;
        }
        if (total <= 0.0) throw ConfigError("categorical: weights sum to zero");
        const double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Child stream seed for (seed, index) or (seed, tag) derivations.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

    static std::uint64_t mix(std::uint64_t seed, std::string_view tag) {
        return mix(seed, fnv1a64(tag));
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace medfuse
