#include "medfuse/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "medfuse/error.hpp"
#include "medfuse/rng.hpp"
#include "medfuse/threadpool.hpp"

namespace medfuse {

std::vector<double> shapley_exact(const ValueFn& value_fn, std::size_t n_features,
                                  std::size_t exact_limit, std::size_t n_threads) {
    if (n_features == 0) throw ConfigError("shapley_exact: need at least one feature");
    if (exact_limit > 25) throw ConfigError("shapley_exact: exact_limit too large");
    if (n_features > exact_limit) {
        throw ConfigError("shapley_exact: " + std::to_string(n_features) + " features exceed the " +
                          std::to_string(exact_limit) +
                          "-feature enumeration limit; use shapley_sampled");
    }
    const std::size_t n_subsets = std::size_t{1} << n_features;

    // Evaluate every subset exactly once.
    std::vector<double> v(n_subsets);
    ThreadPool pool(n_threads);
    pool.run(n_subsets, [&](std::size_t mask) {
        std::vector<std::uint8_t> members(n_features);
        for (std::size_t i = 0; i < n_features; ++i) {
            members[i] = (mask >> i) & 1u ? 1 : 0;
        }
        v[mask] = value_fn(members);
    });

    // w[s] = s! (n-1-s)! / n!
    std::vector<double> w(n_features);
    for (std::size_t s = 0; s < n_features; ++s) {
        double lw = 0.0;
        for (std::size_t i = 2; i <= s; ++i) lw += std::log(static_cast<double>(i));
        for (std::size_t i = 2; i + s + 1 <= n_features; ++i) {
            lw += std::log(static_cast<double>(i));
        }
        for (std::size_t i = 2; i <= n_features; ++i) lw -= std::log(static_cast<double>(i));
        w[s] = std::exp(lw);
    }

    std::vector<double> phi(n_features, 0.0);
    for (std::size_t mask = 0; mask < n_subsets; ++mask) {
        const auto size = static_cast<std::size_t>(std::popcount(mask));
        for (std::size_t i = 0; i < n_features; ++i) {
            const std::size_t bit = std::size_t{1} << i;
            if (mask & bit) continue;
            phi[i] += w[size] * (v[mask | bit] - v[mask]);
        }
    }
    return phi;
}

SampledShapley shapley_sampled(const ValueFn& value_fn, std::size_t n_features,
                               std::size_t n_samples, std::uint64_t seed) {
    if (n_features == 0) throw ConfigError("shapley_sampled: need at least one feature");
    if (n_samples < 1) throw ConfigError("shapley_sampled: n_samples must be at least 1");

    std::vector<std::uint8_t> members(n_features, 0);
    const double v_empty = value_fn(members);

    Rng rng(Rng::mix(seed, "shapley"));
    std::vector<std::size_t> perm(n_features);
    std::iota(perm.begin(), perm.end(), 0);

    std::vector<double> sum(n_features, 0.0), sumsq(n_features, 0.0);
    for (std::size_t s = 0; s < n_samples; ++s) {
        rng.shuffle(perm);
        std::fill(members.begin(), members.end(), 0);
        double v_prev = v_empty;
        for (const std::size_t feature : perm) {
            members[feature] = 1;
            const double v_cur = value_fn(members);
            const double delta = v_cur - v_prev;
            sum[feature] += delta;
            sumsq[feature] += delta * delta;
            v_prev = v_cur;
        }
    }

    SampledShapley out;
    out.n_samples = n_samples;
    out.values.resize(n_features);
    out.std_errors.assign(n_features, 0.0);
    const double n = static_cast<double>(n_samples);
    for (std::size_t i = 0; i < n_features; ++i) {
        out.values[i] = sum[i] / n;
        if (n_samples > 1) {
            const double var = (sumsq[i] - n * out.values[i] * out.values[i]) / (n - 1.0);
            out.std_errors[i] = std::sqrt(std::max(var, 0.0) / n);
        }
    }
    return out;
}

}  // namespace medfuse
