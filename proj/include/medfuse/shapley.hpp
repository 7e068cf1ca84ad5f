#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace medfuse {

// Game value over a feature subset, encoded as a 0/1 membership vector.
using ValueFn = std::function<double(const std::vector<std::uint8_t>&)>;

// Classic Shapley values by full subset enumeration (2^n evaluations,
// memoized so each subset is evaluated once). Throws ConfigError when
// n_features exceeds exact_limit, pointing at the sampled variant.
// Subset evaluations may run on n_threads workers (value_fn must be
// thread-safe); the weighted accumulation stays in fixed order.
std::vector<double> shapley_exact(const ValueFn& value_fn, std::size_t n_features,
                                  std::size_t exact_limit = 12, std::size_t n_threads = 1);

struct SampledShapley {
    std::vector<double> values;
    std::vector<double> std_errors;  // Monte Carlo standard error per feature
    std::size_t n_samples = 0;
};

// Permutation-sampling estimator: unbiased, seed-deterministic, and exactly
// efficient per permutation (marginal contributions telescope to
// v(N) - v(empty)).
SampledShapley shapley_sampled(const ValueFn& value_fn, std::size_t n_features,
                               std::size_t n_samples, std::uint64_t seed);

}  // namespace medfuse
