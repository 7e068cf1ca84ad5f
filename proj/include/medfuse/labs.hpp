#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medfuse/cohort.hpp"

namespace medfuse {

// Per-item normalization statistics, computed on the training split only.
// sd falls back to 1 where an item has fewer than two observations (or zero
// spread), so z-scoring is always defined.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<std::uint64_t> count;

    std::size_t size() const { return mean.size(); }
};

NormStats compute_norm_stats(const std::vector<EncounterRecord>& records,
                             const std::vector<std::string>& catalog);

// Numeric lab input: z-scored values aligned to the catalog order plus an
// explicit presence mask. values[i] is 0 wherever mask[i] is 0.
struct LabVector {
    std::vector<double> values;
    std::vector<double> mask;
};

LabVector vectorize_panel(const LabPanel& panel, const NormStats& stats,
                          const std::vector<std::string>& catalog);

}  // namespace medfuse
