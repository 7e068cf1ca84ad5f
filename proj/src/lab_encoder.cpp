#include <cmath>

#include "medfuse/labs.hpp"
#include "medfuse/model.hpp"

namespace medfuse {

NormStats compute_norm_stats(const std::vector<EncounterRecord>& records,
                             const std::vector<std::string>& catalog) {
    const std::size_t k = catalog.size();
    NormStats stats;
    stats.mean.assign(k, 0.0);
    stats.sd.assign(k, 1.0);
    stats.count.assign(k, 0);
    std::vector<double> sum(k, 0.0), sumsq(k, 0.0);
    for (const auto& rec : records) {
        for (std::size_t i = 0; i < k; ++i) {
            if (const LabEntry* e = rec.panel.find(catalog[i])) {
                sum[i] += e->value;
                sumsq[i] += e->value * e->value;
                ++stats.count[i];
            }
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        const auto n = static_cast<double>(stats.count[i]);
        if (stats.count[i] >= 1) stats.mean[i] = sum[i] / n;
        if (stats.count[i] >= 2) {
            const double var = (sumsq[i] - n * stats.mean[i] * stats.mean[i]) / (n - 1.0);
            stats.sd[i] = var > 1e-24 ? std::sqrt(var) : 1.0;
        }
    }
    return stats;
}

LabVector vectorize_panel(const LabPanel& panel, const NormStats& stats,
                          const std::vector<std::string>& catalog) {
    if (stats.size() != catalog.size()) {
        throw ShapeError("vectorize_panel: stats size " + std::to_string(stats.size()) +
                         " vs catalog size " + std::to_string(catalog.size()));
    }
    LabVector out;
    out.values.assign(catalog.size(), 0.0);
    out.mask.assign(catalog.size(), 0.0);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (const LabEntry* e = panel.find(catalog[i])) {
            if (!std::isfinite(e->value)) {
                throw NumericError("vectorize_panel: non-finite value for " + catalog[i]);
            }
            out.values[i] = (e->value - stats.mean[i]) / stats.sd[i];
            out.mask[i] = 1.0;
        }
    }
    return out;
}

Var lab_encoder_forward(Tape& tape, const std::vector<Var>& vars, const Model& model,
                        const LabVector& labvec) {
    const std::size_t k = model.catalog.size();
    if (labvec.values.size() != k || labvec.mask.size() != k) {
        throw ShapeError("lab_encoder: lab vector does not match catalog size " +
                         std::to_string(k));
    }
    std::vector<double> joined;
    joined.reserve(2 * k);
    joined.insert(joined.end(), labvec.values.begin(), labvec.values.end());
    joined.insert(joined.end(), labvec.mask.begin(), labvec.mask.end());
    for (double v : joined) {
        if (!std::isfinite(v)) throw NumericError("lab_encoder: non-finite input");
    }
    const LabsIdx& ix = model.labs_idx;
    Var x = tape.leaf(Tensor::row(std::move(joined)));
    Var h1 = tape.relu(tape.add(tape.matmul(x, vars[ix.w1]), vars[ix.b1]));
    Var h2 = tape.relu(tape.add(tape.matmul(h1, vars[ix.w2]), vars[ix.b2]));
    return tape.add(tape.matmul(h2, vars[ix.w3]), vars[ix.b3]);
}

}  // namespace medfuse
