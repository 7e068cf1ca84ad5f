#pragma once

#include <cstdint>
#include <vector>

#include "medfuse/params.hpp"
#include "medfuse/tensor.hpp"

namespace medfuse {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction over a ParamStore. Moment buffers are
// zero-initialized and aligned to the store's registration order.
class AdamState {
public:
    AdamState(const ParamStore& params, AdamConfig config);

    // One update step. grads must align with the store (same count/shapes).
    // Throws NumericError naming the parameter on non-finite gradients.
    void step(ParamStore& params, const std::vector<Tensor>& grads);

    std::uint64_t step_count() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::uint64_t t_ = 0;
};

// In-place scaling of grads so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

}  // namespace medfuse
