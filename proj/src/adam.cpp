#include "medfuse/adam.hpp"

#include <cmath>

#include "medfuse/error.hpp"
#include "medfuse/kernels.hpp"

namespace medfuse {

AdamState::AdamState(const ParamStore& params, AdamConfig config) : config_(config) {
    if (config_.lr <= 0.0) throw ConfigError("adam: lr must be positive");
    if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 || config_.beta2 >= 1.0) {
        throw ConfigError("adam: betas must be in [0, 1)");
    }
    if (config_.eps <= 0.0) throw ConfigError("adam: eps must be positive");
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_.push_back(Tensor::zeros(params.tensor(i).shape()));
        v_.push_back(Tensor::zeros(params.tensor(i).shape()));
    }
}

void AdamState::step(ParamStore& params, const std::vector<Tensor>& grads) {
    if (grads.size() != params.size()) {
        throw ShapeError("adam: gradient count " + std::to_string(grads.size()) +
                         " does not match " + std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!grads[i].same_shape(params.tensor(i))) {
            throw ShapeError("adam: gradient shape " + grads[i].shape_str() +
                             " does not match parameter " + params.name(i) + " " +
                             params.tensor(i).shape_str());
        }
        if (!grads[i].all_finite()) {
            throw NumericError("adam: non-finite gradient for parameter " + params.name(i));
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const double inv_bc1 = 1.0 / bc1;
    const double inv_bc2 = 1.0 / bc2;
    for (std::size_t i = 0; i < grads.size(); ++i) {
        kernels::ops().adam_update(params.tensor(i).data(), m_[i].data(), v_[i].data(),
                                   grads[i].data(), grads[i].size(), config_.lr, config_.beta1,
                                   config_.beta2, config_.eps, inv_bc1, inv_bc2);
    }
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
    if (max_norm <= 0.0) throw ConfigError("clip_global_norm: max_norm must be positive");
    double sumsq = 0.0;
    for (const Tensor& g : grads) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            sumsq += g.data()[i] * g.data()[i];
        }
    }
    const double norm = std::sqrt(sumsq);
    if (norm > max_norm) {
        const double f = max_norm / norm;
        for (Tensor& g : grads) {
            kernels::ops().scale(f, g.data(), g.data(), g.size());
        }
    }
    return norm;
}

}  // namespace medfuse
