#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <doctest.h>

#include "medfuse/rng.hpp"
#include "medfuse/tape.hpp"
#include "medfuse/tensor.hpp"

namespace medfuse::testutil {

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Random values bounded away from zero so kinked ops (relu) stay
// differentiable at the sample points.
inline Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double lo = 0.2,
                            double hi = 2.0) {
    Tensor t = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double mag = rng.uniform(lo, hi);
        t.data()[i] = rng.bernoulli(0.5) ? mag : -mag;
    }
    return t;
}

using GraphBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Central finite-difference gradient check (h = 1e-5, 64-bit) of a scalar
// graph against the tape's reverse-mode gradients.
inline void grad_check(std::vector<Tensor> inputs, const GraphBuilder& builder,
                       double tol = 1e-4, double h = 1e-5) {
    std::vector<Tensor> analytic;
    {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(inputs.size());
        for (const Tensor& t : inputs) vars.push_back(tape.param(t));
        const Var loss = builder(tape, vars);
        REQUIRE(tape.value(loss).is_scalar());
        tape.backward(loss);
        for (const Var v : vars) analytic.push_back(tape.grad(v));
    }
    auto eval = [&]() {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(inputs.size());
        for (const Tensor& t : inputs) vars.push_back(tape.param(t));
        return tape.value(builder(tape, vars)).item();
    };
    for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
        for (std::size_t k = 0; k < inputs[ti].size(); ++k) {
            const double saved = inputs[ti].data()[k];
            inputs[ti].data()[k] = saved + h;
            const double fp = eval();
            inputs[ti].data()[k] = saved - h;
            const double fm = eval();
            inputs[ti].data()[k] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double ad = analytic[ti].data()[k];
            INFO("tensor ", ti, " element ", k, ": analytic=", ad, " fd=", fd);
            CHECK(rel_err(ad, fd) < tol);
        }
    }
}

}  // namespace medfuse::testutil
