#include <cmath>

#include <doctest.h>

#include "medfuse/adam.hpp"
#include "test_util.hpp"

using namespace medfuse;
using namespace medfuse::testutil;

TEST_SUITE_BEGIN("adam");

namespace {

ParamStore make_store(Rng& rng) {
    ParamStore store;
    store.add("w", random_tensor(rng, 2, 3));
    store.add("b", random_tensor(rng, 1, 3));
    return store;
}

}  // namespace

TEST_CASE("zero gradients from zero state leave params unchanged") {
    Rng rng(1);
    ParamStore store = make_store(rng);
    const Tensor w_before = store.tensor(0);
    AdamState adam(store, {});
    std::vector<Tensor> grads{Tensor::zeros({2, 3}), Tensor::zeros({1, 3})};
    adam.step(store, grads);
    CHECK(adam.step_count() == 1);
    for (std::size_t i = 0; i < w_before.size(); ++i) {
        CHECK(store.tensor(0).data()[i] == w_before.data()[i]);
    }
}

TEST_CASE("identical calls from identical state give identical results") {
    Rng rng(2);
    std::vector<Tensor> grads{random_tensor(rng, 2, 3), random_tensor(rng, 1, 3)};
    auto run = [&](std::uint64_t seed) {
        Rng r2(seed);
        ParamStore store = make_store(r2);
        AdamState adam(store, {});
        adam.step(store, grads);
        adam.step(store, grads);
        return std::make_pair(store.tensor(0).values(), store.tensor(1).values());
    };
    CHECK(run(9) == run(9));
}

TEST_CASE("first step magnitude is about lr, bias-corrected") {
    // closed form at t=1: update = lr * g / (|g| + eps) ~= lr * sign(g)
    ParamStore store;
    store.add("w", Tensor::row({1.0, -2.0, 0.5}));
    const Tensor before = store.tensor(0);
    AdamConfig cfg;
    cfg.lr = 1e-3;
    AdamState adam(store, cfg);
    const Tensor g = Tensor::row({0.7, -0.3, 1.9});
    adam.step(store, {g});
    for (std::size_t i = 0; i < 3; ++i) {
        const double delta = store.tensor(0).data()[i] - before.data()[i];
        const double expected = -cfg.lr * g.data()[i] / (std::abs(g.data()[i]) + cfg.eps);
        CHECK(delta == doctest::Approx(expected).epsilon(1e-9));
        CHECK(std::abs(delta) == doctest::Approx(cfg.lr).epsilon(1e-4));
    }
}

TEST_CASE("non-finite gradient names the parameter") {
    Rng rng(3);
    ParamStore store = make_store(rng);
    AdamState adam(store, {});
    std::vector<Tensor> grads{Tensor::zeros({2, 3}), Tensor::zeros({1, 3})};
    grads[1].data()[0] = std::nan("");
    CHECK_THROWS_WITH_AS(adam.step(store, grads), doctest::Contains("b"), NumericError);
}

TEST_CASE("global norm clip") {
    std::vector<Tensor> grads{Tensor::row({3.0, 4.0})};  // norm 5
    const double norm = clip_global_norm(grads, 1.0);
    CHECK(norm == doctest::Approx(5.0));
    CHECK(grads[0].at(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(grads[0].at(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
    // under the cap: untouched
    std::vector<Tensor> small{Tensor::row({0.1, 0.1})};
    clip_global_norm(small, 1.0);
    CHECK(small[0].at(0, 0) == 0.1);
}

TEST_SUITE_END();
