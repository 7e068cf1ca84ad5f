#include <cmath>
#include <cstring>

#include <doctest.h>

#include "gradcheck_ops.hpp"
#include "medfuse/tape.hpp"
#include "test_util.hpp"

using namespace medfuse;
using namespace medfuse::testutil;

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("matmul basics") {
    Tape t;
    const Var a = t.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
    const Var identity = t.leaf(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    const Var zero = t.leaf(Tensor::zeros({2, 2}));

    const Tensor& ai = t.value(t.matmul(a, identity));
    CHECK(ai.values() == std::vector<double>{1, 2, 3, 4});
    const Tensor& az = t.value(t.matmul(a, zero));
    CHECK(az.values() == std::vector<double>{0, 0, 0, 0});

    const Var b = t.leaf(Tensor::matrix(2, 1, {5, 6}));
    const Tensor& ab = t.value(t.matmul(a, b));
    CHECK(ab.at(0, 0) == 17.0);
    CHECK(ab.at(1, 0) == 39.0);

    CHECK_THROWS_WITH_AS(t.matmul(a, t.leaf(Tensor::zeros({3, 2}))),
                         doctest::Contains("[2x2]"), ShapeError);
}

TEST_CASE("softmax values and stability") {
    Tape t;
    const Tensor& sym = t.value(t.softmax(t.leaf(Tensor::row({0, 0})), 1));
    CHECK(sym.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    const Tensor& big = t.value(t.softmax(t.leaf(Tensor::row({1000, 0})), 1));
    CHECK(std::isfinite(big.at(0, 0)));
    CHECK(big.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(big.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));

    const Tensor& ratio = t.value(
        t.softmax(t.leaf(Tensor::row({std::log(1.0), std::log(2.0), std::log(3.0)})), 1));
    CHECK(ratio.at(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(ratio.at(0, 1) == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
    CHECK(ratio.at(0, 2) == doctest::Approx(3.0 / 6.0).epsilon(1e-12));

    CHECK_THROWS_AS(t.softmax(t.leaf(Tensor::row({std::nan(""), 0.0})), 1), NumericError);
    CHECK_THROWS_AS(t.softmax(t.leaf(Tensor::row({0.0, 1.0})), 2), ConfigError);
}

TEST_CASE("softmax properties: rows sum to 1, shift invariance") {
    Rng rng(31);
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(6);
        Tensor x = random_tensor(rng, r, c, 0.0, 5.0);
        Tape t;
        const Tensor& y = t.value(t.softmax(t.leaf(x), 1));
        for (std::size_t i = 0; i < r; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                sum += y.at(i, j);
                CHECK(y.at(i, j) >= 0.0);
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
        // adding a constant to the row leaves the output unchanged within 1e-9
        const double shift = rng.uniform(-3.0, 3.0);
        Tensor xs = x;
        for (auto& v : xs.values()) v += shift;
        Tape t2;
        const Tensor& ys = t2.value(t2.softmax(t2.leaf(xs), 1));
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(std::abs(y.values()[i] - ys.values()[i]) < 1e-9);
        }
    }
}

TEST_CASE("masked softmax zeroes masked keys exactly") {
    Tape t;
    const Var x = t.leaf(Tensor::matrix(2, 3, {5, 1, 2, -1, 0, 3}));
    const std::vector<std::uint8_t> mask{1, 0, 1};
    const Tensor& y = t.value(t.masked_softmax_rows(x, mask));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(y.at(i, 1) == 0.0);
        CHECK(y.at(i, 0) + y.at(i, 2) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(t.masked_softmax_rows(x, {0, 0, 0}), DataError);
}

TEST_CASE("layer_norm examples") {
    Tape t;
    const Var gamma1 = t.leaf(Tensor::row({1, 1, 1}));
    const Var beta0 = t.leaf(Tensor::row({0, 0, 0}));

    // constant row: zero variance handled by eps
    const Tensor& z = t.value(t.layer_norm(t.leaf(Tensor::row({4, 4, 4})), gamma1, beta0, 1e-5));
    for (double v : z.values()) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    const Var g2 = t.leaf(Tensor::row({1, 1}));
    const Var b2 = t.leaf(Tensor::row({0, 0}));
    const Tensor& pm = t.value(t.layer_norm(t.leaf(Tensor::row({1, -1})), g2, b2, 1e-12));
    CHECK(pm.at(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(pm.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-6));

    const Var g0 = t.leaf(Tensor::row({0, 0}));
    const Var bb = t.leaf(Tensor::row({2.5, -1.5}));
    const Tensor& onlyb = t.value(t.layer_norm(t.leaf(Tensor::row({3, 7})), g0, bb, 1e-5));
    CHECK(onlyb.at(0, 0) == 2.5);
    CHECK(onlyb.at(0, 1) == -1.5);

    CHECK_THROWS_AS(t.layer_norm(t.leaf(Tensor::row({1, 2})), g2, b2, 0.0), ConfigError);
}

TEST_CASE("gelu values against an independent normal-CDF oracle") {
    Tape t;
    CHECK(t.value(t.gelu(t.leaf(Tensor::scalar(0.0)))).item() == 0.0);
    CHECK(t.value(t.gelu(t.leaf(Tensor::scalar(10.0)))).item() ==
          doctest::Approx(10.0).epsilon(1e-12));

    // Phi(1) by Simpson quadrature of the standard normal density
    const auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
    const double a = -10.0, b = 1.0;
    const int n = 20000;
    const double hh = (b - a) / n;
    double integral = pdf(a) + pdf(b);
    for (int i = 1; i < n; ++i) integral += pdf(a + i * hh) * (i % 2 ? 4.0 : 2.0);
    integral *= hh / 3.0;
    const double gelu1 = t.value(t.gelu(t.leaf(Tensor::scalar(1.0)))).item();
    CHECK(gelu1 == doctest::Approx(1.0 * integral).epsilon(1e-9));
    CHECK(gelu1 == doctest::Approx(0.8413447461).epsilon(1e-8));
}

TEST_CASE("cross_entropy values") {
    Tape t;
    for (const std::size_t c : {2u, 3u, 7u}) {
        const Var logits = t.leaf(Tensor::zeros({1, c}));
        CHECK(t.value(t.cross_entropy(logits, {0})).item() ==
              doctest::Approx(std::log(static_cast<double>(c))).epsilon(1e-12));
    }
    // huge correct-class margin drives the loss to ~0
    const Var margin = t.leaf(Tensor::row({50.0, 0.0}));
    CHECK(t.value(t.cross_entropy(margin, {0})).item() == doctest::Approx(0.0).epsilon(1e-9));

    // unnormalized-weight convention: loss = mean_b w[y_b] * nll_b
    const Var even = t.leaf(Tensor::row({0.0, 0.0}));
    CHECK(t.value(t.cross_entropy(even, {0}, {2.0, 1.0})).item() ==
          doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(t.cross_entropy(even, {2}), IndexError);
    CHECK_THROWS_AS(t.cross_entropy(even, {0}, {1.0, 2.0, 3.0}), ConfigError);
}

TEST_CASE("backward: examples") {
    // d(x^2)/dx at 3 = 6, against central differences
    {
        Tape t;
        const Var x = t.leaf(Tensor::scalar(3.0));
        const Var y = t.mul(x, x);
        t.backward(y);
        CHECK(t.grad(x).item() == doctest::Approx(6.0).epsilon(1e-12));
        const double h = 1e-5;
        const double fd = ((3.0 + h) * (3.0 + h) - (3.0 - h) * (3.0 - h)) / (2.0 * h);
        CHECK(rel_err(t.grad(x).item(), fd) < 1e-9);
    }
    // d(sum(x))/dx = ones
    {
        Tape t;
        const Var x = t.leaf(Tensor::row({1, 2, 3, 4}));
        const Var ones = t.leaf(Tensor::matrix(4, 1, {1, 1, 1, 1}));
        t.backward(t.matmul(x, ones));
        for (double g : t.grad(x).values()) CHECK(g == 1.0);
    }
    // softmax + cross-entropy composite gradient = p - onehot
    {
        Tape t;
        Tensor logits = Tensor::row({0.3, -1.2, 0.7});
        const Var lv = t.leaf(logits);
        const Var loss = t.cross_entropy(lv, {1});
        t.backward(loss);
        Tape t2;
        const Tensor& p = t2.value(t2.softmax(t2.leaf(logits), 1));
        for (std::size_t j = 0; j < 3; ++j) {
            const double expected = p.at(0, j) - (j == 1 ? 1.0 : 0.0);
            CHECK(t.grad(lv).at(0, j) == doctest::Approx(expected).epsilon(1e-9));
        }
    }
    // non-scalar loss refused
    {
        Tape t;
        const Var x = t.leaf(Tensor::row({1, 2}));
        CHECK_THROWS_AS(t.backward(x), ContractError);
    }
}

TEST_CASE("tape replay is bitwise deterministic") {
    Rng rng(77);
    const Tensor a = random_tensor(rng, 3, 4);
    const Tensor b = random_tensor(rng, 4, 2);
    const Tensor g = random_tensor(rng, 1, 4);
    const Tensor be = random_tensor(rng, 1, 4);

    auto run = [&](std::vector<double>& values, std::vector<double>& grads) {
        Tape t;
        const Var va = t.param(a);
        const Var vb = t.param(b);
        const Var ln = t.layer_norm(va, t.param(g), t.param(be), 1e-5);
        const Var mm = t.matmul(t.gelu(ln), vb);
        const Var sm = t.softmax(mm, 1);
        const Var loss = t.cross_entropy(mm, {0, 1, 0}, {1.0, 2.0});
        t.backward(loss);
        values = t.value(sm).values();
        const auto& ga = t.grad(va).values();
        grads.assign(ga.begin(), ga.end());
        values.push_back(t.value(loss).item());
    };
    std::vector<double> v1, g1, v2, g2;
    run(v1, g1);
    run(v2, g2);
    CHECK(std::memcmp(v1.data(), v2.data(), v1.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("randomized gradient checks per operation") {
    for (const auto& check : op_gradchecks()) {
        CAPTURE(check.name);
        Rng rng(Rng::mix(4242, check.name));
        for (int i = 0; i < 8; ++i) check.run(rng);
    }
}

TEST_CASE("end-to-end fusion gradient check (tiny dims)") {
    fusion_e2e_gradcheck(5);
}

TEST_SUITE_END();
