#include <cstring>
#include <vector>

#include <doctest.h>

#include "medfuse/kernels.hpp"
#include "medfuse/rng.hpp"

using namespace medfuse;

namespace {

std::vector<double> random_buf(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool have_avx2() { return kernels::backend_available(kernels::Backend::avx2); }

}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("mm_acc matches naive triple loop") {
    Rng rng(11);
    const auto& ops = kernels::scalar_ops();
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t m = 1 + rng.below(6), k = 1 + rng.below(7), n = 1 + rng.below(20);
        const auto a = random_buf(rng, m * k);
        const auto b = random_buf(rng, k * n);
        auto c = random_buf(rng, m * n);
        auto expected = c;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double acc = expected[i * n + j];
                for (std::size_t kk = 0; kk < k; ++kk) {
                    acc += a[i * k + kk] * b[kk * n + j];
                }
                expected[i * n + j] = acc;
            }
        }
        ops.mm_acc(a.data(), b.data(), c.data(), m, k, n);
        for (std::size_t i = 0; i < c.size(); ++i) {
            CHECK(c[i] == doctest::Approx(expected[i]).epsilon(1e-12));
        }
    }
}

// SIMD variants promise bit-identical results to the scalar reference: same
// per-element accumulation order, mul+add without fusion, IEEE sqrt/div.
TEST_CASE("avx2 backend is bit-identical to scalar") {
    if (!have_avx2()) return;
    Rng rng(12);
    const auto& sc = kernels::scalar_ops();
    const auto& vx = kernels::avx2_ops();

    // sizes chosen to hit the 16-wide, 4-wide and scalar tails
    for (const std::size_t n : {1u, 3u, 4u, 5u, 15u, 16u, 17u, 31u, 64u, 67u}) {
        const auto a = random_buf(rng, n);
        const auto b = random_buf(rng, n);
        std::vector<double> r1(n), r2(n);

        sc.add(a.data(), b.data(), r1.data(), n);
        vx.add(a.data(), b.data(), r2.data(), n);
        CHECK(bitwise_equal(r1, r2));

        sc.sub(a.data(), b.data(), r1.data(), n);
        vx.sub(a.data(), b.data(), r2.data(), n);
        CHECK(bitwise_equal(r1, r2));

        sc.mul(a.data(), b.data(), r1.data(), n);
        vx.mul(a.data(), b.data(), r2.data(), n);
        CHECK(bitwise_equal(r1, r2));

        sc.scale(1.7, a.data(), r1.data(), n);
        vx.scale(1.7, a.data(), r2.data(), n);
        CHECK(bitwise_equal(r1, r2));

        r1 = b;
        r2 = b;
        sc.axpy(-0.37, a.data(), r1.data(), n);
        vx.axpy(-0.37, a.data(), r2.data(), n);
        CHECK(bitwise_equal(r1, r2));

        sc.relu(a.data(), r1.data(), n);
        vx.relu(a.data(), r2.data(), n);
        CHECK(bitwise_equal(r1, r2));

        r1 = b;
        r2 = b;
        sc.relu_grad_acc(a.data(), b.data(), r1.data(), n);
        vx.relu_grad_acc(a.data(), b.data(), r2.data(), n);
        CHECK(bitwise_equal(r1, r2));
    }
}

TEST_CASE("avx2 mm_acc is bit-identical to scalar") {
    if (!have_avx2()) return;
    Rng rng(13);
    const auto& sc = kernels::scalar_ops();
    const auto& vx = kernels::avx2_ops();
    for (int iter = 0; iter < 30; ++iter) {
        const std::size_t m = 1 + rng.below(5), k = 1 + rng.below(9), n = 1 + rng.below(40);
        const auto a = random_buf(rng, m * k);
        const auto b = random_buf(rng, k * n);
        auto c1 = random_buf(rng, m * n);
        auto c2 = c1;
        sc.mm_acc(a.data(), b.data(), c1.data(), m, k, n);
        vx.mm_acc(a.data(), b.data(), c2.data(), m, k, n);
        CHECK(bitwise_equal(c1, c2));
    }
}

TEST_CASE("avx2 adam_update is bit-identical to scalar") {
    if (!have_avx2()) return;
    Rng rng(14);
    for (const std::size_t n : {1u, 4u, 7u, 33u}) {
        auto p1 = random_buf(rng, n), m1 = random_buf(rng, n, 0.0, 0.1),
             v1 = random_buf(rng, n, 0.0, 0.1);
        const auto g = random_buf(rng, n);
        auto p2 = p1, m2 = m1, v2 = v1;
        kernels::scalar_ops().adam_update(p1.data(), m1.data(), v1.data(), g.data(), n, 1e-3, 0.9,
                                          0.999, 1e-8, 1.0 / 0.1, 1.0 / 0.001999);
        kernels::avx2_ops().adam_update(p2.data(), m2.data(), v2.data(), g.data(), n, 1e-3, 0.9,
                                        0.999, 1e-8, 1.0 / 0.1, 1.0 / 0.001999);
        CHECK(bitwise_equal(p1, p2));
        CHECK(bitwise_equal(m1, m2));
        CHECK(bitwise_equal(v1, v2));
    }
}

TEST_CASE("relu edge cases match across backends") {
    if (!have_avx2()) return;
    const std::vector<double> edge{-0.0, 0.0, -1.0, 1.0, 1e-300, -1e-300, 0.0, -0.0};
    std::vector<double> r1(edge.size()), r2(edge.size());
    kernels::scalar_ops().relu(edge.data(), r1.data(), edge.size());
    kernels::avx2_ops().relu(edge.data(), r2.data(), edge.size());
    CHECK(bitwise_equal(r1, r2));
    CHECK(r1[0] == 0.0);
    CHECK(!std::signbit(r1[0]));  // -0.0 input maps to +0.0 like the scalar branch
}

TEST_CASE("backend dispatch can be forced and restored") {
    const kernels::Backend original = kernels::active_backend();
    kernels::set_backend(kernels::Backend::scalar);
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    if (have_avx2()) {
        kernels::set_backend(kernels::Backend::avx2);
        CHECK(kernels::active_backend() == kernels::Backend::avx2);
    }
    kernels::set_backend(original);
}

TEST_SUITE_END();
