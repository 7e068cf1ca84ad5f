#pragma once

#include <cstddef>

namespace medfuse::kernels {

// Dense double-precision inner loops behind the tensor layer. Every entry has
// a scalar reference implementation and may have SIMD variants selected at
// runtime. SIMD variants are required to be bit-identical to the scalar
// reference: they vectorize only across independent output elements, keep the
// scalar per-element accumulation order, and use mul+add (never FMA) so that
// backend selection can never change a result.
struct Ops {
    // c[m x n] += a[m x k] * b[k x n], row-major, k-major accumulation.
    void (*mm_acc)(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
    // out = a + b / a - b / a * b, elementwise.
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out = alpha * x
    void (*scale)(double alpha, const double* x, double* out, std::size_t n);
    // out = max(x, 0)
    void (*relu)(const double* x, double* out, std::size_t n);
    // out += g where x > 0, += 0.0 otherwise
    void (*relu_grad_acc)(const double* x, const double* g, double* out, std::size_t n);
    // Adam with bias correction: m,v moment updates then
    // p -= lr * (m*inv_bc1) / (sqrt(v*inv_bc2) + eps).
    void (*adam_update)(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double inv_bc1, double inv_bc2);
};

enum class Backend { scalar, avx2 };

const char* backend_name(Backend b);
bool backend_available(Backend b);

// Active dispatch table. Defaults to the best available backend; the
// MEDFUSE_BACKEND environment variable ("scalar" / "avx2") overrides.
const Ops& ops();
Backend active_backend();
void set_backend(Backend b);  // throws ConfigError if unavailable

const Ops& scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif

}  // namespace medfuse::kernels
