// AVX2 kernel variants. Compiled with -mavx2 only (no -mfma): every lane does
// the same IEEE mul/add/sqrt/div sequence as the scalar reference, in the same
// per-element order, so results are bit-identical to the scalar backend.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "medfuse/kernels.hpp"

namespace medfuse::kernels {

namespace {

// C += A*B with the j dimension vectorized. For each output element the
// k-accumulation order matches the scalar kernel exactly.
void mm_acc_avx2(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n16 = n - n % 16;
    const std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        std::size_t j = 0;
        for (; j < n16; j += 16) {
            __m256d acc0 = _mm256_loadu_pd(crow + j);
            __m256d acc1 = _mm256_loadu_pd(crow + j + 4);
            __m256d acc2 = _mm256_loadu_pd(crow + j + 8);
            __m256d acc3 = _mm256_loadu_pd(crow + j + 12);
            for (std::size_t kk = 0; kk < k; ++kk) {
                const __m256d av = _mm256_set1_pd(arow[kk]);
                const double* brow = b + kk * n + j;
                acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(av, _mm256_loadu_pd(brow)));
                acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 4)));
                acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 8)));
                acc3 = _mm256_add_pd(acc3, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 12)));
            }
            _mm256_storeu_pd(crow + j, acc0);
            _mm256_storeu_pd(crow + j + 4, acc1);
            _mm256_storeu_pd(crow + j + 8, acc2);
            _mm256_storeu_pd(crow + j + 12, acc3);
        }
        for (; j < n4; j += 4) {
            __m256d acc = _mm256_loadu_pd(crow + j);
            for (std::size_t kk = 0; kk < k; ++kk) {
                const __m256d av = _mm256_set1_pd(arow[kk]);
                acc = _mm256_add_pd(acc, _mm256_mul_pd(av, _mm256_loadu_pd(b + kk * n + j)));
            }
            _mm256_storeu_pd(crow + j, acc);
        }
        for (; j < n; ++j) {
            double acc = crow[j];
            for (std::size_t kk = 0; kk < k; ++kk) {
                acc = acc + arow[kk] * b[kk * n + j];
            }
            crow[j] = acc;
        }
    }
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_avx2(double alpha, const double* x, double* out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void relu_avx2(const double* x, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // max_pd(x, 0) returns 0 for x <= 0 and for NaN, same as the scalar
        // x > 0 ? x : 0 branch.
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_acc_avx2(const double* x, const double* g, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        const __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(g + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), gated));
    }
    for (; i < n; ++i) out[i] = out[i] + (x[i] > 0.0 ? g[i] : 0.0);
}

void adam_update_avx2(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double inv_bc1, double inv_bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vomb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vomb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vibc1 = _mm256_set1_pd(inv_bc1);
    const __m256d vibc2 = _mm256_set1_pd(inv_bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_loadu_pd(m + i);
        __m256d vi = _mm256_loadu_pd(v + i);
        mi = _mm256_add_pd(_mm256_mul_pd(vb1, mi), _mm256_mul_pd(vomb1, gi));
        vi = _mm256_add_pd(_mm256_mul_pd(vb2, vi), _mm256_mul_pd(vomb2, _mm256_mul_pd(gi, gi)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mhat = _mm256_mul_pd(mi, vibc1);
        const __m256d vhat = _mm256_mul_pd(vi, vibc2);
        const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d upd = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), den);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
    }
    const double omb1 = 1.0 - beta1;
    const double omb2 = 1.0 - beta2;
    for (; i < n; ++i) {
        const double gi = g[i];
        m[i] = beta1 * m[i] + omb1 * gi;
        v[i] = beta2 * v[i] + omb2 * (gi * gi);
        const double mhat = m[i] * inv_bc1;
        const double vhat = v[i] * inv_bc2;
        p[i] = p[i] - (lr * mhat) / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops table = {
        mm_acc_avx2, add_avx2,  sub_avx2,           mul_avx2,
        axpy_avx2,   scale_avx2, relu_avx2,
        relu_grad_acc_avx2, adam_update_avx2,
    };
    return table;
}

}  // namespace medfuse::kernels

#endif  // x86_64
