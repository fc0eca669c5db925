// AVX2+FMA kernel variants, compiled with -mavx2 -mfma on x86-64 and
// dispatched at runtime (see dispatch.cpp). Each loop processes four doubles
// per step with a scalar tail; results match the scalar reference up to
// FMA/reassociation rounding.

#include "parseq/kernels.hpp"

namespace parseq::kernels {
const Ops* avx2_ops_table();
}

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace parseq::kernels {

namespace {

void mul_avx2(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void mul_add_avx2(double* dst, const double* a, const double* b, const double* c,
                  std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                                      _mm256_loadu_pd(c + i));
        _mm256_storeu_pd(dst + i, acc);
    }
    for (; i < n; ++i) dst[i] = a[i] * b[i] + c[i];
}

void scale_avx2(double* dst, double alpha, const double* x, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) dst[i] = alpha * x[i];
}

void scale_add_avx2(double* dst, double alpha, const double* x, const double* y,
                    std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                      _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(dst + i, acc);
    }
    for (; i < n; ++i) dst[i] = alpha * x[i] + y[i];
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

inline double row_dot(const double* row, const double* x, std::size_t d) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= d; c += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(x + c), acc);
    }
    double sum = hsum(acc);
    for (; c < d; ++c) sum += row[c] * x[c];
    return sum;
}

void matvec_avx2(double* dst, const double* m, const double* x, std::size_t d) {
    for (std::size_t r = 0; r < d; ++r) dst[r] = row_dot(m + r * d, x, d);
}

void matvec_add_avx2(double* dst, const double* m, const double* x, const double* c,
                     std::size_t d) {
    for (std::size_t r = 0; r < d; ++r) dst[r] = row_dot(m + r * d, x, d) + c[r];
}

void matmul_avx2(double* dst, const double* l, const double* r, std::size_t d) {
    for (std::size_t i = 0; i < d * d; ++i) dst[i] = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double* lrow = l + i * d;
        double* drow = dst + i * d;
        for (std::size_t k = 0; k < d; ++k) {
            const __m256d lv = _mm256_set1_pd(lrow[k]);
            const double* rrow = r + k * d;
            std::size_t j = 0;
            for (; j + 4 <= d; j += 4) {
                __m256d acc = _mm256_fmadd_pd(lv, _mm256_loadu_pd(rrow + j),
                                              _mm256_loadu_pd(drow + j));
                _mm256_storeu_pd(drow + j, acc);
            }
            for (; j < d; ++j) drow[j] += lrow[k] * rrow[j];
        }
    }
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    double sum = hsum(acc);
    for (; i < n; ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

constexpr Ops kAvx2Ops = {
    "avx2",        mul_avx2,    mul_add_avx2, scale_avx2,
    scale_add_avx2, matvec_avx2, matvec_add_avx2, matmul_avx2,
    sum_sq_diff_avx2,
};

}  // namespace

const Ops* avx2_ops_table() { return &kAvx2Ops; }

}  // namespace parseq::kernels

#else

namespace parseq::kernels {
const Ops* avx2_ops_table() { return nullptr; }
}  // namespace parseq::kernels

#endif
