#pragma once

#include <cstddef>

namespace parseq::kernels {

// Elementwise and small dense-matrix primitives behind the scan and solver
// inner loops. Matrices are square, row-major. Destinations must not alias
// inputs. Every entry has a scalar reference implementation and, on x86-64
// hardware with AVX2+FMA, a vectorized variant selected once at startup.
struct Ops {
    const char* name;

    // dst[i] = a[i] * b[i]
    void (*mul)(double* dst, const double* a, const double* b, std::size_t n);
    // dst[i] = a[i] * b[i] + c[i]
    void (*mul_add)(double* dst, const double* a, const double* b, const double* c,
                    std::size_t n);
    // dst[i] = alpha * x[i]
    void (*scale)(double* dst, double alpha, const double* x, std::size_t n);
    // dst[i] = alpha * x[i] + y[i]
    void (*scale_add)(double* dst, double alpha, const double* x, const double* y,
                      std::size_t n);
    // dst = m x
    void (*matvec)(double* dst, const double* m, const double* x, std::size_t d);
    // dst = m x + c
    void (*matvec_add)(double* dst, const double* m, const double* x, const double* c,
                       std::size_t d);
    // dst = l r
    void (*matmul)(double* dst, const double* l, const double* r, std::size_t d);
    // sum_i (a[i] - b[i])^2
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
};

const Ops& scalar_ops();

// True when the AVX2 variant was compiled in and the CPU supports AVX2+FMA.
bool avx2_available();
const Ops& avx2_ops();  // only valid when avx2_available()

// The variant in use: avx2 when available, scalar otherwise.
const Ops& active_ops();

}  // namespace parseq::kernels
