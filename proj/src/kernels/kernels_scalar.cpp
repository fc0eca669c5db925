#include "parseq/kernels.hpp"

namespace parseq::kernels {

namespace {

void mul_scalar(double* dst, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void mul_add_scalar(double* dst, const double* a, const double* b, const double* c,
                    std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i] + c[i];
}

void scale_scalar(double* dst, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = alpha * x[i];
}

void scale_add_scalar(double* dst, double alpha, const double* x, const double* y,
                      std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = alpha * x[i] + y[i];
}

void matvec_scalar(double* dst, const double* m, const double* x, std::size_t d) {
    for (std::size_t r = 0; r < d; ++r) {
        const double* row = m + r * d;
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += row[c] * x[c];
        dst[r] = acc;
    }
}

void matvec_add_scalar(double* dst, const double* m, const double* x, const double* c,
                       std::size_t d) {
    for (std::size_t r = 0; r < d; ++r) {
        const double* row = m + r * d;
        double acc = c[r];
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * x[j];
        dst[r] = acc;
    }
}

void matmul_scalar(double* dst, const double* l, const double* r, std::size_t d) {
    for (std::size_t i = 0; i < d * d; ++i) dst[i] = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double* lrow = l + i * d;
        double* drow = dst + i * d;
        for (std::size_t k = 0; k < d; ++k) {
            const double lv = lrow[k];
            const double* rrow = r + k * d;
            for (std::size_t j = 0; j < d; ++j) drow[j] += lv * rrow[j];
        }
    }
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

constexpr Ops kScalarOps = {
    "scalar",        mul_scalar,    mul_add_scalar, scale_scalar,
    scale_add_scalar, matvec_scalar, matvec_add_scalar, matmul_scalar,
    sum_sq_diff_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace parseq::kernels
