#include <cmath>

#include "dinsat/simd/kernels.hpp"

namespace dinsat::simd {
namespace {

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void sub(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void div(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}
void scale(const double* a, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = s * a[i];
}
void axpy(const double* a, double s, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = s * b[i];
        out[i] = a[i] + t;
    }
}
void mul_acc(const double* a, const double* b, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = a[i] * b[i];
        acc[i] += t;
    }
}
void scale_acc(const double* a, double s, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = s * a[i];
        acc[i] += t;
    }
}
void min_acc(const double* a, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] = a[i] < acc[i] ? a[i] : acc[i];
}
void max_acc(const double* a, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] = a[i] > acc[i] ? a[i] : acc[i];
}
void abs_(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(a[i]);
}
double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}
double sum(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}
double max_abs(const double* a, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::fabs(a[i]);
        if (std::isnan(v)) return v;
        if (v > m) m = v;
    }
    return m;
}
void gemv(const double* w, const double* x, double* y, std::size_t out, std::size_t in) {
    for (std::size_t o = 0; o < out; ++o) y[o] = dot(w + o * in, x, in);
}
void gemv_t_acc(const double* w, const double* y_grad, double* x_grad, std::size_t out,
                std::size_t in) {
    for (std::size_t o = 0; o < out; ++o) scale_acc(w + o * in, y_grad[o], x_grad, in);
}

const KernelTable kTable{Isa::Scalar, add,     sub,     mul, div, scale, axpy,    mul_acc,
                         scale_acc,   min_acc, max_acc, abs_, dot, sum,  max_abs, gemv,
                         gemv_t_acc};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kTable; }

}  // namespace dinsat::simd
