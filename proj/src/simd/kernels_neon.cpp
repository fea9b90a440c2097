// aarch64 only. NEON (ASIMD) is mandatory on aarch64, so no runtime probe.

#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "dinsat/simd/kernels.hpp"

namespace dinsat::simd::neon {
namespace {

constexpr std::size_t W = 2;

void add(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}
void sub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}
void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}
void div(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) vst1q_f64(out + i, vdivq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] / b[i];
}
void scale(const double* a, double s, double* out, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + W <= n; i += W) vst1q_f64(out + i, vmulq_f64(vs, vld1q_f64(a + i)));
    for (; i < n; ++i) out[i] = s * a[i];
}
void axpy(const double* a, double s, const double* b, double* out, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vmulq_f64(vs, vld1q_f64(b + i))));
    for (; i < n; ++i) {
        const double t = s * b[i];
        out[i] = a[i] + t;
    }
}
void mul_acc(const double* a, const double* b, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i))));
    for (; i < n; ++i) {
        const double t = a[i] * b[i];
        acc[i] += t;
    }
}
void scale_acc(const double* a, double s, double* acc, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vmulq_f64(vs, vld1q_f64(a + i))));
    for (; i < n; ++i) {
        const double t = s * a[i];
        acc[i] += t;
    }
}
void min_acc(const double* a, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const float64x2_t va = vld1q_f64(a + i);
        const float64x2_t vc = vld1q_f64(acc + i);
        vst1q_f64(acc + i, vbslq_f64(vcltq_f64(va, vc), va, vc));
    }
    for (; i < n; ++i) acc[i] = a[i] < acc[i] ? a[i] : acc[i];
}
void max_acc(const double* a, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const float64x2_t va = vld1q_f64(a + i);
        const float64x2_t vc = vld1q_f64(acc + i);
        vst1q_f64(acc + i, vbslq_f64(vcgtq_f64(va, vc), va, vc));
    }
    for (; i < n; ++i) acc[i] = a[i] > acc[i] ? a[i] : acc[i];
}
void abs_(const double* a, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) vst1q_f64(out + i, vabsq_f64(vld1q_f64(a + i)));
    for (; i < n; ++i) out[i] = std::fabs(a[i]);
}
double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 * W <= n; i += 2 * W) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + W), vld1q_f64(b + i + W));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}
double sum(const double* a, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 * W <= n; i += 2 * W) {
        acc0 = vaddq_f64(acc0, vld1q_f64(a + i));
        acc1 = vaddq_f64(acc1, vld1q_f64(a + i + W));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i];
    return s;
}
double max_abs(const double* a, std::size_t n) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::fabs(a[i]);
        if (std::isnan(v)) return v;
        if (v > r) r = v;
    }
    return r;
}
void gemv(const double* w, const double* x, double* y, std::size_t out, std::size_t in) {
    for (std::size_t o = 0; o < out; ++o) y[o] = dot(w + o * in, x, in);
}
void gemv_t_acc(const double* w, const double* y_grad, double* x_grad, std::size_t out,
                std::size_t in) {
    for (std::size_t o = 0; o < out; ++o) scale_acc(w + o * in, y_grad[o], x_grad, in);
}

}  // namespace

extern const KernelTable kTable;
const KernelTable kTable{Isa::Neon, add,     sub,     mul,  div, scale, axpy,    mul_acc,
                         scale_acc, min_acc, max_acc, abs_, dot, sum,   max_abs, gemv,
                         gemv_t_acc};

}  // namespace dinsat::simd::neon
