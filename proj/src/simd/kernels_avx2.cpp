// Compiled with -mavx2 -mfma. Only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "dinsat/simd/kernels.hpp"

namespace dinsat::simd::avx2 {
namespace {

constexpr std::size_t W = 4;

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

template <typename VecOp, typename ScalarOp>
inline void binary(const double* a, const double* b, double* out, std::size_t n, VecOp vop,
                   ScalarOp sop) {
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        _mm256_storeu_pd(out + i, vop(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = sop(a[i], b[i]);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_add_pd(x, y); },
           [](double x, double y) { return x + y; });
}
void sub(const double* a, const double* b, double* out, std::size_t n) {
    binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_sub_pd(x, y); },
           [](double x, double y) { return x - y; });
}
void mul(const double* a, const double* b, double* out, std::size_t n) {
    binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); },
           [](double x, double y) { return x * y; });
}
void div(const double* a, const double* b, double* out, std::size_t n) {
    binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_div_pd(x, y); },
           [](double x, double y) { return x / y; });
}

void scale(const double* a, double s, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + W <= n; i += W) _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_loadu_pd(a + i)));
    for (; i < n; ++i) out[i] = s * a[i];
}

void axpy(const double* a, double s, const double* b, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d t = _mm256_mul_pd(vs, _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), t));
    }
    for (; i < n; ++i) {
        const double t = s * b[i];
        out[i] = a[i] + t;
    }
}

void mul_acc(const double* a, const double* b, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d t = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), t));
    }
    for (; i < n; ++i) {
        const double t = a[i] * b[i];
        acc[i] += t;
    }
}

void scale_acc(const double* a, double s, double* acc, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d t = _mm256_mul_pd(vs, _mm256_loadu_pd(a + i));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), t));
    }
    for (; i < n; ++i) {
        const double t = s * a[i];
        acc[i] += t;
    }
}

void min_acc(const double* a, double* acc, std::size_t n) {
    std::size_t i = 0;
    // minpd(x, y) returns x < y ? x : y, matching the scalar select.
    for (; i + W <= n; i += W)
        _mm256_storeu_pd(acc + i, _mm256_min_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(acc + i)));
    for (; i < n; ++i) acc[i] = a[i] < acc[i] ? a[i] : acc[i];
}

void max_acc(const double* a, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W)
        _mm256_storeu_pd(acc + i, _mm256_max_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(acc + i)));
    for (; i < n; ++i) acc[i] = a[i] > acc[i] ? a[i] : acc[i];
}

void abs_(const double* a, double* out, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + W <= n; i += W) _mm256_storeu_pd(out + i, _mm256_andnot_pd(sign, _mm256_loadu_pd(a + i)));
    for (; i < n; ++i) out[i] = std::fabs(a[i]);
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 * W <= n; i += 2 * W) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + W), _mm256_loadu_pd(b + i + W), acc1);
    }
    for (; i + W <= n; i += W)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum(const double* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 * W <= n; i += 2 * W) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + W));
    }
    for (; i + W <= n; i += W) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i];
    return s;
}

double max_abs(const double* a, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d m = _mm256_setzero_pd();
    __m256d nan = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d v = _mm256_andnot_pd(sign, _mm256_loadu_pd(a + i));
        nan = _mm256_or_pd(nan, _mm256_cmp_pd(v, v, _CMP_UNORD_Q));
        m = _mm256_max_pd(v, m);
    }
    if (_mm256_movemask_pd(nan) != 0) return std::numeric_limits<double>::quiet_NaN();
    alignas(32) double lanes[W];
    _mm256_store_pd(lanes, m);
    double r = lanes[0];
    for (std::size_t k = 1; k < W; ++k) r = lanes[k] > r ? lanes[k] : r;
    for (; i < n; ++i) {
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
const KernelTable kTable{Isa::Avx2, add,     sub,     mul,  div, scale, axpy,    mul_acc,
                         scale_acc, min_acc, max_acc, abs_, dot, sum,   max_abs, gemv,
                         gemv_t_acc};

}  // namespace dinsat::simd::avx2
