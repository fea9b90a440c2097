#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the tape, the solvers and the scene
// statistics. Every entry has a scalar reference implementation; vector
// variants (AVX2 on x86-64, NEON on aarch64) are picked at runtime.
//
// Elementwise kernels are bit-identical across variants. Reductions (dot,
// sum, gemv) reassociate and agree with the scalar reference to rounding.

namespace dinsat::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
    Isa isa;

    // out[i] = a[i] + b[i]
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    // out[i] = a[i] - b[i]
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    // out[i] = a[i] * b[i]
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // out[i] = a[i] / b[i]
    void (*div)(const double* a, const double* b, double* out, std::size_t n);
    // out[i] = s * a[i]
    void (*scale)(const double* a, double s, double* out, std::size_t n);
    // out[i] = a[i] + s * b[i]   (separate multiply and add, no fma)
    void (*axpy)(const double* a, double s, const double* b, double* out, std::size_t n);
    // acc[i] += a[i] * b[i]
    void (*mul_acc)(const double* a, const double* b, double* acc, std::size_t n);
    // acc[i] += s * a[i]
    void (*scale_acc)(const double* a, double s, double* acc, std::size_t n);
    // acc[i] = min(acc[i], a[i]) and max
    void (*min_acc)(const double* a, double* acc, std::size_t n);
    void (*max_acc)(const double* a, double* acc, std::size_t n);
    // out[i] = |a[i]|
    void (*abs)(const double* a, double* out, std::size_t n);

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    double (*max_abs)(const double* a, std::size_t n);

    // y[o] = sum_i w[o*in + i] * x[i], w row-major out x in
    void (*gemv)(const double* w, const double* x, double* y, std::size_t out, std::size_t in);
    // x_grad[i] += sum_o w[o*in + i] * y_grad[o]
    void (*gemv_t_acc)(const double* w, const double* y_grad, double* x_grad, std::size_t out,
                       std::size_t in);
};

const KernelTable& scalar_kernels() noexcept;

/// Vector variants compiled into this binary and supported by the running
/// CPU; nullptr otherwise.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

/// The table in use. Chosen once: the best supported ISA unless the
/// environment variable DINSAT_SIMD is set to "scalar".
const KernelTable& active() noexcept;

/// Overrides the active table (tests and benchmarks).
void set_active(const KernelTable& table) noexcept;

}  // namespace dinsat::simd
