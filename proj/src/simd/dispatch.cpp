#include <atomic>
#include <cstdlib>
#include <string_view>

#include "dinsat/simd/kernels.hpp"

namespace dinsat::simd {

#if defined(DINSAT_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif
#if defined(DINSAT_HAVE_NEON)
namespace neon {
extern const KernelTable kTable;
}
#endif

std::string_view to_string(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "scalar";
}

const KernelTable* avx2_kernels() noexcept {
#if defined(DINSAT_HAVE_AVX2)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok ? &avx2::kTable : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_kernels() noexcept {
#if defined(DINSAT_HAVE_NEON)
    return &neon::kTable;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable* select_default() noexcept {
    if (const char* env = std::getenv("DINSAT_SIMD"); env && std::string_view(env) == "scalar")
        return &scalar_kernels();
    if (auto* t = avx2_kernels()) return t;
    if (auto* t = neon_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> s{select_default()};
    return s;
}

}  // namespace

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

void set_active(const KernelTable& table) noexcept { slot().store(&table, std::memory_order_relaxed); }

}  // namespace dinsat::simd
