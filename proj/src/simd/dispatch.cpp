#include "vgd/simd/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

namespace vgd::simd {
namespace {

Isa detect_best() noexcept {
    if (isa_available(Isa::Avx2)) return Isa::Avx2;
    if (isa_available(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

Isa initial_isa() noexcept {
    if (const char* env = std::getenv("VGD_SIMD")) {
        const std::string want(env);
        for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
            if (want == isa_name(isa) && isa_available(isa)) return isa;
        }
    }
    return detect_best();
}

std::atomic<Isa>& active() noexcept {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

} // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
    }
    return "scalar";
}

bool isa_available(Isa isa) noexcept {
    switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
        return true;
#else
        return false;
#endif
    }
    return false;
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
        if (isa_available(isa)) out.push_back(isa);
    }
    return out;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

bool set_active_isa(Isa isa) noexcept {
    if (!isa_available(isa)) return false;
    active().store(isa, std::memory_order_relaxed);
    return true;
}

const KernelTable* kernels_for(Isa isa) noexcept {
    if (!isa_available(isa)) return nullptr;
    switch (isa) {
    case Isa::Scalar: return &detail::kScalarKernels;
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2: return &detail::kAvx2Kernels;
#endif
#if defined(__aarch64__)
    case Isa::Neon: return &detail::kNeonKernels;
#endif
    default: return nullptr;
    }
}

double dot(std::span<const float> a, std::span<const float> b) {
    assert(a.size() == b.size());
    return kernels_for(active_isa())->dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const float> a) {
    return kernels_for(active_isa())->sum_squares(a.data(), a.size());
}

} // namespace vgd::simd
