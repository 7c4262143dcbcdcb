#pragma once

// Inner-loop kernels for embedding arithmetic.
//
// Every kernel has a scalar reference implementation and optional AVX2+FMA
// (x86-64) and NEON (aarch64) variants. All variants take f32 inputs and
// accumulate in f64. The active variant is chosen once at startup from CPU
// features and can be pinned with set_active_isa() or the VGD_SIMD
// environment variable (scalar | avx2 | neon).
//
// Variants differ only in summation order, so results agree to within a few
// ulps of the f64 accumulator, not bit-for-bit. Within one process the chosen
// variant never changes unless set_active_isa() is called.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace vgd::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

/// Whether the variant is compiled in and supported by the running CPU.
bool isa_available(Isa isa) noexcept;

/// Every available variant, Scalar first.
std::vector<Isa> available_isas();

Isa active_isa() noexcept;

/// Pins the dispatch target. Returns false (and changes nothing) if the
/// variant is unavailable.
bool set_active_isa(Isa isa) noexcept;

struct KernelTable {
    double (*dot)(const float* a, const float* b, std::size_t n);
    double (*sum_squares)(const float* a, std::size_t n);
};

/// Kernel table for a specific variant; nullptr when unavailable.
const KernelTable* kernels_for(Isa isa) noexcept;

double dot(std::span<const float> a, std::span<const float> b);
double sum_squares(std::span<const float> a);

namespace detail {
extern const KernelTable kScalarKernels;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable kAvx2Kernels;
#endif
#if defined(__aarch64__)
extern const KernelTable kNeonKernels;
#endif
} // namespace detail

} // namespace vgd::simd
