#include "vgd/simd/kernels.hpp"

namespace vgd::simd::detail {
namespace {

double dot_scalar(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double sum_squares_scalar(const float* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = a[i];
        acc += v * v;
    }
    return acc;
}

} // namespace

const KernelTable kScalarKernels{&dot_scalar, &sum_squares_scalar};

} // namespace vgd::simd::detail
