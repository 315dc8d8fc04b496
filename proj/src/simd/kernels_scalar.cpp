#include "geoconv/simd.hpp"

namespace geoconv::simd {
namespace {

double dot_scalar(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += double(a[i]) * double(b[i]);
  return acc;
}

void axpy_scalar(double* acc, double alpha, const float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += alpha * double(x[i]);
}

void fma_accumulate_scalar(double* acc, const float* x, const float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += double(x[i]) * double(y[i]);
}

constexpr KernelTable kScalar{Isa::kScalar, &dot_scalar, &axpy_scalar, &fma_accumulate_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace geoconv::simd
