// Compiled with -mavx2 -mfma. Nothing in here may run before the dispatcher
// has confirmed CPU support.
#include <immintrin.h>

#include "geoconv/simd.hpp"

namespace geoconv::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256d acc_lo = _mm256_setzero_pd();
  __m256d acc_hi = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 va = _mm256_loadu_ps(a + i);
    __m256 vb = _mm256_loadu_ps(b + i);
    acc_lo = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                             _mm256_cvtps_pd(_mm256_castps256_ps128(vb)), acc_lo);
    acc_hi = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                             _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)), acc_hi);
  }
  if (i + 4 <= n) {
    acc_lo = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i)),
                             _mm256_cvtps_pd(_mm_loadu_ps(b + i)), acc_lo);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc_lo, acc_hi));
  for (; i < n; ++i) acc += double(a[i]) * double(b[i]);
  return acc;
}

void axpy_avx2(double* acc, double alpha, const float* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(va, vx, _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) acc[i] += alpha * double(x[i]);
}

void fma_accumulate_avx2(double* acc, const float* x, const float* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    __m256d vy = _mm256_cvtps_pd(_mm_loadu_ps(y + i));
    _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(vx, vy, _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) acc[i] += double(x[i]) * double(y[i]);
}

constexpr KernelTable kAvx2{Isa::kAvx2, &dot_avx2, &axpy_avx2, &fma_accumulate_avx2};

}  // namespace

const KernelTable* avx2_kernels() { return &kAvx2; }

}  // namespace geoconv::simd
