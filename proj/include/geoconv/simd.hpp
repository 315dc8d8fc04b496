#pragma once

// Inner-loop kernels shared by convolution and dense layers. Each kernel has a
// portable scalar reference and, on x86-64, an AVX2+FMA variant compiled in a
// separate translation unit. The variant is picked once at startup from CPUID;
// GEOCONV_ISA=scalar in the environment forces the reference path.
//
// Kernels read float32 operands and accumulate in float64.

#include <cstddef>
#include <string_view>
#include <vector>

namespace geoconv::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(const float* a, const float* b, std::size_t n);
  /// acc[i] += alpha * x[i]
  void (*axpy)(double* acc, double alpha, const float* x, std::size_t n);
  /// acc[i] += x[i] * y[i]
  void (*fma_accumulate)(double* acc, const float* x, const float* y, std::size_t n);
};

const KernelTable& scalar_kernels();
/// Null when the AVX2 variant was not compiled in.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();

/// Every table that can run on this CPU, scalar first.
std::vector<const KernelTable*> available_kernels();

const KernelTable& active_kernels();
/// Overrides the runtime choice; throws ConfigError if `isa` cannot run here.
void set_active_isa(Isa isa);

}  // namespace geoconv::simd
