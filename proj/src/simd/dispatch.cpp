#include <atomic>
#include <cstdlib>
#include <string>

#include "geoconv/error.hpp"
#include "geoconv/simd.hpp"

namespace geoconv::simd {

#ifndef GEOCONV_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
  if (avx2_kernels() != nullptr && cpu_has_avx2()) out.push_back(avx2_kernels());
  return out;
}

namespace {

const KernelTable* pick_default() {
  if (const char* env = std::getenv("GEOCONV_ISA"); env != nullptr) {
    if (std::string(env) == "scalar") return &scalar_kernels();
  }
  return available_kernels().back();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{pick_default()};
  return slot;
}

}  // namespace

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

void set_active_isa(Isa isa) {
  for (const KernelTable* table : available_kernels()) {
    if (table->isa == isa) {
      active_slot().store(table, std::memory_order_release);
      return;
    }
  }
  throw ConfigError("kernel variant '" + std::string(isa_name(isa)) +
                    "' is not available on this CPU");
}

}  // namespace geoconv::simd
