#include <doctest.h>

#include <cmath>
#include <vector>

#include "geoconv/conv.hpp"
#include "geoconv/simd.hpp"
#include "support/reference.hpp"

using namespace geoconv;

namespace {

std::vector<float> random_floats(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(uniform(rng, -2.0, 2.0));
  return v;
}

struct IsaGuard {
  simd::Isa saved = simd::active_kernels().isa;
  ~IsaGuard() { simd::set_active_isa(saved); }
};

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
  const auto tables = simd::available_kernels();
  REQUIRE_FALSE(tables.empty());
  CHECK(tables.front()->isa == simd::Isa::kScalar);
  MESSAGE("active kernels: " << simd::isa_name(simd::active_kernels().isa));
}

TEST_CASE("every kernel variant matches the scalar reference") {
  const auto& ref_k = simd::scalar_kernels();
  Rng rng(99);
  for (const simd::KernelTable* k : simd::available_kernels()) {
    CAPTURE(simd::isa_name(k->isa));
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 15u, 16u, 17u, 27u, 100u, 1023u}) {
      CAPTURE(n);
      const auto a = random_floats(n, rng), b = random_floats(n, rng);
      const double expect = ref_k.dot(a.data(), b.data(), n);
      CHECK(k->dot(a.data(), b.data(), n) == doctest::Approx(expect).epsilon(1e-12).scale(1.0));

      std::vector<double> acc1(n, 0.5), acc2(n, 0.5);
      ref_k.axpy(acc1.data(), -1.25, a.data(), n);
      k->axpy(acc2.data(), -1.25, a.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(acc2[i] == doctest::Approx(acc1[i]).epsilon(1e-14));

      std::vector<double> m1(n, -0.5), m2(n, -0.5);
      ref_k.fma_accumulate(m1.data(), a.data(), b.data(), n);
      k->fma_accumulate(m2.data(), a.data(), b.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(m2[i] == doctest::Approx(m1[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("convolution agrees across kernel variants") {
  IsaGuard guard;
  const ConvGeometry g{3, 3, 2, 1, 3, 4};
  const Tensor x = ref::random_tensor({11, 9, 3}, 1), f = ref::random_tensor(filter_shape(g), 2);
  const Tensor b = ref::random_tensor({4}, 3);
  simd::set_active_isa(simd::Isa::kScalar);
  const Tensor y_ref = conv2d_forward(x, f, b, g);
  const Tensor u = ref::random_tensor(y_ref.shape(), 4);
  const auto g_ref = conv2d_backward(x, f, g, u);
  for (const simd::KernelTable* k : simd::available_kernels()) {
    CAPTURE(simd::isa_name(k->isa));
    simd::set_active_isa(k->isa);
    CHECK(max_abs_diff(conv2d_forward(x, f, b, g), y_ref) <= 1e-6);
    const auto gk = conv2d_backward(x, f, g, u);
    CHECK(max_abs_diff(*gk.input, *g_ref.input) <= 1e-6);
    CHECK(max_abs_diff(gk.filters, g_ref.filters) <= 1e-6);
  }
}

TEST_CASE("selecting an unavailable variant is a config error") {
  if (simd::available_kernels().size() == 1) {
    CHECK_THROWS_AS(simd::set_active_isa(simd::Isa::kAvx2), ConfigError);
  } else {
    IsaGuard guard;
    CHECK_NOTHROW(simd::set_active_isa(simd::Isa::kAvx2));
  }
}
