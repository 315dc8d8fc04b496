#include "geoconv/dense.hpp"

#include <string>
#include <vector>

#include "geoconv/simd.hpp"

namespace geoconv {
namespace {

void check(const Tensor& input, const Tensor& weights) {
  if (weights.rank() != 2) {
    throw DimensionError("dense weights must be rank 2 [out,in], got " +
                         shape_to_string(weights.shape()));
  }
  if (weights.dim(1) != input.size()) {
    throw DimensionError("dense weights axis 1 is " + std::to_string(weights.dim(1)) +
                         " but input holds " + std::to_string(input.size()) + " values");
  }
}

}  // namespace

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  check(input, weights);
  const std::size_t n_out = weights.dim(0);
  const std::size_t n_in = weights.dim(1);
  require_shape(bias, {n_out}, "dense bias");
  const auto& k = simd::active_kernels();
  Tensor out({n_out});
  for (std::size_t o = 0; o < n_out; ++o) {
    out[o] = static_cast<float>(double(bias[o]) +
                                k.dot(weights.data().data() + o * n_in, input.data().data(), n_in));
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream) {
  check(input, weights);
  const std::size_t n_out = weights.dim(0);
  const std::size_t n_in = weights.dim(1);
  require_shape(upstream, {n_out}, "dense upstream gradient");
  const auto& k = simd::active_kernels();

  DenseGrads g{Tensor(input.shape()), Tensor(weights.shape()), upstream};
  std::vector<double> gin(n_in, 0.0);
  const float* x = input.data().data();
  for (std::size_t o = 0; o < n_out; ++o) {
    const float u = upstream[o];
    float* gw = g.weights.data().data() + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) gw[i] = static_cast<float>(double(u) * double(x[i]));
    if (u != 0.0f) k.axpy(gin.data(), u, weights.data().data() + o * n_in, n_in);
  }
  for (std::size_t i = 0; i < n_in; ++i) g.input[i] = static_cast<float>(gin[i]);
  return g;
}

}  // namespace geoconv
