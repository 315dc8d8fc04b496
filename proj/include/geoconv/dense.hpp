#pragma once

#include "geoconv/tensor.hpp"

namespace geoconv {

/// y = W x + b with W shaped [out, in]. `input` may have any shape whose
/// element count is `in`; it is read in row-major order.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;  // same shape as the forward input
  Tensor weights;
  Tensor bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream);

}  // namespace geoconv
