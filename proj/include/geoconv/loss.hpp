#pragma once

#include <cstddef>

#include "geoconv/tensor.hpp"

namespace geoconv {

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d value / d prediction
};

/// ||pred - target||_2. The gradient at pred == target is the zero vector.
LossResult euclidean_loss(const Tensor& pred, const Tensor& target);

/// -log softmax(logits)[label], computed with the max-shift for stability.
LossResult cross_entropy(const Tensor& logits, std::size_t label);

Tensor softmax(const Tensor& logits);

}  // namespace geoconv
