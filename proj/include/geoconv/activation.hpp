#pragma once

#include <string_view>

#include "geoconv/tensor.hpp"

namespace geoconv {

enum class Activation { kNone, kRelu, kLeakyRelu, kSigmoid };

inline constexpr float kLeakyReluSlope = 0.2f;

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

Tensor activate(const Tensor& pre, Activation a);

/// Gradient with respect to the pre-activation, given the gradient with
/// respect to the activation output.
Tensor activation_backward(const Tensor& pre, const Tensor& upstream, Activation a);

}  // namespace geoconv
