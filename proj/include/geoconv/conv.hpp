#pragma once

#include <cstddef>
#include <optional>

#include "geoconv/tensor.hpp"

namespace geoconv {

/// Geometry of a 2-D convolution. Padding is symmetric and applied to both
/// spatial axes; stride is shared by both axes.
struct ConvGeometry {
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;

  bool operator==(const ConvGeometry&) const = default;
};

/// floor((extent - kernel + 2 * padding) / stride) + 1. Throws DimensionError
/// when the padded input is smaller than the kernel.
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                               std::size_t padding);

/// Throws ConfigError on zero kernel, stride, or channel counts.
void validate(const ConvGeometry& geom);

Shape filter_shape(const ConvGeometry& geom);

/// Cross-correlation of an [H,W,C_in] input with [K_H,K_W,C_in,C_out] filters
/// plus a per-channel bias, zero padding outside the input. Returns
/// [H_out,W_out,C_out].
Tensor conv2d_forward(const Tensor& input, const Tensor& filters, const Tensor& bias,
                      const ConvGeometry& geom);

enum class InputGrad { kCompute, kSkip };

struct Conv2dGrads {
  std::optional<Tensor> input;
  Tensor filters;
  Tensor bias;
};

/// Adjoint of conv2d_forward with respect to input, filters and bias.
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& filters, const ConvGeometry& geom,
                            const Tensor& upstream, InputGrad want_input = InputGrad::kCompute);

}  // namespace geoconv
