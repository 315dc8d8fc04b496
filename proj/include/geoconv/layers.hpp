#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "geoconv/activation.hpp"
#include "geoconv/conv.hpp"
#include "geoconv/geopos.hpp"
#include "geoconv/rng.hpp"
#include "geoconv/tensor.hpp"

namespace geoconv {

enum class Variant { kConv, kCoordConv, kGeoConv };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

/// Extra input planes the variant appends: 0, 2 (row, col) or 1 (GeoPos).
std::size_t positional_planes(Variant v);

struct LayerSpec {
  Variant variant = Variant::kConv;
  /// in_channels counts the data channels only; positional planes are added
  /// on top according to the variant.
  ConvGeometry geom;
  Activation activation = Activation::kRelu;
  ShiftPolicy shift_policy;  // GeoConv only
  bool normalize_coordinates = true;
};

void validate(const LayerSpec& spec);

/// Geometry of the convolution actually run: positional planes included and,
/// for the positional variants, padding already materialized.
ConvGeometry effective_geometry(const LayerSpec& spec);

struct LayerParams {
  Tensor filters;  // [K_H, K_W, C_in + planes, C_out]
  Tensor bias;     // [C_out]
};

/// Kaiming-uniform filters (bound sqrt(6 / fan_in)), zero bias.
LayerParams init_layer_params(const LayerSpec& spec, Rng& rng);

/// Input with positional planes appended last (after the data channels). For
/// positional variants the result is padded: data channels with zeros,
/// positional planes by analytic extension.
Tensor augment_input(const LayerSpec& spec, const Tensor& input, float shift);

struct LayerCache {
  Tensor augmented;
  Tensor pre_activation;
  float shift = 0.0f;
  Shape input_shape;
};

struct LayerOutput {
  Tensor output;
  LayerCache cache;
};

LayerOutput layer_forward(const LayerSpec& spec, const Tensor& input, const LayerParams& params,
                          Rng& rng, Phase phase = Phase::kTrain);

struct LayerGrads {
  std::optional<Tensor> input;
  Tensor filters;
  Tensor bias;
};

/// Exact adjoint of layer_forward for the cached shift. Positional planes are
/// inputs, not parameters: their gradient is dropped.
LayerGrads layer_backward(const LayerSpec& spec, const LayerCache& cache, const LayerParams& params,
                          const Tensor& upstream, InputGrad want_input = InputGrad::kCompute);

struct FlopReport {
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
  std::size_t h_out = 0;
  std::size_t w_out = 0;

  bool operator==(const FlopReport&) const = default;
};

/// Forward-pass multiply-add count, 2 * H_out * W_out * K_H * K_W * C_eff * C_out,
/// and learnable parameters K_H * K_W * C_eff * C_out + C_out.
FlopReport count_flops(const LayerSpec& spec, std::size_t height, std::size_t width);

}  // namespace geoconv
