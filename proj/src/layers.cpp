#include "geoconv/layers.hpp"

#include <cmath>
#include <string>

namespace geoconv {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kConv:
      return "conv";
    case Variant::kCoordConv:
      return "coordconv";
    case Variant::kGeoConv:
      return "geoconv";
  }
  return "conv";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::kConv, Variant::kCoordConv, Variant::kGeoConv}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown layer variant '" + std::string(name) + "'");
}

std::size_t positional_planes(Variant v) {
  switch (v) {
    case Variant::kConv:
      return 0;
    case Variant::kCoordConv:
      return 2;
    case Variant::kGeoConv:
      return 1;
  }
  return 0;
}

void validate(const LayerSpec& spec) {
  validate(spec.geom);
  if (spec.variant == Variant::kGeoConv) validate(spec.shift_policy);
}

ConvGeometry effective_geometry(const LayerSpec& spec) {
  ConvGeometry g = spec.geom;
  g.in_channels += positional_planes(spec.variant);
  if (spec.variant != Variant::kConv) g.padding = 0;
  return g;
}

LayerParams init_layer_params(const LayerSpec& spec, Rng& rng) {
  validate(spec);
  const ConvGeometry g = effective_geometry(spec);
  const double fan_in = double(g.kernel_h * g.kernel_w * g.in_channels);
  const double bound = std::sqrt(6.0 / fan_in);
  LayerParams p{Tensor(filter_shape(g)), Tensor({g.out_channels})};
  for (auto& w : p.filters.data()) w = static_cast<float>(uniform(rng, -bound, bound));
  return p;
}

Tensor augment_input(const LayerSpec& spec, const Tensor& input, float shift) {
  if (spec.variant == Variant::kConv) return input;
  if (input.rank() != 3) {
    throw DimensionError("layer input must be rank 3 [H,W,C], got " + shape_to_string(input.shape()));
  }
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  const std::size_t pad = spec.geom.padding;
  const std::size_t planes = positional_planes(spec.variant);
  const GeoChannelSpec channel{h, w, spec.normalize_coordinates};

  Tensor out({h + 2 * pad, w + 2 * pad, c + planes});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t k = 0; k < c; ++k) out(i + pad, j + pad, k) = input(i, j, k);
    }
  }
  if (spec.variant == Variant::kGeoConv) {
    const Tensor g = geopos_channel_padded(channel, shift, pad);
    for (std::size_t i = 0; i < g.dim(0); ++i) {
      for (std::size_t j = 0; j < g.dim(1); ++j) out(i, j, c) = g(i, j);
    }
  } else {
    const Tensor rows = coordinate_channel_padded(channel, Axis::kRow, pad);
    const Tensor cols = coordinate_channel_padded(channel, Axis::kCol, pad);
    for (std::size_t i = 0; i < rows.dim(0); ++i) {
      for (std::size_t j = 0; j < rows.dim(1); ++j) {
        out(i, j, c) = rows(i, j);
        out(i, j, c + 1) = cols(i, j);
      }
    }
  }
  return out;
}

namespace {

void check_params(const LayerSpec& spec, const LayerParams& params) {
  const ConvGeometry g = effective_geometry(spec);
  if (params.filters.shape() != filter_shape(g)) {
    throw ConfigError(std::string(to_string(spec.variant)) + " layer expects filters " +
                      shape_to_string(filter_shape(g)) + " (" + std::to_string(g.in_channels) +
                      " input planes), got " + shape_to_string(params.filters.shape()));
  }
}

}  // namespace

LayerOutput layer_forward(const LayerSpec& spec, const Tensor& input, const LayerParams& params,
                          Rng& rng, Phase phase) {
  validate(spec);
  check_params(spec, params);
  if (input.rank() != 3 || input.dim(2) != spec.geom.in_channels) {
    throw ConfigError("layer expects [H,W," + std::to_string(spec.geom.in_channels) +
                      "] input, got " + shape_to_string(input.shape()));
  }
  LayerOutput out;
  out.cache.input_shape = input.shape();
  if (spec.variant == Variant::kGeoConv) out.cache.shift = sample_shift(spec.shift_policy, rng, phase);
  out.cache.augmented = augment_input(spec, input, out.cache.shift);
  out.cache.pre_activation =
      conv2d_forward(out.cache.augmented, params.filters, params.bias, effective_geometry(spec));
  out.output = activate(out.cache.pre_activation, spec.activation);
  return out;
}

LayerGrads layer_backward(const LayerSpec& spec, const LayerCache& cache, const LayerParams& params,
                          const Tensor& upstream, InputGrad want_input) {
  check_params(spec, params);
  if (upstream.shape() != cache.pre_activation.shape()) {
    throw Error("layer cache does not match upstream gradient " + shape_to_string(upstream.shape()));
  }
  const Tensor grad_pre = activation_backward(cache.pre_activation, upstream, spec.activation);
  Conv2dGrads g = conv2d_backward(cache.augmented, params.filters, effective_geometry(spec), grad_pre,
                                  want_input);
  LayerGrads out{std::nullopt, std::move(g.filters), std::move(g.bias)};
  if (!g.input) return out;
  if (spec.variant == Variant::kConv) {
    out.input = std::move(g.input);
    return out;
  }
  const std::size_t h = cache.input_shape[0], w = cache.input_shape[1], c = cache.input_shape[2];
  const std::size_t pad = spec.geom.padding;
  Tensor gi(cache.input_shape);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t k = 0; k < c; ++k) gi(i, j, k) = (*g.input)(i + pad, j + pad, k);
    }
  }
  out.input = std::move(gi);
  return out;
}

FlopReport count_flops(const LayerSpec& spec, std::size_t height, std::size_t width) {
  validate(spec.geom);
  const ConvGeometry& g = spec.geom;
  FlopReport r;
  r.h_out = conv_output_extent(height, g.kernel_h, g.stride, g.padding);
  r.w_out = conv_output_extent(width, g.kernel_w, g.stride, g.padding);
  const std::uint64_t c_eff = g.in_channels + positional_planes(spec.variant);
  const std::uint64_t taps = std::uint64_t(g.kernel_h) * g.kernel_w * c_eff * g.out_channels;
  r.flops = 2 * std::uint64_t(r.h_out) * r.w_out * taps;
  r.params = taps + g.out_channels;
  return r;
}

}  // namespace geoconv
