#include "geoconv/geopos.hpp"

#include <cmath>

namespace geoconv {

void validate(const ShiftPolicy& policy) {
  if (policy.mode == ShiftPolicy::Mode::kResample) {
    if (!(policy.low < policy.high)) {
      throw ConfigError("shift policy needs low < high, got [" + std::to_string(policy.low) +
                        ", " + std::to_string(policy.high) + ")");
    }
  }
}

float sample_shift(const ShiftPolicy& policy, Rng& rng, Phase phase) {
  if (policy.mode == ShiftPolicy::Mode::kFixed) return static_cast<float>(policy.fixed_value);
  if (phase == Phase::kEval) return static_cast<float>(policy.eval_value);
  validate(policy);
  // Narrowing can round up to `high`; step back to keep the half-open range.
  const float r = static_cast<float>(uniform(rng, policy.low, policy.high));
  return double(r) < policy.high ? r : std::nextafter(r, -INFINITY);
}

double coordinate_value(std::ptrdiff_t index, std::size_t extent, bool normalize) {
  if (extent <= 1) return 0.0;
  if (!normalize) return static_cast<double>(index);
  return static_cast<double>(index) / static_cast<double>(extent - 1);
}

namespace {

void check(const GeoChannelSpec& spec) {
  if (spec.extent_h == 0 || spec.extent_w == 0) {
    throw ConfigError("GeoPos channel extents must be >= 1");
  }
}

}  // namespace

Tensor coordinate_channel_padded(const GeoChannelSpec& spec, Axis axis, std::size_t padding) {
  check(spec);
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  const std::size_t h = spec.extent_h + 2 * padding;
  const std::size_t w = spec.extent_w + 2 * padding;
  Tensor out({h, w});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const double v = axis == Axis::kRow
                           ? coordinate_value(std::ptrdiff_t(i) - pad, spec.extent_h, spec.normalize)
                           : coordinate_value(std::ptrdiff_t(j) - pad, spec.extent_w, spec.normalize);
      out(i, j) = static_cast<float>(v);
    }
  }
  return out;
}

Tensor coordinate_channel(const GeoChannelSpec& spec, Axis axis) {
  return coordinate_channel_padded(spec, axis, 0);
}

Tensor geopos_channel_padded(const GeoChannelSpec& spec, float shift, std::size_t padding) {
  Tensor out = coordinate_channel_padded(spec, Axis::kRow, padding);
  const Tensor cols = coordinate_channel_padded(spec, Axis::kCol, padding);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] + cols[i]) + shift;
  return out;
}

Tensor geopos_channel(const GeoChannelSpec& spec, float shift) {
  return geopos_channel_padded(spec, shift, 0);
}

}  // namespace geoconv
