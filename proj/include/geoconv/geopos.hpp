#pragma once

#include <cstddef>
#include <cstdint>

#include "geoconv/rng.hpp"
#include "geoconv/tensor.hpp"

namespace geoconv {

/// How the scalar shift added to the whole GeoPos channel is drawn.
struct ShiftPolicy {
  enum class Mode { kResample, kFixed };

  Mode mode = Mode::kResample;
  double low = -1.0;   // uniform support, resample mode only
  double high = 1.0;
  double fixed_value = 0.0;  // fixed mode
  double eval_value = 0.0;   // used outside training in resample mode

  static ShiftPolicy uniform(double low, double high) {
    return {Mode::kResample, low, high, 0.0, 0.0};
  }
  static ShiftPolicy fixed(double r) { return {Mode::kFixed, -1.0, 1.0, r, r}; }

  bool operator==(const ShiftPolicy&) const = default;
};

/// Throws ConfigError when a resampling policy has low >= high.
void validate(const ShiftPolicy& policy);

enum class Phase { kTrain, kEval };

/// Draws one shift. Fixed mode ignores the rng; eval phase returns eval_value.
float sample_shift(const ShiftPolicy& policy, Rng& rng, Phase phase = Phase::kTrain);

struct GeoChannelSpec {
  std::size_t extent_h = 1;
  std::size_t extent_w = 1;
  bool normalize = true;
};

enum class Axis { kRow = 0, kCol = 1 };

/// Coordinate value at a (possibly out-of-range) index: index / (extent - 1)
/// when normalizing, the raw index otherwise, 0 for a unit extent.
double coordinate_value(std::ptrdiff_t index, std::size_t extent, bool normalize);

/// [extent_h, extent_w] plane whose value varies only along `axis`.
Tensor coordinate_channel(const GeoChannelSpec& spec, Axis axis);

/// Same plane evaluated analytically on indices -padding .. extent-1+padding.
Tensor coordinate_channel_padded(const GeoChannelSpec& spec, Axis axis, std::size_t padding);

/// Row coordinate + column coordinate + shift.
Tensor geopos_channel(const GeoChannelSpec& spec, float shift);

/// GeoPos channel with its linear formula extended into a padding border
/// instead of zero fill.
Tensor geopos_channel_padded(const GeoChannelSpec& spec, float shift, std::size_t padding);

}  // namespace geoconv
