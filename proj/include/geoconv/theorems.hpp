#pragma once

// Numerical certificates for the positional-channel identities:
//  * shift identity: appending the GeoPos channel with shift r instead of 0
//    moves every output of channel o by exactly r * sum(positional filter o);
//  * filter collapse: a 2-D filter applied to a coordinate plane responds like
//    its marginal 1-D filter along the plane's varying axis;
//  * equivalence: whether one GeoPos filter can reproduce the response of a
//    pair of coordinate-plane filters (least squares over output positions).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geoconv/conv.hpp"
#include "geoconv/datasets.hpp"
#include "geoconv/geopos.hpp"
#include "geoconv/model.hpp"

namespace geoconv {

/// r * sum_{u,v} filters[u, v, last plane, o], one value per output channel.
std::vector<double> shift_offsets(const Tensor& filters, double r);

/// `filters` is [K_H, K_W, C + 1, C_out] with the GeoPos plane last, `input`
/// is [H, W, C] and `geom` describes the data convolution (in_channels = C).
/// Returns max |conv(x (+) g_r) - conv(x (+) g_0) - r * sum f_geo| over outputs.
double verify_shift_identity(const Tensor& filters, const Tensor& input, float r,
                             const ConvGeometry& geom);

/// Marginal sum of a [K_H, K_W] filter: axis kRow keeps the K_H row sums,
/// axis kCol the K_W column sums.
Tensor collapse_filter(const Tensor& filter, Axis axis);

/// max |conv2d(c_axis, f) - conv1d_axis(c_axis, collapse_filter(f, axis))|
/// over all outputs, with c_axis analytically extended under padding.
double verify_filter_collapse(const Tensor& filter, const GeoChannelSpec& spec, Axis axis,
                              const ConvGeometry& geom);

struct EquivalenceResult {
  Tensor geo_filter;  // [K_H, K_W]
  double residual = 0.0;
  bool condition_holds = false;  // K_H * K_W >= 2 (K_H + K_W)
};

/// True when s1 * s2 >= 2 (s1 + s2).
bool equivalence_size_condition(std::size_t kernel_h, std::size_t kernel_w);

/// Max-abs gap between the coordinate response sum_t f_t * c_t and f_geo * g
/// on an extent x extent channel with zero shift.
double equivalence_residual(const Tensor& coord_filters, const Tensor& geo_filter,
                            const ConvGeometry& geom, std::size_t extent);

/// `coord_filters` is [K_H, K_W, 2] (row plane, column plane). Fits the GeoPos
/// filter by minimum-norm least squares in float64 and reports the max-abs
/// residual of the fit.
EquivalenceResult solve_equivalence(const Tensor& coord_filters, const ConvGeometry& geom,
                                    std::size_t extent = 16);

/// Mean loss on translated copies minus mean loss on centred copies.
double positional_invariance_probe(const Model& model, const Dataset& centred, const Dataset& shifted);

struct CheckResult {
  std::string name;
  std::size_t cases = 0;
  double max_residual = 0.0;
  std::optional<double> tolerance;  // empty for report-only rows
  bool passed() const { return !tolerance || max_residual < *tolerance; }
};

/// The full residual table printed by `geoconv verify`.
std::vector<CheckResult> run_theorem_checks(std::size_t seeds, std::uint64_t base_seed);

}  // namespace geoconv
