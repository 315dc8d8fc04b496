#include "geoconv/theorems.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "geoconv/layers.hpp"
#include "geoconv/train.hpp"

namespace geoconv {

std::vector<double> shift_offsets(const Tensor& filters, double r) {
  if (filters.rank() != 4) throw DimensionError("filters must be rank 4 [K_H,K_W,C_in,C_out]");
  const std::size_t kh = filters.dim(0), kw = filters.dim(1), cin = filters.dim(2), cout = filters.dim(3);
  std::vector<double> out(cout, 0.0);
  for (std::size_t u = 0; u < kh; ++u) {
    for (std::size_t v = 0; v < kw; ++v) {
      for (std::size_t o = 0; o < cout; ++o) out[o] += double(filters(u, v, cin - 1, o));
    }
  }
  for (auto& x : out) x *= r;
  return out;
}

double verify_shift_identity(const Tensor& filters, const Tensor& input, float r,
                             const ConvGeometry& geom) {
  LayerSpec spec;
  spec.variant = Variant::kGeoConv;
  spec.geom = geom;
  spec.activation = Activation::kNone;
  const ConvGeometry eff = effective_geometry(spec);
  if (filters.shape() != filter_shape(eff)) {
    throw ConfigError("shift identity needs filters " + shape_to_string(filter_shape(eff)) +
                      " with the GeoPos plane last, got " + shape_to_string(filters.shape()));
  }
  const Tensor bias({geom.out_channels});
  const Tensor shifted = conv2d_forward(augment_input(spec, input, r), filters, bias, eff);
  const Tensor base = conv2d_forward(augment_input(spec, input, 0.0f), filters, bias, eff);
  const std::vector<double> offset = shift_offsets(filters, r);
  const std::size_t cout = geom.out_channels;
  double worst = 0.0;
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    worst = std::max(worst, std::abs(double(shifted[i]) - double(base[i]) - offset[i % cout]));
  }
  return worst;
}

Tensor collapse_filter(const Tensor& filter, Axis axis) {
  if (filter.rank() != 2) throw DimensionError("collapse_filter expects a [K_H,K_W] filter");
  const std::size_t kh = filter.dim(0), kw = filter.dim(1);
  const std::size_t n = axis == Axis::kRow ? kh : kw;
  std::vector<double> acc(n, 0.0);
  for (std::size_t u = 0; u < kh; ++u) {
    for (std::size_t v = 0; v < kw; ++v) acc[axis == Axis::kRow ? u : v] += double(filter(u, v));
  }
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(acc[i]);
  return out;
}

double verify_filter_collapse(const Tensor& filter, const GeoChannelSpec& spec, Axis axis,
                              const ConvGeometry& geom) {
  if (filter.rank() != 2) throw DimensionError("verify_filter_collapse expects a [K_H,K_W] filter");
  ConvGeometry g = geom;
  g.kernel_h = filter.dim(0);
  g.kernel_w = filter.dim(1);
  g.in_channels = g.out_channels = 1;
  g.padding = 0;
  const Tensor plane = coordinate_channel_padded(spec, axis, geom.padding);
  const Tensor input = plane.reshaped({plane.dim(0), plane.dim(1), 1});
  const Tensor full = conv2d_forward(input, filter.reshaped({g.kernel_h, g.kernel_w, 1, 1}),
                                     Tensor({1}), g);

  const Tensor marginal = collapse_filter(filter, axis);
  const std::size_t out_h = full.dim(0), out_w = full.dim(1);
  double worst = 0.0;
  for (std::size_t a = 0; a < out_h; ++a) {
    for (std::size_t b = 0; b < out_w; ++b) {
      double acc = 0.0;
      for (std::size_t t = 0; t < marginal.size(); ++t) {
        const float c = axis == Axis::kRow ? plane(a * g.stride + t, b * g.stride)
                                           : plane(a * g.stride, b * g.stride + t);
        acc += double(marginal[t]) * double(c);
      }
      worst = std::max(worst, std::abs(double(full(a, b, 0)) - double(static_cast<float>(acc))));
    }
  }
  return worst;
}

bool equivalence_size_condition(std::size_t kernel_h, std::size_t kernel_w) {
  return kernel_h * kernel_w >= 2 * (kernel_h + kernel_w);
}

namespace {

struct EquivalenceSystem {
  Eigen::MatrixXd design;  // rows: output positions, cols: geo filter taps
  Eigen::VectorXd target;  // coordinate response
};

EquivalenceSystem build_system(const Tensor& coord_filters, const ConvGeometry& geom, std::size_t extent) {
  if (coord_filters.rank() != 3 || coord_filters.dim(2) != 2) {
    throw DimensionError("coordinate filters must be [K_H,K_W,2], got " +
                         shape_to_string(coord_filters.shape()));
  }
  const std::size_t kh = coord_filters.dim(0), kw = coord_filters.dim(1);
  const std::size_t out_h = conv_output_extent(extent, kh, geom.stride, geom.padding);
  const std::size_t out_w = conv_output_extent(extent, kw, geom.stride, geom.padding);
  const auto pad = static_cast<std::ptrdiff_t>(geom.padding);
  EquivalenceSystem sys{Eigen::MatrixXd(out_h * out_w, kh * kw), Eigen::VectorXd(out_h * out_w)};
  for (std::size_t a = 0; a < out_h; ++a) {
    for (std::size_t b = 0; b < out_w; ++b) {
      const std::size_t row = a * out_w + b;
      double response = 0.0;
      for (std::size_t u = 0; u < kh; ++u) {
        for (std::size_t v = 0; v < kw; ++v) {
          const double cr = coordinate_value(std::ptrdiff_t(a * geom.stride + u) - pad, extent, true);
          const double cc = coordinate_value(std::ptrdiff_t(b * geom.stride + v) - pad, extent, true);
          response += double(coord_filters(u, v, 0)) * cr + double(coord_filters(u, v, 1)) * cc;
          sys.design(row, u * kw + v) = cr + cc;
        }
      }
      sys.target(row) = response;
    }
  }
  return sys;
}

}  // namespace

double equivalence_residual(const Tensor& coord_filters, const Tensor& geo_filter,
                            const ConvGeometry& geom, std::size_t extent) {
  const EquivalenceSystem sys = build_system(coord_filters, geom, extent);
  require_shape(geo_filter, {coord_filters.dim(0), coord_filters.dim(1)}, "GeoPos filter");
  Eigen::VectorXd f(geo_filter.size());
  for (std::size_t i = 0; i < geo_filter.size(); ++i) f(Eigen::Index(i)) = geo_filter[i];
  return (sys.design * f - sys.target).cwiseAbs().maxCoeff();
}

EquivalenceResult solve_equivalence(const Tensor& coord_filters, const ConvGeometry& geom, std::size_t extent) {
  const EquivalenceSystem sys = build_system(coord_filters, geom, extent);
  const std::size_t kh = coord_filters.dim(0), kw = coord_filters.dim(1);
  EquivalenceResult r{Tensor({kh, kw}), 0.0, equivalence_size_condition(kh, kw)};
  if (sys.target.cwiseAbs().maxCoeff() == 0.0) return r;
  const Eigen::VectorXd f = sys.design.completeOrthogonalDecomposition().solve(sys.target);
  for (std::size_t i = 0; i < kh * kw; ++i) r.geo_filter[i] = static_cast<float>(f(Eigen::Index(i)));
  r.residual = (sys.design * f - sys.target).cwiseAbs().maxCoeff();
  return r;
}

double positional_invariance_probe(const Model& model, const Dataset& centred, const Dataset& shifted) {
  return evaluate(model, shifted).mean_loss - evaluate(model, centred).mean_loss;
}

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(uniform(rng, lo, hi));
  return t;
}

}  // namespace

std::vector<CheckResult> run_theorem_checks(std::size_t seeds, std::uint64_t base_seed) {
  std::vector<CheckResult> out;

  CheckResult shift{"shift identity, random filters", 0, 0.0, 1e-5};
  CheckResult ones{"shift identity, all-ones 3x3 (offset 9r)", 0, 0.0, 1e-5};
  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng = make_rng(base_seed, 100 + s);
    const ConvGeometry geom{3, 3, 1 + s % 2, (s / 2) % 2, 2, 3};
    const Tensor input = random_tensor({8, 8, 2}, rng, 0.0, 1.0);
    const Tensor filters = random_tensor({3, 3, 3, 3}, rng);
    Tensor ones_filters({3, 3, 3, 3});
    for (std::size_t u = 0; u < 3; ++u)
      for (std::size_t v = 0; v < 3; ++v)
        for (std::size_t o = 0; o < 3; ++o) ones_filters(u, v, 2, o) = 1.0f;
    for (float r : {-1.0f, -0.3f, 0.0f, 0.7f, 1.0f}) {
      shift.max_residual = std::max(shift.max_residual, verify_shift_identity(filters, input, r, geom));
      ++shift.cases;
      double w = verify_shift_identity(ones_filters, input, r, geom);
      for (double off : shift_offsets(ones_filters, r)) w = std::max(w, std::abs(off - 9.0 * double(r)));
      ones.max_residual = std::max(ones.max_residual, w);
      ++ones.cases;
    }
  }
  out.push_back(shift);
  out.push_back(ones);

  CheckResult collapse{"filter collapse, k in {2,3,5}, s in {1,2}, p in {0,1}", 0, 0.0, 1e-6};
  const std::size_t kernels[] = {2, 3, 5};
  for (std::size_t i = 0; i < 200; ++i) {
    Rng rng = make_rng(base_seed, 1000 + i);
    const std::size_t kh = kernels[i % 3], kw = kernels[(i / 3) % 3];
    const Tensor f = random_tensor({kh, kw}, rng);
    const ConvGeometry geom{kh, kw, 1 + (i / 9) % 2, (i / 18) % 2, 1, 1};
    for (Axis axis : {Axis::kRow, Axis::kCol}) {
      collapse.max_residual =
          std::max(collapse.max_residual, verify_filter_collapse(f, {8, 8, true}, axis, geom));
      ++collapse.cases;
    }
  }
  out.push_back(collapse);

  for (std::size_t k : {5u, 3u}) {
    CheckResult eq{"equivalence " + std::to_string(k) + "x" + std::to_string(k) +
                       ", random coordinate filters, 16x16",
                   0, 0.0, std::nullopt};
    if (equivalence_size_condition(k, k)) eq.tolerance = 1e-4;
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng rng = make_rng(base_seed, 5000 + s);
      const Tensor cf = random_tensor({k, k, 2}, rng);
      eq.max_residual = std::max(eq.max_residual, solve_equivalence(cf, {k, k, 1, 0, 1, 1}, 16).residual);
      ++eq.cases;
    }
    out.push_back(eq);
  }

  // Pairs whose two filters carry the same total weight: the GeoPos response
  // has one slope shared by both axes, so this is the family it can match.
  for (std::size_t k : {3u, 5u}) {
    CheckResult eq{"equivalence " + std::to_string(k) + "x" + std::to_string(k) +
                       ", equal-sum coordinate filters, 16x16",
                   0, 0.0, std::nullopt};
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng rng = make_rng(base_seed, 7000 + s);
      Tensor cf = random_tensor({k, k, 2}, rng);
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t u = 0; u < k; ++u)
        for (std::size_t v = 0; v < k; ++v) {
          s0 += cf(u, v, 0);
          s1 += cf(u, v, 1);
        }
      cf(0, 0, 1) = static_cast<float>(double(cf(0, 0, 1)) + (s0 - s1));
      eq.max_residual = std::max(eq.max_residual, solve_equivalence(cf, {k, k, 1, 0, 1, 1}, 16).residual);
      ++eq.cases;
    }
    out.push_back(eq);
  }
  return out;
}

}  // namespace geoconv
