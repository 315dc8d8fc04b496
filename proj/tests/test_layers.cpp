#include <doctest.h>

#include <cmath>

#include "geoconv/layers.hpp"
#include "support/reference.hpp"

using namespace geoconv;

namespace {

LayerSpec make_spec(Variant v, ConvGeometry g, Activation a = Activation::kNone, double shift = 0.0) {
  LayerSpec s;
  s.variant = v;
  s.geom = g;
  s.activation = a;
  s.shift_policy = ShiftPolicy::fixed(shift);
  return s;
}

ref::Act ref_act(Activation a) {
  switch (a) {
    case Activation::kRelu: return ref::Act::kRelu;
    case Activation::kLeakyRelu: return ref::Act::kLeaky;
    case Activation::kSigmoid: return ref::Act::kSigmoid;
    case Activation::kNone: break;
  }
  return ref::Act::kNone;
}

// Worst relative error of layer_backward against finite differences of the
// float64 reference layer, for <act(conv(augment(x)) + b), u>. Entries whose
// perturbation flips the sign of a ReLU-family pre-activation are skipped.
double layer_fd_error(const LayerSpec& spec, std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng = make_rng(seed, 1);
  const LayerParams params = init_layer_params(spec, rng);
  const Tensor x = ref::random_tensor({h, w, spec.geom.in_channels}, seed + 7);
  Rng unused(0);
  const LayerOutput out = layer_forward(spec, x, params, unused);
  const Tensor u = ref::random_tensor(out.output.shape(), seed + 8);
  const LayerGrads grads = layer_backward(spec, out.cache, params, u);

  const std::size_t planes = positional_planes(spec.variant);
  const ConvGeometry eff = effective_geometry(spec);
  const std::size_t pad = spec.variant == Variant::kConv ? 0 : spec.geom.padding;
  const ref::Conv rc{h + 2 * pad, w + 2 * pad, eff.in_channels, eff.kernel_h, eff.kernel_w,
                     eff.out_channels, eff.stride, eff.padding};
  const ref::Vec uv = ref::to_vec(u);
  const double shift = spec.shift_policy.fixed_value;
  auto pre = [&](const ref::Vec& xx, const ref::Vec& ff, const ref::Vec& bb) {
    const ref::Vec aug = ref::augment(xx, h, w, spec.geom.in_channels, planes, shift, pad);
    return ref::conv(rc, aug, ff, bb);
  };
  auto objective = [&](const ref::Vec& xx, const ref::Vec& ff, const ref::Vec& bb) {
    const ref::Vec z = pre(xx, ff, bb);
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += ref::act(z[i], ref_act(spec.activation)) * uv[i];
    return s;
  };

  const ref::Vec xv = ref::to_vec(x), fv = ref::to_vec(params.filters), bv = ref::to_vec(params.bias);
  const ref::Vec z0 = pre(xv, fv, bv);
  const bool kinked = spec.activation == Activation::kRelu || spec.activation == Activation::kLeakyRelu;
  auto crosses_kink = [&](const ref::Vec& zp, const ref::Vec& zm) {
    if (!kinked) return false;
    for (std::size_t i = 0; i < z0.size(); ++i)
      if ((zp[i] > 0) != (z0[i] > 0) || (zm[i] > 0) != (z0[i] > 0)) return true;
    return false;
  };

  double worst = 0.0;
  auto check_block = [&](const Tensor& analytic, ref::Vec base, int which) {
    ref::Vec numeric(base.size());
    std::vector<bool> skip(base.size(), false);
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double keep = base[i];
      auto eval = [&](double v, ref::Vec* zs) {
        base[i] = v;
        const ref::Vec& xx = which == 0 ? base : xv;
        const ref::Vec& ff = which == 1 ? base : fv;
        const ref::Vec& bb = which == 2 ? base : bv;
        *zs = pre(xx, ff, bb);
        return objective(xx, ff, bb);
      };
      ref::Vec zp, zm;
      const double up = eval(keep + 1e-3, &zp);
      const double down = eval(keep - 1e-3, &zm);
      base[i] = keep;
      numeric[i] = (up - down) / 2e-3;
      skip[i] = crosses_kink(zp, zm);
    }
    double scale = 0.0;
    for (double v : numeric) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      if (skip[i]) continue;
      const double a = analytic[i], b = numeric[i];
      worst = std::max(worst, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3 * scale, 1e-12}));
    }
  };
  check_block(*grads.input, xv, 0);
  check_block(grads.filters, fv, 1);
  check_block(grads.bias, bv, 2);
  return worst;
}

}  // namespace

TEST_CASE("variant names round-trip") {
  for (auto v : {Variant::kConv, Variant::kCoordConv, Variant::kGeoConv}) CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_variant("deform"), ConfigError);
}

TEST_CASE("filter planes per variant") {
  const ConvGeometry g{3, 3, 1, 0, 4, 5};
  Rng rng(1);
  CHECK(init_layer_params(make_spec(Variant::kConv, g), rng).filters.shape() == Shape{3, 3, 4, 5});
  CHECK(init_layer_params(make_spec(Variant::kGeoConv, g), rng).filters.shape() == Shape{3, 3, 5, 5});
  CHECK(init_layer_params(make_spec(Variant::kCoordConv, g), rng).filters.shape() == Shape{3, 3, 6, 5});
}

TEST_CASE("Kaiming-uniform bound") {
  Rng rng(5);
  const auto p = init_layer_params(make_spec(Variant::kGeoConv, {3, 3, 1, 0, 2, 8}), rng);
  const float bound = static_cast<float>(std::sqrt(6.0 / 27.0));
  for (float w : p.filters.data()) CHECK(std::abs(w) <= bound);
  CHECK(p.bias == Tensor({8}));
}

TEST_CASE("GeoConv with zero parameters outputs zero") {
  const auto spec = make_spec(Variant::kGeoConv, {3, 3, 1, 1, 2, 3}, Activation::kNone, 0.8);
  const LayerParams zero{Tensor({3, 3, 3, 3}), Tensor({3})};
  Rng rng(0);
  const auto out = layer_forward(spec, ref::random_tensor({6, 6, 2}, 1), zero, rng);
  CHECK(out.output == Tensor(out.output.shape()));
}

TEST_CASE("all-ones GeoPos-plane filter shifts 3x3 outputs by 9r") {
  const ConvGeometry g{3, 3, 1, 0, 1, 1};
  LayerParams p{Tensor({3, 3, 2, 1}), Tensor({1})};
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t v = 0; v < 3; ++v) p.filters(u, v, 1, 0) = 1.0f;
  const Tensor x = ref::random_tensor({7, 7, 1}, 2);
  Rng rng(0);
  for (double r : {-1.0, 0.35, 2.0}) {
    const auto shifted = layer_forward(make_spec(Variant::kGeoConv, g, Activation::kNone, r), x, p, rng);
    const auto base = layer_forward(make_spec(Variant::kGeoConv, g, Activation::kNone, 0.0), x, p, rng);
    CHECK(shifted.cache.shift == static_cast<float>(r));
    for (std::size_t i = 0; i < base.output.size(); ++i)
      CHECK(double(shifted.output[i]) - base.output[i] == doctest::Approx(9.0 * r).epsilon(1e-5));
  }
}

TEST_CASE("pre-activation offset equals r times the GeoPos filter sum, per channel") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const ConvGeometry g{3, 3, 1 + std::size_t(trial % 2), std::size_t(trial % 3 == 0), 2, 3};
    Rng init = make_rng(trial, 0);
    const LayerParams p = init_layer_params(make_spec(Variant::kGeoConv, g), init);
    const Tensor x = ref::random_tensor({9, 8, 2}, trial);
    const double r = uniform(rng, -10, 10);
    const auto a = layer_forward(make_spec(Variant::kGeoConv, g, Activation::kRelu, r), x, p, rng);
    const auto b = layer_forward(make_spec(Variant::kGeoConv, g, Activation::kRelu, 0), x, p, rng);
    for (std::size_t i = 0; i < a.cache.pre_activation.size(); ++i) {
      const std::size_t o = i % 3;
      double fsum = 0.0;
      for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v < 3; ++v) fsum += p.filters(u, v, 2, o);
      CHECK(std::abs(double(a.cache.pre_activation[i]) - b.cache.pre_activation[i] - double(static_cast<float>(r)) * fsum) < 1e-5);
    }
  }
}

TEST_CASE("variants coincide when positional filters are zero") {
  const ConvGeometry g{3, 3, 2, 1, 2, 4};
  Rng rng(3);
  const LayerParams conv = init_layer_params(make_spec(Variant::kConv, g), rng);
  auto widen = [&](std::size_t planes) {
    LayerParams p{Tensor({3, 3, 2 + planes, 4}), conv.bias};
    for (std::size_t u = 0; u < 3; ++u)
      for (std::size_t v = 0; v < 3; ++v)
        for (std::size_t c = 0; c < 2; ++c)
          for (std::size_t o = 0; o < 4; ++o) p.filters(u, v, c, o) = conv.filters(u, v, c, o);
    return p;
  };
  const Tensor x = ref::random_tensor({9, 9, 2}, 4);
  const auto base = layer_forward(make_spec(Variant::kConv, g, Activation::kRelu), x, conv, rng);
  const auto coord = layer_forward(make_spec(Variant::kCoordConv, g, Activation::kRelu), x, widen(2), rng);
  const auto geo = layer_forward(make_spec(Variant::kGeoConv, g, Activation::kRelu, 0.6), x, widen(1), rng);
  CHECK(coord.output == base.output);
  CHECK(geo.output == base.output);
}

TEST_CASE("channel-count mismatch is a configuration error") {
  const auto spec = make_spec(Variant::kCoordConv, {3, 3, 1, 0, 2, 2});
  Rng rng(0);
  CHECK_THROWS_AS(layer_forward(spec, Tensor({5, 5, 2}), LayerParams{Tensor({3, 3, 3, 2}), Tensor({2})}, rng), ConfigError);
  CHECK_THROWS_AS(layer_forward(spec, Tensor({5, 5, 3}), LayerParams{Tensor({3, 3, 4, 2}), Tensor({2})}, rng), ConfigError);
}

TEST_CASE("zero upstream gives zero gradients") {
  const auto spec = make_spec(Variant::kGeoConv, {3, 3, 1, 0, 2, 2}, Activation::kSigmoid, 0.3);
  Rng rng(0);
  const auto p = init_layer_params(spec, rng);
  const auto out = layer_forward(spec, ref::random_tensor({6, 6, 2}, 1), p, rng);
  const auto g = layer_backward(spec, out.cache, p, Tensor(out.output.shape()));
  CHECK(*g.input == Tensor({6, 6, 2}));
  CHECK(g.filters == Tensor(p.filters.shape()));
  CHECK(g.bias == Tensor({2}));
}

TEST_CASE("mismatched cache is rejected") {
  const auto spec = make_spec(Variant::kConv, {3, 3, 1, 0, 1, 1});
  Rng rng(0);
  const auto p = init_layer_params(spec, rng);
  const auto out = layer_forward(spec, Tensor({6, 6, 1}), p, rng);
  CHECK_THROWS_AS(layer_backward(spec, out.cache, p, Tensor({3, 3, 1})), Error);
}

TEST_CASE("GeoConv finite differences on 6x6x2, seed 0, fixed shift") {
  const auto spec = make_spec(Variant::kGeoConv, {3, 3, 1, 0, 2, 3}, Activation::kSigmoid, 0.4);
  CHECK(layer_fd_error(spec, 6, 6, 0) < 1e-4);
}

TEST_CASE("finite differences for every variant and activation") {
  Rng rng(77);
  double worst = 0.0;
  int n = 0;
  for (auto v : {Variant::kConv, Variant::kCoordConv, Variant::kGeoConv}) {
    for (auto a : {Activation::kNone, Activation::kRelu, Activation::kLeakyRelu, Activation::kSigmoid}) {
      for (int rep = 0; rep < 3; ++rep, ++n) {
        const ConvGeometry g{2 + uniform_index(rng, 2), 2 + uniform_index(rng, 2), 1 + uniform_index(rng, 2),
                             uniform_index(rng, 2), 1 + uniform_index(rng, 2), 1 + uniform_index(rng, 3)};
        const auto spec = make_spec(v, g, a, uniform(rng, -1, 1));
        const double e = layer_fd_error(spec, 5 + uniform_index(rng, 3), 5 + uniform_index(rng, 3), 300 + n);
        CAPTURE(to_string(v));
        CAPTURE(to_string(a));
        CHECK(e < 1e-4);
        worst = std::max(worst, e);
      }
    }
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("GeoPos-plane filter gradient is the correlation of upstream with the channel") {
  const ConvGeometry g{3, 3, 2, 1, 1, 2};
  const auto spec = make_spec(Variant::kGeoConv, g, Activation::kNone, -0.7);
  Rng rng(4);
  const auto p = init_layer_params(spec, rng);
  const auto out = layer_forward(spec, ref::random_tensor({7, 7, 1}, 5), p, rng);
  const Tensor u = ref::random_tensor(out.output.shape(), 6);
  const auto grads = layer_backward(spec, out.cache, p, u);
  const Tensor gp = geopos_channel_padded({7, 7, true}, -0.7f, 1);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t o = 0; o < 2; ++o) {
        double acc = 0.0;
        for (std::size_t y = 0; y < u.dim(0); ++y)
          for (std::size_t x = 0; x < u.dim(1); ++x) acc += double(u(y, x, o)) * gp(y * 2 + a, x * 2 + b);
        CHECK(grads.filters(a, b, 1, o) == doctest::Approx(acc).epsilon(1e-5));
      }
}

TEST_CASE("FLOP and parameter accounting") {
  const ConvGeometry g{3, 3, 1, 1, 3, 8};
  const auto conv = count_flops(make_spec(Variant::kConv, g), 32, 32);
  const auto geo = count_flops(make_spec(Variant::kGeoConv, g), 32, 32);
  const auto coord = count_flops(make_spec(Variant::kCoordConv, g), 32, 32);
  CHECK(conv.h_out == 32);
  CHECK(conv.w_out == 32);
  CHECK(conv.flops == 2ull * 32 * 32 * 9 * 3 * 8);
  CHECK(conv.flops == 442368);
  CHECK(geo.flops == 589824);
  CHECK(coord.flops == 737280);
  CHECK(geo.flops * 3 == conv.flops * 4);
  CHECK(coord.flops - conv.flops == 2 * (geo.flops - conv.flops));
  CHECK(conv.params == 9 * 3 * 8 + 8);
  CHECK(coord.params - geo.params == 8 * 9);

  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const ConvGeometry r{1 + uniform_index(rng, 5), 1 + uniform_index(rng, 5), 1 + uniform_index(rng, 3),
                         uniform_index(rng, 3), 1 + uniform_index(rng, 16), 1 + uniform_index(rng, 16)};
    const std::size_t h = 8 + uniform_index(rng, 60), w = 8 + uniform_index(rng, 60);
    const auto c0 = count_flops(make_spec(Variant::kConv, r), h, w);
    const auto c1 = count_flops(make_spec(Variant::kGeoConv, r), h, w);
    const auto c2 = count_flops(make_spec(Variant::kCoordConv, r), h, w);
    CHECK(c2.flops - c0.flops == 2 * (c1.flops - c0.flops));
    CHECK(c2.params - c1.params == r.out_channels * r.kernel_h * r.kernel_w);
  }
}
