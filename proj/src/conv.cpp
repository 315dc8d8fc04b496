#include "geoconv/conv.hpp"

#include <algorithm>

#include <string>
#include <vector>

#include "geoconv/simd.hpp"

namespace geoconv {

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (stride == 0) throw ConfigError("convolution stride must be >= 1");
  if (extent + 2 * padding < kernel) {
    throw DimensionError("kernel extent " + std::to_string(kernel) +
                         " exceeds padded input extent " + std::to_string(extent + 2 * padding));
  }
  return (extent + 2 * padding - kernel) / stride + 1;
}

void validate(const ConvGeometry& geom) {
  if (geom.kernel_h == 0 || geom.kernel_w == 0) throw ConfigError("kernel extents must be >= 1");
  if (geom.stride == 0) throw ConfigError("stride must be >= 1");
  if (geom.in_channels == 0 || geom.out_channels == 0) {
    throw ConfigError("channel counts must be >= 1");
  }
}

Shape filter_shape(const ConvGeometry& geom) {
  return {geom.kernel_h, geom.kernel_w, geom.in_channels, geom.out_channels};
}

namespace {

struct Layout {
  std::size_t height, width, channels;
  std::size_t out_h, out_w;
  std::size_t patch;  // K_H * K_W * C_in
};

Layout check_operands(const Tensor& input, const Tensor& filters, const ConvGeometry& geom) {
  validate(geom);
  if (input.rank() != 3) {
    throw DimensionError("convolution input must be rank 3 [H,W,C], got " +
                         shape_to_string(input.shape()));
  }
  if (input.dim(2) != geom.in_channels) {
    throw DimensionError("input axis 2 (channels) is " + std::to_string(input.dim(2)) +
                         " but geometry expects " + std::to_string(geom.in_channels));
  }
  require_shape(filters, filter_shape(geom), "filters");
  Layout l{input.dim(0), input.dim(1), input.dim(2), 0, 0, 0};
  l.out_h = conv_output_extent(l.height, geom.kernel_h, geom.stride, geom.padding);
  l.out_w = conv_output_extent(l.width, geom.kernel_w, geom.stride, geom.padding);
  l.patch = geom.kernel_h * geom.kernel_w * l.channels;
  return l;
}

// Row p of the result holds the receptive field of output pixel p, ordered
// (kernel row, kernel col, channel) to match the filter layout.
std::vector<float> im2col(const Tensor& input, const ConvGeometry& geom, const Layout& l) {
  std::vector<float> patches(l.out_h * l.out_w * l.patch, 0.0f);
  const auto src = input.data();
  const auto pad = static_cast<std::ptrdiff_t>(geom.padding);
  float* dst = patches.data();
  for (std::size_t oy = 0; oy < l.out_h; ++oy) {
    for (std::size_t ox = 0; ox < l.out_w; ++ox, dst += l.patch) {
      for (std::size_t u = 0; u < geom.kernel_h; ++u) {
        const auto y = static_cast<std::ptrdiff_t>(oy * geom.stride + u) - pad;
        if (y < 0 || y >= static_cast<std::ptrdiff_t>(l.height)) continue;
        // Clip the kernel row to the image and copy it as one run.
        const auto x0 = static_cast<std::ptrdiff_t>(ox * geom.stride) - pad;
        const std::ptrdiff_t v_lo = std::max<std::ptrdiff_t>(0, -x0);
        const std::ptrdiff_t v_hi = std::min<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>(geom.kernel_w), static_cast<std::ptrdiff_t>(l.width) - x0);
        if (v_lo >= v_hi) continue;
        const float* row = src.data() + (static_cast<std::size_t>(y) * l.width +
                                         static_cast<std::size_t>(x0 + v_lo)) * l.channels;
        std::copy(row, row + static_cast<std::size_t>(v_hi - v_lo) * l.channels,
                  dst + (u * geom.kernel_w + static_cast<std::size_t>(v_lo)) * l.channels);
      }
    }
  }
  return patches;
}

// [K_H,K_W,C_in,C_out] -> [C_out][K_H*K_W*C_in]
std::vector<float> transpose_filters(const Tensor& filters, std::size_t patch, std::size_t cout) {
  std::vector<float> out(patch * cout);
  const auto f = filters.data();
  for (std::size_t k = 0; k < patch; ++k) {
    for (std::size_t o = 0; o < cout; ++o) out[o * patch + k] = f[k * cout + o];
  }
  return out;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& filters, const Tensor& bias,
                      const ConvGeometry& geom) {
  const Layout l = check_operands(input, filters, geom);
  require_shape(bias, {geom.out_channels}, "bias");
  const auto& k = simd::active_kernels();
  const std::size_t cout = geom.out_channels;
  const std::vector<float> patches = im2col(input, geom, l);
  const std::vector<float> ft = transpose_filters(filters, l.patch, cout);

  Tensor out({l.out_h, l.out_w, cout});
  auto dst = out.data();
  const std::size_t n_out = l.out_h * l.out_w;
  for (std::size_t p = 0; p < n_out; ++p) {
    const float* patch = patches.data() + p * l.patch;
    for (std::size_t o = 0; o < cout; ++o) {
      dst[p * cout + o] = static_cast<float>(double(bias[o]) + k.dot(patch, ft.data() + o * l.patch, l.patch));
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& filters, const ConvGeometry& geom,
                            const Tensor& upstream, InputGrad want_input) {
  const Layout l = check_operands(input, filters, geom);
  const std::size_t cout = geom.out_channels;
  require_shape(upstream, {l.out_h, l.out_w, cout}, "upstream gradient");
  const auto& k = simd::active_kernels();
  const std::vector<float> patches = im2col(input, geom, l);
  const auto up = upstream.data();
  const std::size_t n_out = l.out_h * l.out_w;

  std::vector<double> gbias(cout, 0.0);
  std::vector<double> gfilt(cout * l.patch, 0.0);
  for (std::size_t p = 0; p < n_out; ++p) {
    const float* patch = patches.data() + p * l.patch;
    for (std::size_t o = 0; o < cout; ++o) {
      const double g = up[p * cout + o];
      if (g == 0.0) continue;
      gbias[o] += g;
      k.axpy(gfilt.data() + o * l.patch, g, patch, l.patch);
    }
  }

  Conv2dGrads grads{std::nullopt, Tensor(filter_shape(geom)), Tensor({cout})};
  auto gf = grads.filters.data();
  for (std::size_t kk = 0; kk < l.patch; ++kk) {
    for (std::size_t o = 0; o < cout; ++o) gf[kk * cout + o] = static_cast<float>(gfilt[o * l.patch + kk]);
  }
  for (std::size_t o = 0; o < cout; ++o) grads.bias[o] = static_cast<float>(gbias[o]);

  if (want_input == InputGrad::kSkip) return grads;

  const std::vector<float> ft = transpose_filters(filters, l.patch, cout);
  std::vector<double> gin(l.height * l.width * l.channels, 0.0);
  std::vector<double> gpatch(l.patch);
  const auto pad = static_cast<std::ptrdiff_t>(geom.padding);
  for (std::size_t oy = 0; oy < l.out_h; ++oy) {
    for (std::size_t ox = 0; ox < l.out_w; ++ox) {
      const std::size_t p = oy * l.out_w + ox;
      std::fill(gpatch.begin(), gpatch.end(), 0.0);
      bool any = false;
      for (std::size_t o = 0; o < cout; ++o) {
        const double g = up[p * cout + o];
        if (g == 0.0) continue;
        any = true;
        k.axpy(gpatch.data(), g, ft.data() + o * l.patch, l.patch);
      }
      if (!any) continue;
      for (std::size_t u = 0; u < geom.kernel_h; ++u) {
        const auto y = static_cast<std::ptrdiff_t>(oy * geom.stride + u) - pad;
        if (y < 0 || y >= static_cast<std::ptrdiff_t>(l.height)) continue;
        for (std::size_t v = 0; v < geom.kernel_w; ++v) {
          const auto x = static_cast<std::ptrdiff_t>(ox * geom.stride + v) - pad;
          if (x < 0 || x >= static_cast<std::ptrdiff_t>(l.width)) continue;
          double* dst = gin.data() + (static_cast<std::size_t>(y) * l.width +
                                      static_cast<std::size_t>(x)) * l.channels;
          const double* src = gpatch.data() + (u * geom.kernel_w + v) * l.channels;
          for (std::size_t c = 0; c < l.channels; ++c) dst[c] += src[c];
        }
      }
    }
  }
  Tensor gi(input.shape());
  for (std::size_t i = 0; i < gin.size(); ++i) gi[i] = static_cast<float>(gin[i]);
  grads.input = std::move(gi);
  return grads;
}

}  // namespace geoconv
