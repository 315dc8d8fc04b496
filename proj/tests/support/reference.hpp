#pragma once

// Float64 reference implementations used as finite-difference oracles. They
// are written from the textbook definitions and share no code with the
// library kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "geoconv/rng.hpp"
#include "geoconv/tensor.hpp"

namespace ref {

using Vec = std::vector<double>;

inline Vec to_vec(const geoconv::Tensor& t) { return Vec(t.data().begin(), t.data().end()); }

struct Conv {
  std::size_t h, w, cin, kh, kw, cout, stride, pad;
  std::size_t out_h() const { return (h + 2 * pad - kh) / stride + 1; }
  std::size_t out_w() const { return (w + 2 * pad - kw) / stride + 1; }
};

// Cross-correlation, HWC input, [KH,KW,Cin,Cout] filters, zero padding.
inline Vec conv(const Conv& c, const Vec& in, const Vec& f, const Vec& bias) {
  Vec out(c.out_h() * c.out_w() * c.cout, 0.0);
  for (std::size_t oy = 0; oy < c.out_h(); ++oy)
    for (std::size_t ox = 0; ox < c.out_w(); ++ox)
      for (std::size_t o = 0; o < c.cout; ++o) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (std::size_t u = 0; u < c.kh; ++u)
          for (std::size_t v = 0; v < c.kw; ++v) {
            const long y = long(oy * c.stride + u) - long(c.pad);
            const long x = long(ox * c.stride + v) - long(c.pad);
            if (y < 0 || x < 0 || y >= long(c.h) || x >= long(c.w)) continue;
            for (std::size_t k = 0; k < c.cin; ++k)
              acc += in[(std::size_t(y) * c.w + std::size_t(x)) * c.cin + k] *
                     f[((u * c.kw + v) * c.cin + k) * c.cout + o];
          }
        out[(oy * c.out_w() + ox) * c.cout + o] = acc;
      }
  return out;
}

inline double coord(long index, std::size_t extent) {
  return extent <= 1 ? 0.0 : double(index) / double(extent - 1);
}

// Appends `planes` positional planes (1: geo with shift, 2: row/col) and pads
// by `pad`: zeros for data, linear extension for positional planes.
inline Vec augment(const Vec& in, std::size_t h, std::size_t w, std::size_t c, std::size_t planes,
                   double shift, std::size_t pad) {
  const std::size_t hp = h + 2 * pad, wp = w + 2 * pad, cp = c + planes;
  Vec out(hp * wp * cp, 0.0);
  for (std::size_t i = 0; i < hp; ++i)
    for (std::size_t j = 0; j < wp; ++j) {
      const long y = long(i) - long(pad), x = long(j) - long(pad);
      double* px = &out[(i * wp + j) * cp];
      if (y >= 0 && x >= 0 && y < long(h) && x < long(w))
        for (std::size_t k = 0; k < c; ++k) px[k] = in[(std::size_t(y) * w + std::size_t(x)) * c + k];
      if (planes == 1) px[c] = coord(y, h) + coord(x, w) + shift;
      if (planes == 2) {
        px[c] = coord(y, h);
        px[c + 1] = coord(x, w);
      }
    }
  return out;
}

enum class Act { kNone, kRelu, kLeaky, kSigmoid };

inline double act(double x, Act a) {
  switch (a) {
    case Act::kRelu: return x > 0 ? x : 0.0;
    case Act::kLeaky: return x > 0 ? x : 0.2 * x;
    case Act::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Act::kNone: break;
  }
  return x;
}

inline Vec dense(const Vec& x, const Vec& w, const Vec& b) {
  Vec y(b);
  const std::size_t n_in = x.size();
  for (std::size_t o = 0; o < b.size(); ++o)
    for (std::size_t i = 0; i < n_in; ++i) y[o] += w[o * n_in + i] * x[i];
  return y;
}

inline double euclid(const Vec& p, const Vec& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
  return std::sqrt(s);
}

inline double xent(const Vec& z, std::size_t label) {
  double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s) - z[label];
}

// Central difference of f with respect to every entry of x.
inline Vec finite_difference(const std::function<double(const Vec&)>& f, Vec x, double eps = 1e-3) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f(x);
    x[i] = keep - eps;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

// Worst |a - b| / max(|a|, |b|, 1e-3 * max|b|): relative error with a floor
// tied to the gradient's own scale so exact zeros do not divide by zero.
inline double max_rel_err(const geoconv::Tensor& analytic, const Vec& numeric) {
  double scale = 0.0;
  for (double v : numeric) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double a = analytic[i], b = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(b), 1e-3 * scale, 1e-12});
    worst = std::max(worst, std::abs(a - b) / denom);
  }
  return worst;
}

inline geoconv::Tensor random_tensor(geoconv::Shape shape, std::uint64_t seed, double lo = -1.0,
                                     double hi = 1.0) {
  geoconv::Rng rng(seed);
  geoconv::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(geoconv::uniform(rng, lo, hi));
  return t;
}

}  // namespace ref
