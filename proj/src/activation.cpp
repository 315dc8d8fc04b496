#include "geoconv/activation.hpp"

#include <cmath>
#include <string>

namespace geoconv {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kNone:
      return "none";
    case Activation::kRelu:
      return "relu";
    case Activation::kLeakyRelu:
      return "leaky_relu";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "none";
}

Activation parse_activation(std::string_view name) {
  for (auto a : {Activation::kNone, Activation::kRelu, Activation::kLeakyRelu, Activation::kSigmoid}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

namespace {

float sigmoid(float x) { return static_cast<float>(1.0 / (1.0 + std::exp(-double(x)))); }

}  // namespace

Tensor activate(const Tensor& pre, Activation a) {
  if (a == Activation::kNone) return pre;
  Tensor out(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const float x = pre[i];
    switch (a) {
      case Activation::kRelu:
        out[i] = x > 0.0f ? x : 0.0f;
        break;
      case Activation::kLeakyRelu:
        out[i] = x > 0.0f ? x : kLeakyReluSlope * x;
        break;
      case Activation::kSigmoid:
        out[i] = sigmoid(x);
        break;
      case Activation::kNone:
        break;
    }
  }
  return out;
}

Tensor activation_backward(const Tensor& pre, const Tensor& upstream, Activation a) {
  require_shape(upstream, pre.shape(), "activation upstream gradient");
  if (a == Activation::kNone) return upstream;
  Tensor out(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const float x = pre[i];
    switch (a) {
      case Activation::kRelu:
        out[i] = x > 0.0f ? upstream[i] : 0.0f;
        break;
      case Activation::kLeakyRelu:
        out[i] = x > 0.0f ? upstream[i] : kLeakyReluSlope * upstream[i];
        break;
      case Activation::kSigmoid: {
        const double s = 1.0 / (1.0 + std::exp(-double(x)));
        out[i] = static_cast<float>(double(upstream[i]) * s * (1.0 - s));
        break;
      }
      case Activation::kNone:
        break;
    }
  }
  return out;
}

}  // namespace geoconv
