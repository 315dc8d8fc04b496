#include "geoconv/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace geoconv {

LossResult euclidean_loss(const Tensor& pred, const Tensor& target) {
  require_shape(target, pred.shape(), "target");
  if (!all_finite(target)) throw NumericError("euclidean_loss: non-finite target");
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = double(pred[i]) - double(target[i]);
    sq += d * d;
  }
  LossResult r{std::sqrt(sq), Tensor(pred.shape())};
  if (r.value > 0.0) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
      r.grad[i] = static_cast<float>((double(pred[i]) - double(target[i])) / r.value);
    }
  }
  return r;
}

namespace {

std::vector<double> softmax_d(const Tensor& logits) {
  const double m = *std::max_element(logits.data().begin(), logits.data().end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(double(logits[i]) - m);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace

Tensor softmax(const Tensor& logits) {
  const auto p = softmax_d(logits);
  Tensor out(logits.shape());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = static_cast<float>(p[i]);
  return out;
}

LossResult cross_entropy(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw DimensionError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(logits.size()) + " logits");
  }
  const double m = *std::max_element(logits.data().begin(), logits.data().end());
  double z = 0.0;
  for (float v : logits.data()) z += std::exp(double(v) - m);
  const double log_z = m + std::log(z);
  LossResult r{log_z - double(logits[label]), Tensor(logits.shape())};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = std::exp(double(logits[i]) - log_z);
    r.grad[i] = static_cast<float>(p - (i == label ? 1.0 : 0.0));
  }
  return r;
}

}  // namespace geoconv
