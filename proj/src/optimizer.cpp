#include "geoconv/optimizer.hpp"

#include <cmath>
#include <string>

namespace geoconv {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

void optimizer_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                    OptimizerState& state, const OptimizerConfig& config) {
  if (params.size() != grads.size()) {
    throw DimensionError("optimizer received " + std::to_string(params.size()) +
                         " parameters but " + std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(grads[i], params[i]->shape(), "gradient " + std::to_string(i));
    if (!all_finite(grads[i])) {
      throw NumericError("non-finite gradient for parameter " + std::to_string(i));
    }
  }
  if (state.first.size() != params.size()) {
    state.first.clear();
    state.second.clear();
    for (const Tensor* p : params) {
      state.first.emplace_back(p->shape());
      state.second.emplace_back(p->shape());
    }
  }
  ++state.timestep;

  const double lr = config.learning_rate;
  if (config.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->data();
      auto v = state.first[i].data();
      const auto g = grads[i].data();
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double vel = config.momentum * double(v[j]) + double(g[j]);
        v[j] = static_cast<float>(vel);
        p[j] = static_cast<float>(double(p[j]) - lr * vel);
      }
    }
    return;
  }

  const double t = static_cast<double>(state.timestep);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto m = state.first[i].data();
    auto v = state.second[i].data();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = config.beta1 * double(m[j]) + (1.0 - config.beta1) * gj;
      const double vj = config.beta2 * double(v[j]) + (1.0 - config.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double step = lr * (mj / c1) / (std::sqrt(vj / c2) + config.epsilon);
      p[j] = static_cast<float>(double(p[j]) - step);
    }
  }
}

}  // namespace geoconv
