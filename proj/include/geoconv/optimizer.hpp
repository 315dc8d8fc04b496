#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "geoconv/tensor.hpp"

namespace geoconv {

enum class OptimizerKind { kSgd, kAdam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter moment buffers. `first` doubles as the SGD velocity.
struct OptimizerState {
  std::size_t timestep = 0;
  std::vector<Tensor> first;
  std::vector<Tensor> second;
};

/// Applies one update in place. Throws NumericError naming the parameter
/// index if any gradient is non-finite; parameters are left untouched then.
void optimizer_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                    OptimizerState& state, const OptimizerConfig& config);

}  // namespace geoconv
